#include "nhm/special.hpp"

#include <array>
#include <cmath>
#include <string>

namespace nhm {

namespace {

struct Rational {
  long long num;
  long long den;
};

constexpr std::array<Rational, 17> kBernoulli = {{{1, 1},
                                                  {-1, 2},
                                                  {1, 6},
                                                  {0, 1},
                                                  {-1, 30},
                                                  {0, 1},
                                                  {1, 42},
                                                  {0, 1},
                                                  {-1, 30},
                                                  {0, 1},
                                                  {5, 66},
                                                  {0, 1},
                                                  {-691, 2730},
                                                  {0, 1},
                                                  {7, 6},
                                                  {0, 1},
                                                  {-3617, 510}}};

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

void check_bessel_args(int n, double x, const char* what) {
  if (n < 0 || n > 2) throw DomainError(std::string(what) + ": order must be 0, 1 or 2");
  if (!(x > 0)) throw DomainError(std::string(what) + ": argument must be positive");
}

// zeta(s) for integer s >= 2 by direct summation with an Euler-Maclaurin tail.
double zeta_direct(int s) {
  if (s >= 40) return 1.0 + std::pow(2.0, -s) + std::pow(3.0, -s);
  const int N = 64;
  double sum = 0.0;
  for (int n = N - 1; n >= 1; --n) sum += std::pow(double(n), -s);
  const double Nd = N;
  const double ps = std::pow(Nd, -s);
  const double d = s;
  double tail = Nd * ps / (d - 1) + 0.5 * ps + d * ps / (12.0 * Nd);
  tail -= d * (d + 1) * (d + 2) * ps / (720.0 * Nd * Nd * Nd);
  tail += d * (d + 1) * (d + 2) * (d + 3) * (d + 4) * ps / (30240.0 * std::pow(Nd, 5));
  return sum + tail;
}

double zeta_even(int m) { return zeta_direct(2 * m); }

}  // namespace

double bernoulli_number(int n) {
  if (n < 0 || n > 2 * M_max) throw DomainError("bernoulli_number: order out of range");
  return double(kBernoulli[n].num) / double(kBernoulli[n].den);
}

double bernoulli_poly(int n, double x) {
  if (n < 0 || n > 2 * M_max) throw DomainError("bernoulli_poly: order out of range");
  double r = 0.0;
  for (int k = 0; k <= n; ++k) r += binom(n, k) * bernoulli_number(k) * std::pow(x, n - k);
  return r;
}

cplx hankel1(int n, double x) {
  check_bessel_args(n, x, "hankel1");
  return {std::cyl_bessel_j(double(n), x), std::cyl_neumann(double(n), x)};
}

double bessel_k(int n, double x) {
  check_bessel_args(n, x, "bessel_k");
  if (x > 700.0) return 0.0;
  return std::cyl_bessel_k(double(n), x);
}

double zeta_int(int n) {
  if (n == 1) throw DomainError("zeta(1) diverges");
  if (n == 0) return -0.5;
  if (n == 2) return pi * pi / 6.0;
  if (n == 3) return 1.2020569031595942854;
  if (n > 0) {
    return zeta_direct(n);
  }
  // negative integers: zeta(-2m) = 0, zeta(1-2m) = (-1)^m 2 (2m-1)! zeta(2m) / (2 pi)^{2m}
  const int a = -n;
  if (a % 2 == 0) return 0.0;
  const int m = (a + 1) / 2;
  double f = 2.0 * zeta_even(m);
  for (int i = 1; i <= 2 * m - 1; ++i) f *= double(i) / two_pi;
  f /= two_pi;
  return (m % 2 == 0) ? f : -f;
}

cplx polylog_unit_circle(int s, double theta) {
  if (s < 1 || s > 3) throw DomainError("polylog_unit_circle: s must be 1, 2 or 3");
  if (!std::isfinite(theta)) throw DomainError("polylog_unit_circle: non-finite angle");
  double t = std::remainder(theta, two_pi);  // (-pi, pi]
  if (t == -pi) t = pi;
  if (s == 1) {
    if (std::abs(t) < 1e-300) throw SingularityError("polylog Li_1(1) diverges");
    return -std::log(1.0 - std::exp(I1 * t));
  }
  // Li_s(e^mu) = sum_{k != s-1} zeta(s-k) mu^k / k! + mu^{s-1}/(s-1)! (H_{s-1} - log(-mu)),
  // convergent for |mu| < 2 pi; here |mu| <= pi.
  const cplx mu = I1 * t;
  cplx sum = 0.0;
  cplx mu_k = 1.0;  // mu^k / k!
  for (int k = 0; k <= s; ++k) {
    if (k > 0) mu_k *= mu / double(k);
    if (k == s - 1) {
      if (t != 0.0) {
        double H = 0.0;
        for (int j = 1; j <= s - 1; ++j) H += 1.0 / j;
        const cplx lg(std::log(std::abs(t)), t > 0 ? -pi / 2 : pi / 2);  // log(-i t)
        sum += mu_k * (H - lg);
      }
      continue;
    }
    sum += zeta_int(s - k) * mu_k;
  }
  // k = s - 1 + 2m for m >= 1, where s - k = 1 - 2m.
  // term = zeta(1-2m) mu^k / k!  with zeta(1-2m) = (-1)^m 2 (2m-1)! zeta(2m)/(2pi)^{2m}.
  const double x = t / two_pi;
  for (int m = 1; m <= 200; ++m) {
    const int k = s - 1 + 2 * m;
    // (2m-1)! / k! = 1 / [(2m)(2m+1)...(k)]
    double ratio = 1.0;
    for (int j = 2 * m; j <= k; ++j) ratio /= double(j);
    const double z2m = zeta_even(m);
    // mu^k = (i t)^k, (2pi)^{-2m} t^{2m} = x^{2m}
    const double mag = 2.0 * z2m * ratio * std::pow(x, 2 * m) * std::pow(t, s - 1);
    cplx ik = std::pow(I1, k);
    const cplx term = ((m % 2 == 0) ? 1.0 : -1.0) * mag * ik;
    sum += term;
    if (std::abs(term) < 1e-18 * std::max(1.0, std::abs(sum)) && m > 2) break;
  }
  return sum;
}

}  // namespace nhm
