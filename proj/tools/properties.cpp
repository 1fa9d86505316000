// Standalone property checks. One line per property, nonzero exit if any fails.
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nhm/bands.hpp"
#include "nhm/greens.hpp"
#include "nhm/scatter.hpp"
#include "nhm/special.hpp"

using namespace nhm;

namespace {

struct Property {
  const char* name;
  double tol;
  std::function<double()> worst;
};

double rel(const Tensor3& a, const Tensor3& b) { return (a - b).norm() / std::max(1e-300, b.norm()); }

Vec3 random_r(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (;;) {
    Vec3 r(u(rng), u(rng), u(rng));
    if (r.norm() > 0.05) return r;
  }
}

Vec2 random_k_off_cone(std::mt19937_64& rng, double kmax) {
  std::uniform_real_distribution<double> u(-kmax, kmax);
  for (;;) {
    Vec2 k(u(rng), u(rng));
    if (std::abs(k.norm() - q0) > 0.05 * q0) return k;
  }
}

double green_symmetry() {
  std::mt19937_64 rng(101);
  double w = 0;
  for (int t = 0; t < 200; ++t) {
    const Tensor3 g = green_real(random_r(rng), q0);
    w = std::max(w, rel(g.transpose(), g));
    const Tensor3 h = green_recip_2d(random_k_off_cone(rng, 3 * q0), q0);
    w = std::max(w, rel(h.transpose(), h));
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const Tensor3 c = green_recip_1d(u(rng) * q0, 0.05 + std::abs(u(rng)), q0, Vec2(1, 0));
    w = std::max(w, rel(c.transpose(), c));
  }
  return w;
}

double green_decoupling() {
  std::mt19937_64 rng(102);
  double w = 0;
  for (int t = 0; t < 200; ++t) {
    const Tensor3 h = green_recip_2d(random_k_off_cone(rng, 3 * q0), q0);
    for (int i = 0; i < 2; ++i) w = std::max({w, std::abs(h(i, 2)), std::abs(h(2, i))});
  }
  return w;
}

double green_reciprocity() {
  std::mt19937_64 rng(103);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double w = 0;
  for (int t = 0; t < 200; ++t) {
    const double k = u(rng) * q0, y = u(rng);
    if (std::abs(std::abs(k) - q0) < 0.05 * q0 || std::abs(y) < 0.05) continue;
    const Vec2 e = Vec2(std::cos(u(rng)), std::sin(u(rng))).normalized();
    w = std::max(w, rel(green_recip_1d(k, y, q0, e), green_recip_1d(-k, -y, q0, e).transpose()));
  }
  return w;
}

double bernoulli_shift() {
  double w = 0;
  for (int n = 1; n <= 8; ++n)
    for (int i = 0; i <= 80; ++i) {
      const double x = -2.0 + 0.05 * i;
      const double lhs = bernoulli_poly(n, x + 1) - bernoulli_poly(n, x);
      w = std::max(w, std::abs(lhs - n * std::pow(x, n - 1)));
    }
  return w;
}

// x^2 f'' + x f' + s (x^2 - s n^2) f relative to (x^2 + n^2) |f|, s = +1 for Hankel, -1 for K
template <class F>
double bessel_ode(F f, int n, double sign) {
  double w = 0;
  for (int i = 0; i <= 60; ++i) {
    const double x = 0.5 + 0.25 * i, h = 2e-3 * std::min(x, 1.0);
    const auto fm2 = f(n, x - 2 * h), fm1 = f(n, x - h), f0 = f(n, x), fp1 = f(n, x + h), fp2 = f(n, x + 2 * h);
    const auto d1 = (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12 * h);
    const auto d2 = (-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12 * h * h);
    const auto r = x * x * d2 + x * d1 + sign * (x * x - sign * n * n) * f0;
    w = std::max(w, std::abs(r) / ((x * x + n * n) * std::abs(f0)));
  }
  return w;
}

double hankel_ode() {
  double w = 0;
  for (int n = 0; n <= 2; ++n) w = std::max(w, bessel_ode([](int m, double x) { return hankel1(m, x); }, n, 1.0));
  return w;
}

double bessel_k_ode() {
  double w = 0;
  for (int n = 0; n <= 2; ++n) w = std::max(w, bessel_ode([](int m, double x) { return bessel_k(m, x); }, n, -1.0));
  return w;
}

// partial sums of sum e^{in theta}/n^s, then repeated pairwise averaging (Euler's transform)
cplx euler_polylog(int s, double theta) {
  const int N = 4000, rounds = 2500;
  std::vector<cplx> S(N);
  cplx acc = 0;
  for (int n = 1; n <= N; ++n) {
    acc += std::exp(I1 * (n * theta)) / std::pow(double(n), s);
    S[std::size_t(n - 1)] = acc;
  }
  for (int r = 0; r < rounds; ++r)
    for (int i = 0; i + 1 < N - r; ++i) S[std::size_t(i)] = 0.5 * (S[std::size_t(i)] + S[std::size_t(i + 1)]);
  return S[std::size_t(N - rounds - 1)];
}

double polylog_direct() {
  double w = 0;
  for (int s = 1; s <= 3; ++s)
    for (int j = 0; j <= 20; ++j) {
      const double th = 0.3 + j * (two_pi - 0.6) / 20;
      w = std::max(w, std::abs(polylog_unit_circle(s, th) - euler_polylog(s, th)));
    }
  return w;
}

double projector_idempotence() {
  std::mt19937_64 rng(104);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double w = 0;
  for (int t = 0; t < 200; ++t) {
    const PolarizationBasis b = polarization_basis(0.5 * pi * u(rng), two_pi * u(rng));
    const Eigen::Matrix3d P = b.e_p * b.e_p.transpose() + b.e_s * b.e_s.transpose();
    w = std::max({w, (P * P - P).norm(), std::abs(P.trace() - 2.0), (P * b.k_hat).norm()});
  }
  // the far-field kernel is a scalar times the same projector
  const ReciprocalBasis rb = reciprocal_basis(Lattice2D::square(0.2));
  for (const Vec2& kp : {Vec2(0.0, 0.0), Vec2(0.3 * q0, -0.2 * q0), Vec2(-0.6 * q0, 0.5 * q0)}) {
    const double kz = std::sqrt(q0 * q0 - kp.squaredNorm());
    const Vec3 k(kp.x(), kp.y(), kz);
    const Tensor3 g = green_farfield_fourier(k, Vec3(0.1, 0.2, 1.0), rb, q0);
    const Tensor3 P = 2.0 * g / g.trace();
    w = std::max(w, (P * P - P).norm());
  }
  return w;
}

double resolvent_identity() {
  std::mt19937_64 rng(105);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  DipoleScene s;
  while (s.positions.size() < 8) {
    const Vec3 r(u(rng), u(rng), 0.0);
    bool ok = true;
    for (const auto& p : s.positions) ok = ok && (p - r).norm() > 0.05;
    if (ok) s.positions.push_back(r);
  }
  double w = 0;
  for (int dof : {2, 3})
    for (double muB : {0.0, 0.5}) {
      s.pol_dof = dof;
      s.muB = muB;
      const MatXc H = interaction_hamiltonian(s);
      for (double d : {-1.0, -0.5, 0.0, 0.5, 2.0}) {
        const MatXc lhs = inverse_polarizability_matrix(s, d).inverse();
        MatXc A = -H;
        A.diagonal().array() += d;
        const MatXc rhs = -3.0 / (8.0 * pi * pi) * A.inverse();
        w = std::max(w, (lhs - rhs).norm() / rhs.norm());
      }
    }
  return w;
}

double sigma_x_symmetry() {
  Mat2c sx;
  sx << 0, 1, 1, 0;
  std::mt19937_64 rng(106);
  double w = 0;
  for (const auto& lat : {Lattice2D::square(0.2), Lattice2D::rectangular(0.2, 1.1), Lattice2D::rectangular(0.2, 1.05)})
    for (int t = 0; t < 8; ++t) {
      const Mat2c h = heff_circular(lat, random_k_off_cone(rng, 0.95 * q0), q0);
      w = std::max(w, (sx * h.transpose() * sx - h).norm() / h.norm());
    }
  return w;
}

}  // namespace

int main() {
  const std::vector<Property> props = {
      {"green tensors symmetric", 1e-12, green_symmetry},
      {"reciprocal kernel in-plane/z decoupling", 0.0, green_decoupling},
      {"ribbon kernel reciprocity", 1e-12, green_reciprocity},
      {"bernoulli shift identity", 1e-10, bernoulli_shift},
      {"hankel ode residual", 1e-8, hankel_ode},
      {"modified bessel ode residual", 1e-8, bessel_k_ode},
      {"polylog vs accelerated direct sum", 1e-9, polylog_direct},
      {"projector idempotence", 1e-12, projector_idempotence},
      {"resolvent identity", 1e-10, resolvent_identity},
      {"sigma_x transpose symmetry", 1e-10, sigma_x_symmetry},
  };
  int failed = 0;
  for (const auto& p : props) {
    double w;
    try {
      w = p.worst();
    } catch (const std::exception& e) {
      std::printf("FAIL  %-42s error: %s\n", p.name, e.what());
      ++failed;
      continue;
    }
    const bool ok = w <= p.tol;
    failed += !ok;
    std::printf("%s  %-42s worst %.3e  tol %.0e\n", ok ? "PASS" : "FAIL", p.name, w, p.tol);
  }
  return failed ? 1 : 0;
}
