#pragma once

#include <array>
#include <cmath>

#include "nhm/core.hpp"

namespace nhm {

// Index of the coefficient of dx^i dy^j in a bivariate table of total degree <= K.
constexpr int tri_index(int i, int j) { return (i + j) * (i + j + 1) / 2 + j; }
constexpr int tri_size(int K) { return (K + 1) * (K + 2) / 2; }

// Truncated bivariate Taylor series sum c_ij dx^i dy^j, i + j <= K.
class Jet2 {
 public:
  static constexpr int Kmax = 14;

  explicit Jet2(int K = 0, cplx c0 = 0.0) : K_(K) {
    c_.fill(0.0);
    c_[0] = c0;
  }
  static Jet2 variable(int K, cplx x0, int which) {
    Jet2 j(K, x0);
    if (K >= 1) j.c_[which == 0 ? tri_index(1, 0) : tri_index(0, 1)] = 1.0;
    return j;
  }

  int order() const { return K_; }
  cplx& operator[](int idx) { return c_[idx]; }
  cplx operator[](int idx) const { return c_[idx]; }
  cplx coeff(int i, int j) const { return c_[tri_index(i, j)]; }

  // d^{i+j} f / dx^i dy^j at the expansion point
  cplx partial(int i, int j) const { return fact(i) * fact(j) * coeff(i, j); }

  Jet2& operator+=(const Jet2& o) {
    for (int n = 0; n < tri_size(K_); ++n) c_[n] += o.c_[n];
    return *this;
  }
  Jet2& operator-=(const Jet2& o) {
    for (int n = 0; n < tri_size(K_); ++n) c_[n] -= o.c_[n];
    return *this;
  }
  Jet2& operator*=(cplx s) {
    for (int n = 0; n < tri_size(K_); ++n) c_[n] *= s;
    return *this;
  }
  friend Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
  friend Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
  friend Jet2 operator*(Jet2 a, cplx s) { return a *= s; }
  friend Jet2 operator*(cplx s, Jet2 a) { return a *= s; }
  friend Jet2 operator+(Jet2 a, cplx s) {
    a.c_[0] += s;
    return a;
  }
  friend Jet2 operator*(const Jet2& a, const Jet2& b) {
    Jet2 r(a.K_);
    const int K = a.K_;
    for (int d1 = 0; d1 <= K; ++d1)
      for (int j1 = 0; j1 <= d1; ++j1) {
        const cplx x = a.c_[tri_index(d1 - j1, j1)];
        if (x == 0.0) continue;
        for (int d2 = 0; d1 + d2 <= K; ++d2)
          for (int j2 = 0; j2 <= d2; ++j2) r.c_[tri_index(d1 - j1 + d2 - j2, j1 + j2)] += x * b.c_[tri_index(d2 - j2, j2)];
      }
    return r;
  }

  // 1/a, requires a(0) != 0
  Jet2 inverse() const {
    Jet2 r(K_);
    const cplx a0 = c_[0];
    r.c_[0] = 1.0 / a0;
    for (int d = 1; d <= K_; ++d)
      for (int j = 0; j <= d; ++j) {
        const int i = d - j;
        cplx s = 0.0;
        for (int k = 0; k <= i; ++k)
          for (int l = 0; l <= j; ++l) {
            if (k == 0 && l == 0) continue;
            s += c_[tri_index(k, l)] * r.c_[tri_index(i - k, j - l)];
          }
        r.c_[tri_index(i, j)] = -s / a0;
      }
    return r;
  }

  // principal square root, requires a(0) != 0
  Jet2 sqrt() const {
    Jet2 r(K_);
    const cplx s0 = std::sqrt(c_[0]);
    r.c_[0] = s0;
    for (int d = 1; d <= K_; ++d)
      for (int j = 0; j <= d; ++j) {
        const int i = d - j;
        cplx s = 0.0;
        for (int k = 0; k <= i; ++k)
          for (int l = 0; l <= j; ++l) {
            if ((k == 0 && l == 0) || (k == i && l == j)) continue;
            s += r.c_[tri_index(k, l)] * r.c_[tri_index(i - k, j - l)];
          }
        r.c_[tri_index(i, j)] = (c_[tri_index(i, j)] - s) / (2.0 * s0);
      }
    return r;
  }

  static double fact(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  }

 private:
  int K_;
  std::array<cplx, tri_size(Kmax)> c_;
};

}  // namespace nhm
