#include "nhm/oracle.hpp"

#include <cmath>
#include <vector>

#include "nhm/greens.hpp"

namespace nhm {

namespace {

// Packed upper triangle of a symmetric tensor: xx xy xz yy yz zz.
using Packed = std::array<cplx, 6>;

void accumulate(const Lattice2D& lat, const Vec2& k, double q, const Vec2& b, const std::vector<double>& eps,
                double rmax, long m, long nmax, std::vector<Packed>& acc) {
  const int ne = int(eps.size());
  for (long n = -nmax; n <= nmax; ++n) {
    const Vec2 r = lat.site(m, n) + b;
    const double d = r.norm();
    if (d > rmax || d < 1e-12) continue;
    const Tensor3 G = green_real(Vec3(r.x(), r.y(), 0.0), q) * std::exp(-I1 * k.dot(r));
    const Packed p{G(0, 0), G(0, 1), G(0, 2), G(1, 1), G(1, 2), G(2, 2)};
    double damp = std::exp(-eps[0] * d);
    const double step = damp;
    for (int j = 0; j < ne; ++j) {
      for (int c = 0; c < 6; ++c) acc[j][c] += damp * p[c];
      damp *= step;
    }
  }
}

}  // namespace

Tensor3 realspace_green_sum(const Lattice2D& lat, const Vec2& k, double q, const Vec2& b, const OracleOptions& opt) {
  validate(lat);
  const double h = opt.h > 0 ? opt.h : 0.08 * q;
  if (opt.n < 2) throw DomainError("oracle needs at least two damping values");
  std::vector<double> eps(opt.n);
  for (int j = 0; j < opt.n; ++j) eps[j] = (j + 1) * h;
  const double rmax = opt.cutoff / h;
  // bounding box in lattice coordinates
  Eigen::Matrix2d A;
  A.col(0) = lat.a1;
  A.col(1) = lat.a2;
  const Eigen::Matrix2d Ai = A.inverse();
  const long mmax = long(std::ceil(rmax * Ai.row(0).norm())) + 1;
  const long nmax = long(std::ceil(rmax * Ai.row(1).norm())) + 1;

  std::vector<Packed> total(opt.n, Packed{});
  if (opt.exec == Exec::parallel) {
#pragma omp parallel
    {
      std::vector<Packed> acc(opt.n, Packed{});
#pragma omp for schedule(dynamic, 4)
      for (long m = -mmax; m <= mmax; ++m) accumulate(lat, k, q, b, eps, rmax, m, nmax, acc);
#pragma omp critical
      for (int j = 0; j < opt.n; ++j)
        for (int c = 0; c < 6; ++c) total[j][c] += acc[j][c];
    }
  } else {
    for (long m = -mmax; m <= mmax; ++m) accumulate(lat, k, q, b, eps, rmax, m, nmax, total);
  }

  // Neville extrapolation to eps = 0, component-wise
  Packed r{};
  for (int c = 0; c < 6; ++c) {
    std::vector<cplx> P(opt.n);
    for (int j = 0; j < opt.n; ++j) P[j] = total[j][c];
    for (int lev = 1; lev < opt.n; ++lev)
      for (int j = 0; j + lev < opt.n; ++j)
        P[j] = (eps[j + lev] * P[j] - eps[j] * P[j + 1]) / (eps[j + lev] - eps[j]);
    r[c] = P[0];
  }
  Tensor3 T;
  T << r[0], r[1], r[2], r[1], r[3], r[4], r[2], r[4], r[5];
  return T;
}

}  // namespace nhm
