#include "nhm/lattice.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace nhm {

Lattice2D Lattice2D::square(double a) { return rectangular(a, 1.0); }

Lattice2D Lattice2D::rectangular(double a, double eta) {
  if (!(a > 0) || !(eta > 0)) throw DomainError("rectangular lattice needs a > 0 and eta > 0");
  Lattice2D l;
  l.a1 = Vec2(a / eta, 0.0);
  l.a2 = Vec2(0.0, a);
  return l;
}

Lattice2D Lattice2D::triangular(double a) {
  if (!(a > 0)) throw DomainError("triangular lattice needs a > 0");
  Lattice2D l;
  l.a1 = Vec2(a, 0.0);
  l.a2 = Vec2(0.5 * a, 0.5 * std::sqrt(3.0) * a);
  return l;
}

Lattice2D Lattice2D::honeycomb(double a) {
  Lattice2D l = triangular(a);
  l.offsets = {Vec2::Zero(), (l.a1 + l.a2) / 3.0};
  return l;
}

Lattice2D Lattice2D::kagome(double a) {
  Lattice2D l = triangular(a);
  l.offsets = {Vec2::Zero(), 0.5 * l.a1, 0.5 * l.a2};
  return l;
}

void validate(const Lattice2D& lat) {
  const double cross = lat.a1.x() * lat.a2.y() - lat.a1.y() * lat.a2.x();
  const double scale = lat.a1.norm() * lat.a2.norm();
  if (!(std::abs(cross) > 1e-12 * scale)) throw DomainError("degenerate lattice cell (a1 x a2 = 0)");
  if (lat.offsets.empty()) return;
  Eigen::Matrix2d A;
  A.col(0) = lat.a1;
  A.col(1) = lat.a2;
  const Eigen::Matrix2d Ainv = A.inverse();
  for (std::size_t i = 0; i < lat.offsets.size(); ++i) {
    Vec2 f = Ainv * lat.offsets[i];
    for (int c = 0; c < 2; ++c)
      if (f[c] < -1e-12 || f[c] >= 1.0 - 1e-12) throw DomainError("sublattice offset outside the primitive cell");
    for (std::size_t j = 0; j < i; ++j) {
      Vec2 d = Ainv * (lat.offsets[i] - lat.offsets[j]);
      if (std::abs(d[0] - std::round(d[0])) < 1e-12 && std::abs(d[1] - std::round(d[1])) < 1e-12)
        throw DomainError("two sublattice offsets differ by a lattice vector");
    }
  }
}

ReciprocalBasis reciprocal_basis(const Lattice2D& lat) {
  validate(lat);
  const double cross = lat.a1.x() * lat.a2.y() - lat.a1.y() * lat.a2.x();
  ReciprocalBasis rb;
  // a2 x e_z = (a2y, -a2x), e_z x a1 = (-a1y, a1x)
  rb.b1 = two_pi * Vec2(lat.a2.y(), -lat.a2.x()) / cross;
  rb.b2 = two_pi * Vec2(-lat.a1.y(), lat.a1.x()) / cross;
  rb.cell_area = std::abs(cross);
  return rb;
}

bool in_light_cone(const Vec2& k, double q) { return k.norm() <= q - tol_lc(q); }

double cone_gap(const ReciprocalBasis& rb, const Vec2& k, double q, Vec2* nearest_G) {
  Eigen::Matrix2d B;
  B.col(0) = rb.b1;
  B.col(1) = rb.b2;
  const Vec2 c = B.inverse() * (-k);
  const double bmin = std::min(rb.b1.norm(), rb.b2.norm());
  const int span = int(std::ceil((q + k.norm()) / bmin)) + 2;
  double best = std::numeric_limits<double>::infinity();
  for (int m = int(std::floor(c[0])) - span; m <= int(std::ceil(c[0])) + span; ++m)
    for (int n = int(std::floor(c[1])) - span; n <= int(std::ceil(c[1])) + span; ++n) {
      const Vec2 G = m * rb.b1 + n * rb.b2;
      const double d = std::abs((G + k).norm() - q);
      if (d < best) {
        best = d;
        if (nearest_G) *nearest_G = G;
      }
    }
  return best;
}

namespace {
// returns g and sets x, y with a*x + b*y = g
long ext_gcd(long a, long b, long& x, long& y) {
  if (b == 0) {
    x = a >= 0 ? 1 : -1;
    y = 0;
    return std::abs(a);
  }
  long x1, y1;
  const long g = ext_gcd(b, a % b, x1, y1);
  x = y1;
  y = x1 - (a / b) * y1;
  return g;
}
}  // namespace

double ChainDecomposition::b_par(int m, int n) const {
  double b = std::fmod(double(m - n) * par_step, a_par);
  if (b < 0) b += a_par;
  if (b >= a_par * (1.0 - 1e-15)) b = 0.0;
  return b;
}

Vec2 ChainDecomposition::r_perp(int m, int n) const { return r_perp_signed(m, n) * e_perp; }

ChainDecomposition ribbon_decomposition(const Lattice2D& lat, std::array<int, 2> direction, int L) {
  validate(lat);
  if (L < 2) throw DomainError("ribbon needs L >= 2 chains");
  const long n1 = direction[0], n2 = direction[1];
  if (n1 == 0 && n2 == 0) throw DomainError("ribbon direction must be nonzero");
  if (std::gcd(n1, n2) != 1) throw DomainError("ribbon direction is not a primitive lattice vector");

  ChainDecomposition cd;
  cd.direction = direction;
  cd.L = L;
  cd.d_par = double(n1) * lat.a1 + double(n2) * lat.a2;
  cd.a_par = cd.d_par.norm();
  cd.e_par = cd.d_par / cd.a_par;
  cd.e_perp = Vec2(-cd.e_par.y(), cd.e_par.x());

  // (u, v) with n1*v - n2*u = 1 makes {d_par, s} a unimodular basis.
  long x, y;
  ext_gcd(n1, n2, x, y);  // n1*x + n2*y = 1
  long u = -y, v = x;
  Vec2 s = double(u) * lat.a1 + double(v) * lat.a2;
  if (s.dot(cd.e_perp) < 0) s = -s;
  // Shift along the chain to the representative with the smallest parallel part.
  const double shift = std::round(s.dot(cd.e_par) / cd.a_par);
  s -= shift * cd.d_par;
  cd.s_stack = s;
  cd.perp_spacing = s.dot(cd.e_perp);
  cd.par_step = s.dot(cd.e_par);
  return cd;
}

}  // namespace nhm
