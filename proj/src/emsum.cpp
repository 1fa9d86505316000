#include "nhm/emsum.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/quadrature/gauss.hpp>

#include "nhm/greens.hpp"
#include "nhm/special.hpp"

namespace nhm {

namespace {

double factorial(int n) { return Jet2::fact(n); }

double binom(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

Vec2 unit_dir(double rad) { return {std::cos(rad), std::sin(rad)}; }

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// w += scale * (u.grad)^m (v.grad)^n expressed on Cartesian partials.
void add_directional(std::vector<double>& w, double scale, const Vec2& u, int m, const Vec2& v, int n) {
  for (int a = 0; a <= m; ++a)
    for (int c = 0; c <= n; ++c) {
      const double cf = binom(m, a) * binom(n, c) * ipow(u.x(), a) * ipow(u.y(), m - a) * ipow(v.x(), c) *
                        ipow(v.y(), n - c);
      w[tri_index(a + c, m + n - a - c)] += scale * cf;
    }
}

// Rectangular cell at a vertex, occupied quadrant (sx, sy); weight / cell area.
void add_rect_cell(std::vector<double>& w, const TilingSpec& s, int sx, int sy, double sign) {
  const double l1 = s.b1.norm(), l2 = s.b2.norm();
  const Vec2 e1 = s.b1 / l1, e2 = s.b2 / l2;
  w[0] += 0.25 * sign;
  const int h = s.M / 2;
  for (int i = 1; i <= h; ++i) {
    const double c1 = ipow(l1, 2 * i) * bernoulli_number(2 * i) / factorial(2 * i);
    const double c2 = ipow(l2, 2 * i) * bernoulli_number(2 * i) / factorial(2 * i);
    add_directional(w, sign * sx * c1 / (2 * l1), e1, 2 * i - 1, e2, 0);
    add_directional(w, sign * sy * c2 / (2 * l2), e1, 0, e2, 2 * i - 1);
  }
  for (int i = 1; i <= h; ++i)
    for (int j = 1; j <= h; ++j) {
      const double c = ipow(l1, 2 * i) * ipow(l2, 2 * j) * bernoulli_number(2 * i) * bernoulli_number(2 * j) /
                       (factorial(2 * i) * factorial(2 * j));
      add_directional(w, sign * sx * sy * c / (l1 * l2), e1, 2 * i - 1, e2, 2 * j - 1);
    }
}

// Share of one equilateral triangle (side 1) at a vertex, in units of the rhombus
// cell area: sum_ij c_ij (u.grad)^i (v.grad)^j f, u along the vertex bisector and
// j even (mirror symmetry). The c_ij make the three vertex shares integrate every
// polynomial of degree <= 2M-1 exactly over the triangle, and make the derivative
// terms cancel around an interior vertex. Minimum-norm solution of that system.
struct TriRule {
  std::vector<std::array<int, 2>> idx;
  std::vector<double> c;
};

std::vector<double> directional_weights(const Vec2& u, int i, const Vec2& v, int j, int K) {
  std::vector<double> w(tri_size(K), 0.0);
  add_directional(w, 1.0, u, i, v, j);
  return w;
}

// d^{a+c}/dx^a dy^c of x^p y^q at z
double monomial_partial(int p, int q, int a, int c, const Vec2& z) {
  if (a > p || c > q) return 0.0;
  return factorial(p) / factorial(p - a) * ipow(z.x(), p - a) * factorial(q) / factorial(q - c) * ipow(z.y(), q - c);
}

TriRule build_tri_rule(int M) {
  const int K = 2 * M - 2, D = 2 * M - 1;
  TriRule r;
  for (int d = 0; d <= K; ++d)
    for (int j = 0; j <= d; j += 2) r.idx.push_back({d - j, j});
  const int nu = int(r.idx.size());
  const double c30 = std::sqrt(3.0) / 2;
  const Vec2 V[3] = {Vec2(0, 0), Vec2(c30, 0.5), Vec2(c30, -0.5)};
  const Vec2 C = (V[0] + V[1] + V[2]) / 3.0;
  const double rhombus = c30;
  const int n_exact = tri_size(D), n_int = tri_size(K);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_exact + n_int, nu);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_exact + n_int);
  using Q = boost::math::quadrature::gauss<double, 20>;
  int row = 0;
  for (int d = 0; d <= D; ++d)
    for (int q = 0; q <= d; ++q, ++row) {
      const int p = d - q;
      for (int k = 0; k < 3; ++k) {
        const Vec2 u = (C - V[k]).normalized(), v(-u.y(), u.x());
        for (int col = 0; col < nu; ++col) {
          const auto w = directional_weights(u, r.idx[col][0], v, r.idx[col][1], K);
          double val = 0.0;
          for (int e = 0; e <= K; ++e)
            for (int c = 0; c <= e; ++c) val += w[tri_index(e - c, c)] * monomial_partial(p, q, e - c, c, V[k]);
          A(row, col) += val;
        }
      }
      const Vec2 e1 = V[1] - V[0], e2 = V[2] - V[0];
      const double jac = std::abs(cross(e1, e2));
      const double I = Q::integrate(
          [&](double s) {
            return Q::integrate(
                [&](double t) {
                  const Vec2 z = V[0] + s * (e1 + t * (e2 - e1));
                  return s * jac * ipow(z.x(), p) * ipow(z.y(), q);
                },
                0.0, 1.0);
          },
          0.0, 1.0);
      rhs(row) = I / rhombus;
    }
  for (int k = 0; k < 6; ++k) {
    const Vec2 u = unit_dir(k * pi / 3), v(-u.y(), u.x());
    for (int col = 0; col < nu; ++col) {
      const auto w = directional_weights(u, r.idx[col][0], v, r.idx[col][1], K);
      for (int t = 0; t < n_int; ++t) A(n_exact + t, col) += w[t];
    }
  }
  rhs(n_exact) = 1.0;
  const Eigen::VectorXd c = A.completeOrthogonalDecomposition().solve(rhs);
  if ((A * c - rhs).norm() > 1e-10 * rhs.norm()) throw Error("triangular vertex rule is inconsistent");
  r.c.assign(c.data(), c.data() + nu);
  return r;
}

const TriRule& tri_rule(int M) {
  static const std::array<TriRule, M_max / 2> rules = [] {
    std::array<TriRule, M_max / 2> a;
    for (int h = 1; h <= M_max / 2; ++h) a[h - 1] = build_tri_rule(2 * h);
    return a;
  }();
  return rules[M / 2 - 1];
}

// Equilateral triangle at a vertex whose interior angle is bisected by `bisector`;
// weight / rhombus cell area.
void add_tri_cell(std::vector<double>& w, const TilingSpec& s, double bisector, double sign) {
  const double b = s.b1.norm();
  const TriRule& r = tri_rule(s.M);
  const Vec2 u = unit_dir(bisector), v(-u.y(), u.x());
  for (std::size_t n = 0; n < r.idx.size(); ++n) {
    const auto [i, j] = r.idx[n];
    add_directional(w, sign * r.c[n] * ipow(b, i + j), u, i, v, j);
  }
}

void lattice_coords(const TilingSpec& s, const Vec2& p, long& m, long& n) {
  Eigen::Matrix2d B;
  B.col(0) = s.b1;
  B.col(1) = s.b2;
  const Vec2 c = B.inverse() * p;
  m = std::lround(c.x());
  n = std::lround(c.y());
  if (std::abs(c.x() - m) > 1e-8 || std::abs(c.y() - n) > 1e-8) throw DomainError("vertex is not a tiling lattice point");
}

std::vector<cplx> apply(const std::vector<double>& w, const std::vector<cplx>& table, int ncomp) {
  const int nt = int(w.size());
  std::vector<cplx> r(ncomp, 0.0);
  for (int c = 0; c < ncomp; ++c)
    for (int i = 0; i < nt; ++i)
      if (w[i] != 0.0) r[c] += w[i] * table[c * nt + i];
  return r;
}

int hexnorm(long m, long n) { return int(std::max({std::labs(m), std::labs(n), std::labs(m + n)})); }

const long hex_dirs[6][2] = {{1, 0}, {0, 1}, {-1, 1}, {-1, 0}, {0, -1}, {1, -1}};

// Bisector angles (radians) of the six triangles at a triangular-tiling vertex.
std::array<double, 6> tri_bisectors(const TilingSpec& s) {
  std::array<double, 6> r{};
  const double a0 = std::atan2(s.b1.y(), s.b1.x());
  for (int k = 0; k < 6; ++k) r[k] = a0 + (30.0 + 60.0 * k) * pi / 180.0;
  return r;
}

double angle_dist(double a, double b) { return std::abs(std::remainder(a - b, two_pi)); }

struct GL {
  std::vector<double> x, w;
  GL() {
    using Q = boost::math::quadrature::gauss<double, 30>;
    const auto& ab = Q::abscissa();
    const auto& wt = Q::weights();
    for (std::size_t i = 0; i < ab.size(); ++i) {
      x.push_back(ab[i]);
      w.push_back(wt[i]);
      x.push_back(-ab[i]);
      w.push_back(wt[i]);
    }
  }
};
const GL& gl() {
  static const GL g;
  return g;
}

void check_enclosure(const HollowGeometry& g, const Vec2& centre, double radius) {
  if (radius <= 0) return;
  const std::size_t n = g.polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& v0 = g.polygon[i];
    const Vec2 e = g.polygon[(i + 1) % n] - v0;
    const double dist = cross(e, centre - v0) / e.norm();
    if (dist < 1.01 * radius) throw DomainError("inner boundary does not enclose the light cone; increase R_inner");
  }
}

Tensor3 unpack(const std::vector<cplx>& c) {
  Tensor3 t = Tensor3::Zero();
  t(0, 0) = c[0];
  t(0, 1) = t(1, 0) = c[1];
  t(1, 1) = c[2];
  t(2, 2) = c[3];
  return t;
}

// Lattice sum minus polygon integral plus corrections for g(G + shift) over the tiling.
Tensor3 em_green(const HollowGeometry& geo, const TilingSpec& spec, const SmoothField& field, const Vec2& shift,
                 double q, double& min_gap) {
  Tensor3 s = Tensor3::Zero();
  for (const Vec2& G : geo.inner) {
    const Vec2 p = G + shift;
    const double gap = std::abs(p.norm() - q);
    min_gap = std::min(min_gap, gap);
    if (gap < tol_lc(q)) throw SingularityError("momentum on a light-cone circle");
    s += green_recip_2d(p, q);
  }
  std::vector<Vec2> poly = geo.polygon;
  for (auto& v : poly) v += shift;
  s -= green_polygon_integral(poly, q) / geo.cell_area;
  std::vector<cplx> corr(4, 0.0);
  for (const Stencil& st : geo.boundary) {
    const auto tab = derivative_table(field, st.point + shift, spec);
    const auto c = apply(st.w, tab, 4);
    for (int i = 0; i < 4; ++i) corr[i] += c[i];
  }
  return s + unpack(corr);
}

}  // namespace

bool TilingSpec::use_jets() const {
  return derivatives == DerivativeMode::analytic || (derivatives == DerivativeMode::automatic && M > 2);
}

void validate(const TilingSpec& s) {
  if (s.M < 2 || s.M > M_max || s.M % 2) throw DomainError("expansion order M must be even, 2..8");
  if (!(s.R_inner > 0) || !(s.unit > 0)) throw DomainError("R_inner and unit must be positive");
  const double l1 = s.b1.norm(), l2 = s.b2.norm();
  if (!(s.cell_area() > 1e-12 * l1 * l2)) throw DomainError("degenerate tiling cell");
  const double c = s.b1.dot(s.b2) / (l1 * l2);
  if (s.kind == TilingKind::rectangular) {
    if (std::abs(c) > 1e-9) throw DomainError("rectangular tiling needs orthogonal cell vectors");
  } else {
    if (std::abs(l1 - l2) > 1e-9 * l1 || std::abs(c - 0.5) > 1e-9 || cross(s.b1, s.b2) < 0)
      throw DomainError("triangular tiling needs equal cell vectors at +60 degrees");
  }
}

TilingSpec make_tiling(const ReciprocalBasis& rb, double unit, int M, double R_inner, DerivativeMode mode) {
  TilingSpec s;
  s.b1 = rb.b1;
  s.b2 = rb.b2;
  s.M = M;
  s.R_inner = R_inner;
  s.unit = unit;
  s.derivatives = mode;
  const double l1 = s.b1.norm(), l2 = s.b2.norm();
  const double c = s.b1.dot(s.b2) / (l1 * l2);
  if (std::abs(c) < 1e-9) {
    s.kind = TilingKind::rectangular;
  } else if (std::abs(l1 - l2) < 1e-9 * l1 && std::abs(std::abs(c) - 0.5) < 1e-9) {
    s.kind = TilingKind::triangular;
    if (c < 0) s.b2 = s.b1 + s.b2;
    if (cross(s.b1, s.b2) < 0) std::swap(s.b1, s.b2);
  } else {
    throw DomainError("oblique reciprocal lattice: no rectangular or triangular tiling");
  }
  validate(s);
  return s;
}

TilingSpec make_tiling(const Lattice2D& lat, int M, double R_inner, DerivativeMode mode) {
  return make_tiling(reciprocal_basis(lat), two_pi / lat.a2.norm(), M, R_inner, mode);
}

std::vector<cplx> derivative_table(const SmoothField& f, const Vec2& p, const TilingSpec& spec) {
  const int K = spec.order_K();
  const int nt = tri_size(K);
  const int nc = f.ncomp;
  std::vector<cplx> out(std::size_t(nc) * nt, 0.0);
  if (spec.use_jets()) {
    if (!f.partials) throw DomainError("analytic derivatives requested but the field provides none");
    f.partials(p, K, out.data());
    return out;
  }
  if (K > 2) throw DomainError("finite-difference derivatives support M = 2 only");
  const double h = 1e-3 * spec.unit;
  std::vector<cplx> buf(std::size_t(nc) * 17);
  const Vec2 ex(1, 0), ey(0, 1);
  const Vec2 pts[17] = {p,
                        p + h * ex, p - h * ex, p + 0.5 * h * ex, p - 0.5 * h * ex,
                        p + h * ey, p - h * ey, p + 0.5 * h * ey, p - 0.5 * h * ey,
                        p + h * (ex + ey), p + h * (ex - ey), p + h * (ey - ex), p - h * (ex + ey),
                        p + 0.5 * h * (ex + ey), p + 0.5 * h * (ex - ey), p + 0.5 * h * (ey - ex), p - 0.5 * h * (ex + ey)};
  for (int i = 0; i < 17; ++i) f.value(pts[i], buf.data() + std::size_t(i) * nc);
  auto F = [&](int i, int c) { return buf[std::size_t(i) * nc + c]; };
  const double hh = 0.5 * h;
  for (int c = 0; c < nc; ++c) {
    const cplx f0 = F(0, c);
    const cplx dx = (4.0 * (F(3, c) - F(4, c)) / (2 * hh) - (F(1, c) - F(2, c)) / (2 * h)) / 3.0;
    const cplx dy = (4.0 * (F(7, c) - F(8, c)) / (2 * hh) - (F(5, c) - F(6, c)) / (2 * h)) / 3.0;
    const cplx dxx = (4.0 * (F(3, c) - 2.0 * f0 + F(4, c)) / (hh * hh) - (F(1, c) - 2.0 * f0 + F(2, c)) / (h * h)) / 3.0;
    const cplx dyy = (4.0 * (F(7, c) - 2.0 * f0 + F(8, c)) / (hh * hh) - (F(5, c) - 2.0 * f0 + F(6, c)) / (h * h)) / 3.0;
    const cplx dxy = (4.0 * (F(13, c) - F(14, c) - F(15, c) + F(16, c)) / (4 * hh * hh) -
                      (F(9, c) - F(10, c) - F(11, c) + F(12, c)) / (4 * h * h)) / 3.0;
    cplx* o = out.data() + std::size_t(c) * nt;
    o[tri_index(0, 0)] = f0;
    o[tri_index(1, 0)] = dx;
    o[tri_index(0, 1)] = dy;
    o[tri_index(2, 0)] = dxx;
    o[tri_index(1, 1)] = dxy;
    o[tri_index(0, 2)] = dyy;
  }
  return out;
}

std::vector<cplx> corrections_rect_vertex(const SmoothField& f, RectVertex cls, const Vec2& point,
                                          const TilingSpec& spec, int sx, int sy) {
  validate(spec);
  if (spec.kind != TilingKind::rectangular) throw DomainError("rectangular vertex on a triangular tiling");
  long m, n;
  lattice_coords(spec, point, m, n);
  sx = sx < 0 ? -1 : 1;
  sy = sy < 0 ? -1 : 1;
  std::vector<double> w(tri_size(spec.order_K()), 0.0);
  switch (cls) {
    case RectVertex::interior:
      for (int a : {-1, 1})
        for (int b : {-1, 1}) add_rect_cell(w, spec, a, b, 1.0);
      break;
    case RectVertex::edge_x:
      for (int b : {-1, 1}) add_rect_cell(w, spec, sx, b, 1.0);
      break;
    case RectVertex::edge_y:
      for (int a : {-1, 1}) add_rect_cell(w, spec, a, sy, 1.0);
      break;
    case RectVertex::corner:
      add_rect_cell(w, spec, sx, sy, 1.0);
      break;
  }
  for (double& x : w) x *= spec.cell_area();
  return apply(w, derivative_table(f, point, spec), f.ncomp);
}

std::vector<cplx> corrections_tri_vertex(const SmoothField& f, TriVertex cls, const Vec2& point,
                                         const TilingSpec& spec, double bisector_deg) {
  validate(spec);
  if (spec.kind != TilingKind::triangular) throw DomainError("triangular vertex on a rectangular tiling");
  long m, n;
  lattice_coords(spec, point, m, n);
  const auto bis = tri_bisectors(spec);
  const double want = bisector_deg * pi / 180.0;
  std::vector<double> w(tri_size(spec.order_K()), 0.0);
  if (cls == TriVertex::interior) {
    for (double b : bis) add_tri_cell(w, spec, b, 1.0);
  } else {
    // occupied sector: half plane (edge) or 120 degree wedge (corner)
    const double half = cls == TriVertex::edge ? pi / 2 : pi / 3;
    // snap the sector centre to the nearest admissible direction
    double centre = want, best = 1e9;
    for (double b : bis) {
      const double cand = cls == TriVertex::edge ? b : b + pi / 6;
      if (angle_dist(cand, want) < best) {
        best = angle_dist(cand, want);
        centre = cand;
      }
    }
    for (double b : bis)
      if (angle_dist(b, centre) < half - 1e-9) add_tri_cell(w, spec, b, 1.0);
  }
  for (double& x : w) x *= spec.cell_area();
  return apply(w, derivative_table(f, point, spec), f.ncomp);
}

HollowGeometry hollow_geometry(const TilingSpec& spec) {
  validate(spec);
  HollowGeometry g;
  g.cell_area = spec.cell_area();
  g.K = spec.order_K();
  const int nt = tri_size(g.K);
  const double H = 0.5 * spec.R_inner * spec.unit;
  auto G = [&](long m, long n) -> Vec2 { return double(m) * spec.b1 + double(n) * spec.b2; };
  if (spec.kind == TilingKind::rectangular) {
    const long N1 = std::max(1L, long(std::ceil(H / spec.b1.norm() - 1e-9)));
    const long N2 = std::max(1L, long(std::ceil(H / spec.b2.norm() - 1e-9)));
    for (long m = -N1; m <= N1; ++m)
      for (long n = -N2; n <= N2; ++n) {
        if (std::labs(m) < N1 && std::labs(n) < N2) {
          g.inner.push_back(G(m, n));
          continue;
        }
        Stencil st{G(m, n), std::vector<double>(nt, 0.0)};
        st.w[0] = 1.0;
        for (int sx : {-1, 1})
          for (int sy : {-1, 1})
            if (std::labs(m + sx) > N1 || std::labs(n + sy) > N2) add_rect_cell(st.w, spec, sx, sy, -1.0);
        g.boundary.push_back(std::move(st));
      }
    g.polygon = {G(N1, N2), G(-N1, N2), G(-N1, -N2), G(N1, -N2)};
  } else {
    const long N = std::max(1L, long(std::ceil(H / spec.b1.norm() - 1e-9)));
    const auto bis = tri_bisectors(spec);
    for (long m = -N; m <= N; ++m)
      for (long n = -N; n <= N; ++n) {
        const int d = hexnorm(m, n);
        if (d < N) {
          g.inner.push_back(G(m, n));
          continue;
        }
        if (d > N) continue;
        Stencil st{G(m, n), std::vector<double>(nt, 0.0)};
        st.w[0] = 1.0;
        for (int k = 0; k < 6; ++k) {
          const auto& u = hex_dirs[k];
          const auto& v = hex_dirs[(k + 1) % 6];
          if (hexnorm(m + u[0], n + u[1]) > N || hexnorm(m + v[0], n + v[1]) > N) add_tri_cell(st.w, spec, bis[k], -1.0);
        }
        g.boundary.push_back(std::move(st));
      }
    for (const auto& u : hex_dirs) g.polygon.push_back(G(N * u[0], N * u[1]));
  }
  const Vec2 c0 = Vec2::Zero();
  std::sort(g.polygon.begin(), g.polygon.end(), [&](const Vec2& a, const Vec2& b) {
    return std::atan2(a.y() - c0.y(), a.x() - c0.x()) < std::atan2(b.y() - c0.y(), b.x() - c0.x());
  });
  return g;
}

std::vector<cplx> hollow_sum(const SmoothField& f, const TilingSpec& spec, const Vec2& k_offset, Exec exec) {
  const HollowGeometry g = hollow_geometry(spec);
  check_enclosure(g, -k_offset, spec.exclusion_radius);
  const int nc = f.ncomp;
  std::vector<cplx> total(nc, 0.0);
  const long nb = long(g.boundary.size());
  std::vector<std::vector<cplx>> part(nb);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (long i = 0; i < nb; ++i) {
    const Stencil& st = g.boundary[i];
    part[i] = apply(st.w, derivative_table(f, st.point + k_offset, spec), nc);
  }
  for (const auto& p : part)
    for (int c = 0; c < nc; ++c) total[c] += p[c];
  return total;
}

SmoothField green_field(double q, double scale) {
  SmoothField f;
  f.ncomp = 4;
  f.value = [q, scale](const Vec2& p, cplx* out) {
    const Tensor3 g = green_recip_2d(p, q);
    out[0] = scale * g(0, 0);
    out[1] = scale * g(0, 1);
    out[2] = scale * g(1, 1);
    out[3] = scale * g(2, 2);
  };
  f.partials = [q, scale](const Vec2& p, int K, cplx* out) {
    const Jet2 X = Jet2::variable(K, p.x(), 0), Y = Jet2::variable(K, p.y(), 1);
    const Jet2 r2 = X * X + Y * Y;
    const double q2 = q * q;
    Jet2 pref;
    if (p.squaredNorm() > q2)
      pref = 0.5 * (r2 + cplx(-q2)).sqrt().inverse();
    else
      pref = 0.5 * I1 * ((-1.0) * r2 + cplx(q2)).sqrt().inverse();
    const cplx iq2 = -1.0 / q2;
    const Jet2 comps[4] = {pref + pref * (X * X) * iq2, pref * (X * Y) * iq2, pref + pref * (Y * Y) * iq2,
                           pref * r2 * (1.0 / q2)};
    const int nt = tri_size(K);
    for (int c = 0; c < 4; ++c)
      for (int d = 0; d <= K; ++d)
        for (int j = 0; j <= d; ++j) out[c * nt + tri_index(d - j, j)] = scale * comps[c].partial(d - j, j);
  };
  return f;
}

Tensor3 green_polygon_integral(const std::vector<Vec2>& polygon, double q) {
  // cone disk: (2 pi i q / 3) * identity
  Tensor3 r = (two_pi * I1 * q / 3.0) * Tensor3::Identity();
  const auto& Q = gl();
  const std::size_t n = polygon.size();
  double xx = 0, xy = 0, yy = 0, zz = 0;
  for (std::size_t e = 0; e < n; ++e) {
    const Vec2& v0 = polygon[e];
    const Vec2& v1 = polygon[(e + 1) % n];
    const Vec2 ed = v1 - v0;
    const double d = cross(v0, v1) / ed.norm();
    if (!(d > q)) throw DomainError("polygon does not enclose the light cone");
    const double alpha = std::atan2(-ed.x(), ed.y());
    const double p0 = std::atan2(v0.y(), v0.x());
    double dp = std::remainder(std::atan2(v1.y(), v1.x()) - p0, two_pi);
    if (dp < 0) dp += two_pi;
    for (std::size_t k = 0; k < Q.x.size(); ++k) {
      const double phi = p0 + 0.5 * dp * (Q.x[k] + 1.0);
      const double wt = 0.5 * dp * Q.w[k];
      const double rho = d / std::cos(phi - alpha);
      const double U = std::sqrt(rho * rho - q * q);
      const double U3 = U * U * U / (3.0 * q * q);
      const double c = std::cos(phi), s = std::sin(phi);
      const double nn = U + U3;
      xx += wt * 0.5 * (U - nn * c * c);
      xy += wt * 0.5 * (-nn * c * s);
      yy += wt * 0.5 * (U - nn * s * s);
      zz += wt * 0.5 * (U + U3);
    }
  }
  r(0, 0) += xx;
  r(0, 1) += xy;
  r(1, 0) += xy;
  r(1, 1) += yy;
  r(2, 2) += zz;
  return r;
}

GreenSum periodic_green_sum(const Lattice2D& lat, const Vec2& k, double q, const TilingSpec& spec_in) {
  TilingSpec spec = spec_in;
  spec.exclusion_radius = q;
  const HollowGeometry geo = hollow_geometry(spec);
  check_enclosure(geo, -k, q);
  const double A = lat.cell_area();
  GreenSum out;
  double gap = 1e300;
  const SmoothField field = green_field(q, 1.0);
  out.value = em_green(geo, spec, field, k, q, gap) / A;
  out.min_cone_gap = gap / q;
  out.near_divergence = gap < 1e-3 * q;
  return out;
}

GreenSum periodic_green_sum(const Lattice2D& lat, const Vec2& k, double q, const EMOptions& em) {
  return periodic_green_sum(lat, k, q, make_tiling(lat, em.M, em.R_inner, em.derivatives));
}

LambShift lamb_shift_normal(double a_over_lambda, double R_inner, int M, DerivativeMode mode) {
  if (!(a_over_lambda > 0)) throw DomainError("a/lambda must be positive");
  const Lattice2D lat = Lattice2D::square(a_over_lambda);
  LambShift r;
  try {
    const GreenSum s = periodic_green_sum(lat, Vec2::Zero(), q0, make_tiling(lat, M, R_inner, mode));
    const cplx h = -0.5 * I1 - coupling_prefactor(q0) * s.value(0, 0);
    r.Delta = h.real();
    r.Gamma = -2.0 * h.imag();
    r.near_divergence = s.near_divergence;
  } catch (const SingularityError&) {
    r.Delta = r.Gamma = std::nan("");
    r.near_divergence = r.singular = true;
  }
  return r;
}

namespace {

// Direction angle modulo pi: ties between equally short representatives are broken
// the same way for b and -b, so the two sums stay exact transposes.
double axis_angle(const Vec2& G) {
  double t = std::atan2(G.y(), G.x());
  if (t < 0) t += pi;
  return t >= pi ? t - pi : t;
}

}  // namespace

PhaseClasses phase_classes(const ReciprocalBasis& rb, const Vec2& b) {
  const double t1 = rb.b1.dot(b) / two_pi, t2 = rb.b2.dot(b) / two_pi;
  auto near_int = [](double x) { return std::abs(x - std::round(x)) < 1e-9; };
  int nq = 0;
  for (int n = 1; n <= 12; ++n)
    if (near_int(n * t1) && near_int(n * t2)) {
      nq = n;
      break;
    }
  if (nq == 0) throw DomainError("sublattice offset is not a rational fraction of the cell");
  if (nq == 1) throw DomainError("sublattice offset is a lattice vector");
  auto cls = [&](long m, long n) {
    long r = std::lround((m * t1 + n * t2) * nq) % nq;
    return r < 0 ? r + nq : r;
  };
  // shortest generators of the phase-preserving sublattice
  std::vector<std::array<long, 2>> cand;
  for (long m = -nq; m <= nq; ++m)
    for (long n = -nq; n <= nq; ++n)
      if ((m || n) && cls(m, n) == 0) cand.push_back({m, n});
  auto len = [&](const std::array<long, 2>& v) { return (double(v[0]) * rb.b1 + double(v[1]) * rb.b2).norm(); };
  std::sort(cand.begin(), cand.end(), [&](auto& a, auto& b) { return len(a) < len(b) - 1e-12; });
  const auto v1 = cand.front();
  std::array<long, 2> v2{0, 0};
  for (const auto& c : cand)
    if (std::labs(v1[0] * c[1] - v1[1] * c[0]) == nq) {
      v2 = c;
      break;
    }
  if (v2[0] == 0 && v2[1] == 0) throw Error("failed to reduce the phase sublattice");
  PhaseClasses pc;
  pc.sub.b1 = double(v1[0]) * rb.b1 + double(v1[1]) * rb.b2;
  pc.sub.b2 = double(v2[0]) * rb.b1 + double(v2[1]) * rb.b2;
  pc.sub.cell_area = rb.cell_area / nq;
  std::map<long, Vec2> reps;
  for (long m = -nq; m <= nq; ++m)
    for (long n = -nq; n <= nq; ++n) {
      const long c = cls(m, n);
      const Vec2 G = double(m) * rb.b1 + double(n) * rb.b2;
      auto it = reps.find(c);
      if (it == reps.end() || G.norm() < it->second.norm() - 1e-12 ||
          (G.norm() < it->second.norm() + 1e-12 && axis_angle(G) > axis_angle(it->second) + 1e-12))
        reps[c] = G;
    }
  for (const auto& [c, G] : reps) pc.classes.push_back({G, std::exp(I1 * (two_pi * double(c) / nq))});
  return pc;
}

GreenSum offdiag_sublattice_sum(const Lattice2D& lat, int i, int j, const Vec2& k, double q, const EMOptions& em) {
  validate(lat);
  const int ns = int(lat.offsets.size());
  if (i < 0 || j < 0 || i >= ns || j >= ns || i == j) throw DomainError("bad sublattice pair");
  const Vec2 b = lat.offsets[i] - lat.offsets[j];
  const ReciprocalBasis rb = reciprocal_basis(lat);
  const PhaseClasses pc = phase_classes(rb, b);
  // R_inner counts spacings of the coarser phase-class lattice
  const double unit = two_pi / lat.a2.norm() * std::sqrt(double(pc.classes.size()));
  TilingSpec spec = make_tiling(pc.sub, unit, em.M, em.R_inner, em.derivatives);
  spec.exclusion_radius = q;
  const HollowGeometry geo = hollow_geometry(spec);
  const SmoothField field = green_field(q, 1.0);
  GreenSum out;
  double gap = 1e300;
  for (const auto& c : pc.classes) {
    const Vec2 shift = c.rep + k;
    check_enclosure(geo, -shift, q);
    out.value += c.weight * em_green(geo, spec, field, shift, q, gap);
  }
  out.value /= lat.cell_area();
  out.min_cone_gap = gap / q;
  out.near_divergence = gap < 1e-3 * q;
  return out;
}

}  // namespace nhm
