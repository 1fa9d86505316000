#include "nhm/bands.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>

namespace nhm {

namespace {

double wrap(double x) { return std::remainder(x, two_pi); }

// which: 0 kappa_{+-}, 1 kappa_{-+}, 2 discriminant
cplx pick(const Mat2c& h, int which) {
  return which == 0 ? kappa_pm(h) : which == 1 ? kappa_mp(h) : discriminant(h);
}

cplx eval_kappa(const Lattice2D& lat, const Vec2& k, double q, const EMOptions& em, double muB, int which) {
  return pick(heff_circular(lat, k, q, em, muB), which);
}

struct Root {
  Vec2 k;
  bool ok;
};

Root newton(const Lattice2D& lat, const Vec2& k0, double q, const EMOptions& em, double muB, int which,
            const Window& win) {
  Vec2 k = k0;
  const double step = 1e-6 * q;
  const ReciprocalBasis rb = reciprocal_basis(lat);
  for (int it = 0; it < 50; ++it) {
    const cplx f = eval_kappa(lat, k, q, em, muB, which);
    const cplx fx = (eval_kappa(lat, k + Vec2(step, 0), q, em, muB, which) -
                     eval_kappa(lat, k - Vec2(step, 0), q, em, muB, which)) / (2 * step);
    const cplx fy = (eval_kappa(lat, k + Vec2(0, step), q, em, muB, which) -
                     eval_kappa(lat, k - Vec2(0, step), q, em, muB, which)) / (2 * step);
    Eigen::Matrix2d J;
    J << fx.real(), fy.real(), fx.imag(), fy.imag();
    if (std::abs(J.determinant()) < 1e-300) return {k, false};
    const Vec2 dk = -J.inverse() * Vec2(f.real(), f.imag());
    k += dk;
    if (k.x() < win.x0 || k.x() > win.x1 || k.y() < win.y0 || k.y() > win.y1) return {k, false};
    if (cone_gap(rb, k, q) < 1e-6 * q) return {k, false};
    if (dk.norm() < 1e-10 * q) return {k, true};
  }
  return {k, false};
}

}  // namespace

Tensor3 heff_bravais(const Lattice2D& lat, const Vec2& k, double q, const EMOptions& em, bool* near_divergence) {
  const GreenSum s = periodic_green_sum(lat, k, q, em);
  if (near_divergence) *near_divergence = s.near_divergence;
  return -0.5 * I1 * Tensor3::Identity() - coupling_prefactor(q) * s.value;
}

Mat2c circular_basis() {
  const double r = 1.0 / std::sqrt(2.0);
  Mat2c U;
  U << -r, r, -I1 * r, -I1 * r;
  return U;
}

Mat2c to_circular(const Mat2c& h_xy) {
  const Mat2c U = circular_basis();
  return U.adjoint() * h_xy * U;
}

Mat2c heff_circular(const Lattice2D& lat, const Vec2& k, double q, const EMOptions& em, double muB) {
  const Tensor3 h = heff_bravais(lat, k, q, em);
  Mat2c c = to_circular(h.topLeftCorner<2, 2>());
  c(0, 0) += muB;
  c(1, 1) -= muB;
  return c;
}

MatXc heff_nonbravais(const Lattice2D& lat, const Vec2& k, double q, const EMOptions& em) {
  validate(lat);
  const int n = int(lat.offsets.size());
  if (n < 2) throw DomainError("heff_nonbravais needs at least two sublattices");
  const double c = coupling_prefactor(q);
  MatXc H = MatXc::Zero(3 * n, 3 * n);
  const Tensor3 diag = -0.5 * I1 * Tensor3::Identity() - c * periodic_green_sum(lat, k, q, em).value;
  for (int i = 0; i < n; ++i) {
    H.block<3, 3>(3 * i, 3 * i) = diag;
    for (int j = 0; j < n; ++j)
      if (i != j) H.block<3, 3>(3 * i, 3 * j) = -c * offdiag_sublattice_sum(lat, i, j, k, q, em).value;
  }
  return H;
}

BandPoint diagonalize2(const Mat2c& h) {
  BandPoint b;
  const cplx tr = h.trace();
  const cplx s = std::sqrt(discriminant(h));
  b.E1 = 0.5 * (tr + s);
  b.E2 = 0.5 * (tr - s);
  const double scale = h.cwiseAbs().maxCoeff();
  auto vec = [&](cplx E, int fallback) {
    Eigen::Vector2cd a(h(0, 1), E - h(0, 0)), c(E - h(1, 1), h(1, 0));
    Eigen::Vector2cd v = a.norm() >= c.norm() ? a : c;
    if (v.norm() <= 1e-14 * std::max(scale, 1e-300)) {
      v.setZero();
      v(fallback) = 1.0;
    }
    return Eigen::Vector2cd(v / v.norm());
  };
  b.V.col(0) = vec(b.E1, 0);
  b.V.col(1) = vec(b.E2, 1);
  b.detV = b.V.determinant();
  return b;
}

Vorticity vorticity_from_kernels(const std::vector<Mat2c>& kernels) {
  const std::size_t n = kernels.size();
  if (n < 3) throw DomainError("loop needs at least three points");
  double total = 0;
  cplx prev = discriminant(kernels.back());
  for (std::size_t i = 0; i < n; ++i) {
    const cplx d = discriminant(kernels[i]);
    if (std::abs(d) == 0.0 || std::abs(prev) == 0.0) throw SingularityError("loop passes through a degeneracy");
    const double step = std::arg(d / prev);
    // arg(E1 - E2) moves by half the discriminant step, which is only defined modulo pi
    if (std::abs(step) > pi / 2) throw NyquistError("discriminant phase step exceeds pi/2; sample the loop more densely");
    total += step;
    prev = d;
  }
  Vorticity v;
  v.raw = -total / (4 * pi);
  v.value = std::round(2 * v.raw) / 2;
  v.snap_error = std::abs(v.raw - v.value);
  return v;
}

Vorticity vorticity(const std::vector<Vec2>& loop, const Lattice2D& lat, double q, const EMOptions& em, double muB) {
  const ReciprocalBasis rb = reciprocal_basis(lat);
  std::vector<Mat2c> ks(loop.size());
  for (std::size_t i = 0; i < loop.size(); ++i) {
    if (cone_gap(rb, loop[i], q) < 1e-6 * q) throw SingularityError("loop touches a light-cone circle");
    ks[i] = heff_circular(lat, loop[i], q, em, muB);
  }
  return vorticity_from_kernels(ks);
}

std::vector<Vec2> circle_loop(const Vec2& centre, double radius, int n, bool ccw) {
  std::vector<Vec2> pts(n);
  for (int i = 0; i < n; ++i) {
    const double t = (ccw ? 1.0 : -1.0) * two_pi * i / n;
    pts[i] = centre + radius * Vec2(std::cos(t), std::sin(t));
  }
  return pts;
}

Window cone_box(double q) { return {-q, q, -q, q}; }

BandGrid sample_grid(const Lattice2D& lat, double q, const EMOptions& em, const Window& win, int n, double muB,
                     Exec exec) {
  if (n < 3) throw DomainError("grid needs at least 3 nodes per side");
  BandGrid g;
  g.win = win;
  g.nx = g.ny = n;
  g.h.assign(std::size_t(n) * n, Mat2c::Zero());
  g.valid.assign(std::size_t(n) * n, 0);
  const ReciprocalBasis rb = reciprocal_basis(lat);
  const double band = 0.75 * std::max(g.dx(), g.dy());
  const long total = long(n) * n;
#pragma omp parallel for schedule(dynamic, 16) if (exec == Exec::parallel)
  for (long t = 0; t < total; ++t) {
    const int i = int(t % n), j = int(t / n);
    const Vec2 k = g.node(i, j);
    if (cone_gap(rb, k, q) <= band) continue;
    g.h[t] = heff_circular(lat, k, q, em, muB);
    g.valid[t] = 1;
  }
  return g;
}

DegeneracyReport find_degeneracies(const Lattice2D& lat, double q, const EMOptions& em, const DegeneracyOptions& opt) {
  const Window win = opt.window.value_or(cone_box(q));
  const BandGrid g = sample_grid(lat, q, em, win, opt.grid, opt.muB);
  const ReciprocalBasis rb = reciprocal_basis(lat);
  const double node_tol = 1e-9;
  DegeneracyReport rep;
  std::vector<Vec2> roots[3];
  auto add_root = [&](int which, const Vec2& k) {
    for (const Vec2& r : roots[which])
      if ((r - k).norm() < 1e-6 * q) return;
    roots[which].push_back(k);
  };
  // without a Zeeman term degeneracies are zeros of either coupling; with one,
  // the couplings no longer control the splitting and the discriminant is used
  const std::vector<int> fields = opt.muB == 0.0 ? std::vector<int>{0, 1} : std::vector<int>{2};
  for (int which : fields) {
    auto kap = [&](int i, int j) { return pick(g.h[g.idx(i, j)], which); };
    std::vector<char> zero_node(g.h.size(), 0);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        if (g.valid[g.idx(i, j)] && std::abs(kap(i, j)) < node_tol) {
          zero_node[g.idx(i, j)] = 1;
          add_root(which, g.node(i, j));
        }
    for (int j = 0; j + 1 < g.ny; ++j)
      for (int i = 0; i + 1 < g.nx; ++i) {
        const int c[4][2] = {{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}};
        bool ok = true;
        for (auto& p : c) ok = ok && g.valid[g.idx(p[0], p[1])] && !zero_node[g.idx(p[0], p[1])];
        if (!ok) continue;
        double w = 0;
        for (int e = 0; e < 4; ++e) {
          const cplx a = kap(c[e][0], c[e][1]), b = kap(c[(e + 1) % 4][0], c[(e + 1) % 4][1]);
          w += std::arg(b / a);
        }
        if (std::abs(w) < pi) continue;
        const Vec2 start = g.node(i, j) + 0.5 * Vec2(g.dx(), g.dy());
        const Root r = newton(lat, start, q, em, opt.muB, which, win);
        if (r.ok)
          add_root(which, r.k);
        else
          rep.unresolved.push_back(start);
      }
  }
  // classify
  std::vector<DegeneracyRecord> recs;
  for (int which = 0; which < 3; ++which)
    for (const Vec2& k : roots[which]) {
      bool dup = false;
      for (const auto& r : recs) dup = dup || (r.location - k).norm() < 1e-6 * q;
      if (dup) continue;
      const Mat2c h = heff_circular(lat, k, q, em, opt.muB);
      DegeneracyRecord r;
      r.location = k;
      r.res_pm = std::abs(kappa_pm(h));
      r.res_mp = std::abs(kappa_mp(h));
      const bool ndp = which == 2 ? (h - 0.5 * h.trace() * Mat2c::Identity()).norm() < opt.tol_deg
                                  : r.res_pm < opt.tol_deg && r.res_mp < opt.tol_deg;
      r.kind = ndp ? DegeneracyKind::NDP : DegeneracyKind::EP;
      recs.push_back(r);
    }
  for (auto& r : recs) {
    double radius = 0.05 * q;
    for (const auto& o : recs)
      if (&o != &r) radius = std::min(radius, 0.4 * (o.location - r.location).norm());
    radius = std::min(radius, 0.5 * cone_gap(rb, r.location, q));
    for (int n = 64;; n *= 2) {
      try {
        const Vorticity v = vorticity(circle_loop(r.location, radius, n), lat, q, em, opt.muB);
        r.vorticity = v.value;
        r.snap_error = v.snap_error;
        break;
      } catch (const NyquistError&) {
        if (n >= 8192) throw;
      }
    }
  }
  std::sort(recs.begin(), recs.end(), [](const auto& a, const auto& b) {
    return a.location.x() < b.location.x() || (a.location.x() == b.location.x() && a.location.y() < b.location.y());
  });
  rep.found = recs;
  return rep;
}

FermiArcs fermi_arcs(const BandGrid& g) {
  FermiArcs arcs;
  std::vector<cplx> d(g.h.size());
  for (std::size_t t = 0; t < g.h.size(); ++t) d[t] = g.valid[t] ? discriminant(g.h[t]) : cplx(0.0);
  for (int j = 0; j + 1 < g.ny; ++j)
    for (int i = 0; i + 1 < g.nx; ++i) {
      const int c[4][2] = {{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}};
      bool ok = true;
      for (auto& p : c) ok = ok && g.valid[g.idx(p[0], p[1])];
      if (!ok) continue;
      std::vector<std::pair<Vec2, double>> cross;  // point, Re(disc)
      for (int e = 0; e < 4; ++e) {
        const int ia = g.idx(c[e][0], c[e][1]), ib = g.idx(c[(e + 1) % 4][0], c[(e + 1) % 4][1]);
        const double fa = d[ia].imag(), fb = d[ib].imag();
        if ((fa < 0) == (fb < 0)) continue;
        const double t = fa / (fa - fb);
        const Vec2 p = (1 - t) * g.node(c[e][0], c[e][1]) + t * g.node(c[(e + 1) % 4][0], c[(e + 1) % 4][1]);
        cross.push_back({p, (1 - t) * d[ia].real() + t * d[ib].real()});
      }
      for (std::size_t s = 0; s + 1 < cross.size(); s += 2) {
        const auto& [p0, r0] = cross[s];
        const auto& [p1, r1] = cross[s + 1];
        auto push = [&](const Vec2& a, const Vec2& b, double re) {
          (re < 0 ? arcs.real_arcs : arcs.imag_arcs).push_back({a, b});
        };
        if ((r0 < 0) == (r1 < 0)) {
          push(p0, p1, 0.5 * (r0 + r1));
        } else {
          const double t = r0 / (r0 - r1);
          const Vec2 m = (1 - t) * p0 + t * p1;
          push(p0, m, r0);
          push(m, p1, r1);
        }
      }
    }
  return arcs;
}

FermiArcs fermi_arcs(const Lattice2D& lat, double q, const EMOptions& em, int n) {
  return fermi_arcs(sample_grid(lat, q, em, cone_box(q), n));
}

std::vector<Vec2> arc_endpoints(const std::vector<ArcSegment>& segs, double tol) {
  std::vector<Vec2> pts;
  std::vector<int> degree;
  auto find = [&](const Vec2& p) {
    for (std::size_t i = 0; i < pts.size(); ++i)
      if ((pts[i] - p).norm() < tol) return int(i);
    pts.push_back(p);
    degree.push_back(0);
    return int(pts.size() - 1);
  };
  for (const auto& s : segs) {
    if ((s.p0 - s.p1).norm() < tol) continue;
    ++degree[find(s.p0)];
    ++degree[find(s.p1)];
  }
  std::vector<Vec2> ends;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (degree[i] == 1) ends.push_back(pts[i]);
  return ends;
}

std::vector<double> spectral_phase_map(const BandGrid& g) {
  std::vector<double> phase(g.h.size(), std::nan(""));
  auto root_arg = [&](int t) { return std::arg(std::sqrt(discriminant(g.h[t]))); };
  // each connected valid region is seeded at its node nearest Gamma
  for (;;) {
    int start = -1;
    double best = 1e300;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const int t = g.idx(i, j);
        if (g.valid[t] && std::isnan(phase[t]) && g.node(i, j).norm() < best) {
          best = g.node(i, j).norm();
          start = t;
        }
      }
    if (start < 0) break;
    phase[start] = root_arg(start);
    std::deque<int> queue{start};
    while (!queue.empty()) {
      const int t = queue.front();
      queue.pop_front();
      const int i = t % g.nx, j = t / g.nx;
      const int nb[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
      for (auto& p : nb) {
        if (p[0] < 0 || p[1] < 0 || p[0] >= g.nx || p[1] >= g.ny) continue;
        const int u = g.idx(p[0], p[1]);
        if (!g.valid[u] || !std::isnan(phase[u])) continue;
        const double a = root_arg(u), b = wrap(a + pi);
        phase[u] = std::abs(wrap(a - phase[t])) <= std::abs(wrap(b - phase[t])) ? a : b;
        queue.push_back(u);
      }
    }
  }
  return phase;
}

}  // namespace nhm
