#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/gauss.hpp>

#include "common.hpp"
#include "nhm/emsum.hpp"
#include "nhm/oracle.hpp"

using namespace nhm;
using nhm::test::rel_err;

namespace {

SmoothField constant_field(cplx c) {
  SmoothField f;
  f.value = [c](const Vec2&, cplx* out) { out[0] = c; };
  f.partials = [c](const Vec2&, int K, cplx* out) {
    for (int i = 0; i < tri_size(K); ++i) out[i] = 0.0;
    out[0] = c;
  };
  return f;
}

// exp(-|p|^2 / (2 s^2)) with exact partials via Hermite polynomials.
SmoothField gaussian_field(double s) {
  auto axis = [s](double x, int K, double* d) {
    const double t = x / s, g = std::exp(-0.5 * t * t);
    double hm = 1.0, h = t;
    d[0] = g;
    if (K >= 1) d[1] = -h * g / s;
    for (int n = 1; n < K; ++n) {
      const double hn = t * h - n * hm;
      hm = h;
      h = hn;
      d[n + 1] = std::pow(-1.0 / s, n + 1) * h * g;
    }
  };
  SmoothField f;
  f.value = [s](const Vec2& p, cplx* out) { out[0] = std::exp(-0.5 * p.squaredNorm() / (s * s)); };
  f.partials = [axis](const Vec2& p, int K, cplx* out) {
    double dx[16], dy[16];
    axis(p.x(), K, dx);
    axis(p.y(), K, dy);
    for (int d = 0; d <= K; ++d)
      for (int j = 0; j <= d; ++j) out[tri_index(d - j, j)] = dx[d - j] * dy[j];
  };
  return f;
}

// Integral of f over a convex polygon by fan triangulation and tensor Gauss-Legendre.
double polygon_integral(const SmoothField& f, const std::vector<Vec2>& poly, const Vec2& shift) {
  using Q = boost::math::quadrature::gauss<double, 40>;
  const Vec2 c = Vec2::Zero();
  double total = 0.0;
  for (std::size_t e = 0; e < poly.size(); ++e) {
    const Vec2 a = poly[e] - c, b = poly[(e + 1) % poly.size()] - c;
    const double jac = std::abs(a.x() * b.y() - a.y() * b.x());
    total += Q::integrate(
        [&](double u) {
          return Q::integrate(
              [&](double v) {
                cplx val;
                f.value(c + u * (a + v * (b - a)) + shift, &val);
                return u * jac * val.real();
              },
              0.0, 1.0);
        },
        0.0, 1.0);
  }
  return total;
}

// Sum over the hollow region minus its integral, by brute force over a finite window.
double brute_hollow(const SmoothField& f, const TilingSpec& spec, const Vec2& k0, long window) {
  const HollowGeometry g = hollow_geometry(spec);
  double all = 0.0, inner = 0.0;
  for (long m = -window; m <= window; ++m)
    for (long n = -window; n <= window; ++n) {
      cplx v;
      f.value(double(m) * spec.b1 + double(n) * spec.b2 + k0, &v);
      all += v.real();
    }
  for (const Vec2& G : g.inner) {
    cplx v;
    f.value(G + k0, &v);
    inner += v.real();
  }
  return all - inner;
}

}  // namespace

TEST_CASE("constant field reduces to area weights") {
  const auto f = constant_field(1.0);
  TilingSpec r;
  r.b1 = Vec2(1, 0);
  r.b2 = Vec2(0, 1);
  for (int M : {2, 4, 8}) {
    r.M = M;
    r.derivatives = DerivativeMode::analytic;
    CHECK(std::abs(corrections_rect_vertex(f, RectVertex::interior, Vec2(2, 3), r)[0] - 1.0) < 1e-14);
    CHECK(std::abs(corrections_rect_vertex(f, RectVertex::edge_x, Vec2(2, 3), r, 1)[0] - 0.5) < 1e-14);
    CHECK(std::abs(corrections_rect_vertex(f, RectVertex::edge_y, Vec2(2, 3), r, 1, -1)[0] - 0.5) < 1e-14);
    CHECK(std::abs(corrections_rect_vertex(f, RectVertex::corner, Vec2(2, 3), r, -1, 1)[0] - 0.25) < 1e-14);
  }
  TilingSpec t;
  t.kind = TilingKind::triangular;
  t.b1 = Vec2(1, 0);
  t.b2 = Vec2(0.5, std::sqrt(3.0) / 2);
  const double area = std::sqrt(3.0) / 2;
  for (int M : {2, 4, 6}) {
    t.M = M;
    t.derivatives = DerivativeMode::analytic;
    CHECK(std::abs(corrections_tri_vertex(f, TriVertex::interior, t.b1, t)[0] - area) < 1e-14);
    CHECK(std::abs(corrections_tri_vertex(f, TriVertex::edge, t.b1, t, 90)[0] - area / 2) < 1e-14);
    CHECK(std::abs(corrections_tri_vertex(f, TriVertex::corner, t.b1, t, 120)[0] - area / 3) < 1e-14);
  }
  CHECK_THROWS_AS(corrections_rect_vertex(f, RectVertex::interior, Vec2(0.5, 0), r), DomainError);
}

TEST_CASE("edge vertex with a quadratic field") {
  SmoothField f;
  f.value = [](const Vec2& p, cplx* out) { out[0] = p.x() * p.x(); };
  TilingSpec r;
  r.b1 = Vec2(0.7, 0);
  r.b2 = Vec2(0, 1.3);
  const Vec2 P(2.1, -1.3);
  const double b1 = 0.7, b2 = 1.3, B2 = 1.0 / 6.0;
  // occupied side towards -x
  const cplx c = corrections_rect_vertex(f, RectVertex::edge_x, P, r, -1)[0];
  CHECK(std::abs(c - (0.5 * b1 * b2 * P.x() * P.x() - b2 * (b1 * b1 / 2) * B2 * 2 * P.x())) < 1e-9);
  const cplx c2 = corrections_rect_vertex(f, RectVertex::edge_x, P, r, 1)[0];
  CHECK(std::abs(c2 - (0.5 * b1 * b2 * P.x() * P.x() + b2 * (b1 * b1 / 2) * B2 * 2 * P.x())) < 1e-9);
}

TEST_CASE("triangular corner is invariant under a 120 degree rotation") {
  TilingSpec t;
  t.kind = TilingKind::triangular;
  t.b1 = Vec2(1, 0);
  t.b2 = Vec2(0.5, std::sqrt(3.0) / 2);
  t.M = 4;
  t.derivatives = DerivativeMode::analytic;
  const Vec2 P = 2.0 * t.b1 + t.b2;
  auto make = [P](double rot) {
    SmoothField f;
    auto eval = [P, rot](const Jet2& X, const Jet2& Y) {
      const double c = std::cos(rot), s = std::sin(rot);
      const Jet2 u = (X + cplx(-P.x())) * c + (Y + cplx(-P.y())) * s;
      const Jet2 v = (Y + cplx(-P.y())) * c - (X + cplx(-P.x())) * s;
      return ((u + cplx(-0.3)) * (u + cplx(-0.3)) + 0.5 * (v * v) + 0.2 * (u * v) + cplx(1.0)).inverse() + u * u * v;
    };
    f.value = [eval](const Vec2& p, cplx* out) { out[0] = eval(Jet2(0, p.x()), Jet2(0, p.y()))[0]; };
    f.partials = [eval](const Vec2& p, int K, cplx* out) {
      const Jet2 r = eval(Jet2::variable(K, p.x(), 0), Jet2::variable(K, p.y(), 1));
      for (int d = 0; d <= K; ++d)
        for (int j = 0; j <= d; ++j) out[tri_index(d - j, j)] = r.partial(d - j, j);
    };
    return f;
  };
  for (double bis : {0.0, 60.0, 120.0}) {
    const cplx a = corrections_tri_vertex(make(0.0), TriVertex::corner, P, t, bis)[0];
    const cplx b = corrections_tri_vertex(make(2 * pi / 3), TriVertex::corner, P, t, bis + 120)[0];
    CHECK(std::abs(a - b) < 1e-10 * std::abs(a));
  }
}

TEST_CASE("hollow sum of compact support vanishes") {
  SmoothField f;
  f.value = [](const Vec2& p, cplx* out) {
    const double r2 = p.squaredNorm() / 4.0;
    out[0] = r2 < 1 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
  };
  TilingSpec r;
  r.b1 = Vec2(1, 0);
  r.b2 = Vec2(0, 1);
  r.unit = 1.0;
  r.R_inner = 6.0;
  CHECK(std::abs(hollow_sum(f, r, Vec2(0.2, 0.1))[0]) == 0.0);
}

TEST_CASE("gaussian hollow sum against brute force") {
  const double s = 1.2;
  const auto f = gaussian_field(s);
  const Vec2 k0(0.31, -0.17);
  SUBCASE("rectangular") {
    TilingSpec r;
    r.b1 = Vec2(0.3, 0);
    r.b2 = Vec2(0, 0.35);
    r.unit = 1.0;
    r.R_inner = 4.0;
    r.M = 8;
    const HollowGeometry g = hollow_geometry(r);
    const double integral = (2 * pi * s * s - polygon_integral(f, g.polygon, k0)) / r.cell_area();
    const double ref = brute_hollow(f, r, k0, 100) - integral;
    const double got = hollow_sum(f, r, k0)[0].real();
    CHECK(std::abs(got - ref) < 1e-8);
    CHECK(hollow_sum(f, r, k0, Exec::parallel)[0] == hollow_sum(f, r, k0, Exec::serial)[0]);
  }
  SUBCASE("triangular") {
    TilingSpec t;
    t.kind = TilingKind::triangular;
    t.b1 = Vec2(0.3, 0);
    t.b2 = Vec2(0.15, 0.15 * std::sqrt(3.0));
    t.unit = 1.0;
    t.R_inner = 4.0;
    t.M = 8;
    const HollowGeometry g = hollow_geometry(t);
    const double integral = (2 * pi * s * s - polygon_integral(f, g.polygon, k0)) / t.cell_area();
    const double ref = brute_hollow(f, t, k0, 100) - integral;
    CHECK(std::abs(hollow_sum(f, t, k0)[0].real() - ref) < 1e-8);
  }
}

TEST_CASE("hollow sum rejects a boundary inside the cone") {
  const auto lat = Lattice2D::square(1.5);
  TilingSpec spec = make_tiling(lat, 2, 0.5);
  CHECK_THROWS_AS(periodic_green_sum(lat, Vec2::Zero(), q0, spec), DomainError);
}

TEST_CASE("periodic green sum symmetries") {
  const auto sq = Lattice2D::square(0.2);
  const auto re = Lattice2D::rectangular(0.2, 1.1);
  SUBCASE("c4 kills xy at k = 0") {
    for (int M : {2, 4}) {
      const GreenSum s = periodic_green_sum(sq, Vec2::Zero(), q0, EMOptions{M, 8.0});
      CHECK(std::abs(s.value(0, 1)) < 1e-10 * std::abs(s.value(0, 0)));
    }
  }
  SUBCASE("reciprocity") {
    for (const auto& lat : {sq, re}) {
      const Vec2 k(0.37 * q0, -0.52 * q0);
      const Tensor3 p = periodic_green_sum(lat, k, q0).value, m = periodic_green_sum(lat, -k, q0).value;
      CHECK(rel_err(p, Tensor3(m.transpose())) < 1e-10);
    }
  }
  SUBCASE("lossless outside the cone") {
    const Vec2 k(1.3 * q0, 0.4 * q0);
    const GreenSum s = periodic_green_sum(sq, k, q0, EMOptions{4, 8.0});
    for (int i = 0; i < 2; ++i) {
      const cplx h = -0.5 * I1 - coupling_prefactor(q0) * s.value(i, i);
      CHECK(std::abs(h.imag()) < 1e-6);
    }
  }
}

TEST_CASE("periodic green sum against the damped real-space sum") {
  const auto sq = Lattice2D::square(0.2);
  OracleOptions opt;
  opt.h = 0.3;
  opt.n = 10;
  const Tensor3 ref = realspace_green_sum(sq, Vec2::Zero(), q0, Vec2::Zero(), opt);
  const Tensor3 em = periodic_green_sum(sq, Vec2::Zero(), q0, EMOptions{4, 8.0}).value;
  CHECK(rel_err(Tensor3(em.block(0, 0, 2, 2)), Tensor3(ref.block(0, 0, 2, 2))) < 1e-4);
}

TEST_CASE("lamb shift at normal incidence") {
  const double a = 0.2;
  const LambShift l = lamb_shift_normal(a, 8.0, 4);
  // only the zeroth diffraction order radiates
  CHECK(l.Gamma == doctest::Approx(3.0 / (4 * pi * a * a)).epsilon(1e-8));
  CHECK_FALSE(l.near_divergence);
  const LambShift d1 = lamb_shift_normal(1.0);
  CHECK((d1.singular || d1.near_divergence));
  const LambShift d2 = lamb_shift_normal(std::sqrt(2.0));
  CHECK((d2.singular || d2.near_divergence));
  CHECK(lamb_shift_normal(1.0005).near_divergence);
}

TEST_CASE("inner-region dependence shrinks with order") {
  auto diff = [](int M) {
    return std::abs(lamb_shift_normal(0.2, 4.0, M).Delta - lamb_shift_normal(0.2, 8.0, M).Delta);
  };
  const double d2 = diff(2), d4 = diff(4);
  MESSAGE("R=4 vs R=8 at a=0.2: M=2 ", d2, ", M=4 ", d4);
  CHECK(d4 < d2);
  const double d8 = std::abs(lamb_shift_normal(0.2, 8.0, 8).Delta - lamb_shift_normal(0.2, 16.0, 8).Delta);
  CHECK(d8 < 1e-6);
}

TEST_CASE("sublattice sums") {
  const auto hc = Lattice2D::honeycomb(0.25);
  const auto rb = reciprocal_basis(hc);
  const PhaseClasses pc = phase_classes(rb, hc.offsets[0] - hc.offsets[1]);
  cplx wsum = 0.0;
  for (const auto& c : pc.classes) wsum += c.weight;
  CHECK(pc.classes.size() == 3);
  CHECK(std::abs(wsum) < 1e-15);
  const Vec2 k(0.21 * q0, 0.33 * q0);
  const Tensor3 ab = offdiag_sublattice_sum(hc, 0, 1, k, q0, EMOptions{4, 8.0}).value;
  const Tensor3 ba = offdiag_sublattice_sum(hc, 1, 0, -k, q0, EMOptions{4, 8.0}).value;
  CHECK(rel_err(ab, Tensor3(ba.transpose())) < 1e-10);
  OracleOptions opt;
  opt.h = 0.3;
  opt.n = 10;
  const Tensor3 ref = realspace_green_sum(hc, k, q0, hc.offsets[0] - hc.offsets[1], opt);
  CHECK(rel_err(Tensor3(ab.block(0, 0, 2, 2)), Tensor3(ref.block(0, 0, 2, 2))) < 1e-4);
  CHECK_THROWS_AS(phase_classes(rb, hc.a1), DomainError);
}
