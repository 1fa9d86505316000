#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"
#include "nhm/bands.hpp"
#include "nhm/linalg.hpp"
#include "nhm/ribbon.hpp"

using namespace nhm;

namespace {

const Lattice2D sq = Lattice2D::square(0.2);
const Lattice2D rect = Lattice2D::rectangular(0.2, 1.1);
const double kp01 = 0.1 * pi / 0.2;

Mat2c sz() {
  Mat2c s;
  s << 1, 0, 0, -1;
  return s;
}

// distance from each point of a to the nearest point of b
double one_sided(const VecXc& a, const VecXc& b) {
  double d = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) d = std::max(d, (b.array() - a[i]).abs().minCoeff());
  return d;
}

}  // namespace

TEST_CASE("chain coupling symmetries") {
  const double a = 0.2 * std::sqrt(2.0);
  const Vec2 e(1.0, 0.0);
  SUBCASE("reciprocity at zero parallel momentum") {
    for (double b : {0.0, 0.3 * a, 0.5 * a})
      for (double y : {0.14, 0.45}) {
        const Mat2c t = chain_coupling(0.0, b, y, q0, a, e);
        const Mat2c u = chain_coupling(0.0, -b, -y, q0, a, e);
        CHECK((t - u.transpose()).norm() < 1e-10 * t.norm());
      }
    // away from k = 0 the relation is broken
    const Mat2c t = chain_coupling(0.3 * q0, 0.3 * a, 0.14, q0, a, e);
    const Mat2c u = chain_coupling(0.3 * q0, -0.3 * a, -0.14, q0, a, e);
    CHECK((t - u.transpose()).norm() > 1e-3 * t.norm());
  }
  SUBCASE("mirror across the chain axis") {
    for (double k : {0.0, 0.3 * q0, 1.4 * q0}) {
      const Mat2c t = chain_coupling(k, 0.5 * a, 0.14, q0, a, e);
      const Mat2c u = chain_coupling(k, 0.5 * a, -0.14, q0, a, e);
      CHECK((u - sz() * t * sz()).norm() < 1e-10 * t.norm());
    }
  }
  SUBCASE("evanescent decay across chains") {
    // outside the cone the slowest term decays like exp(-kappa y)
    const double k = 1.6 * q0, kappa = std::sqrt(k * k - q0 * q0);
    const double n1 = chain_coupling(k, 0.0, 0.5, q0, a, e).norm();
    const double n2 = chain_coupling(k, 0.0, 1.0, q0, a, e).norm();
    CHECK(std::abs(std::log(n1 / n2) / 0.5 - kappa) < 0.15 * kappa);
  }
}

TEST_CASE("ribbon assembly") {
  SUBCASE("toeplitz blocks") {
    const RibbonModel m = assemble_ribbon(rect, {1, 1}, 9, kp01);
    CHECK(m.H.rows() == 18);
    for (int r = 0; r + 1 < 9; ++r)
      for (int s = 0; s + 1 < 9; ++s) {
        const Mat2c a = m.H.block<2, 2>(2 * r, 2 * s), b = m.H.block<2, 2>(2 * r + 2, 2 * s + 2);
        CHECK(a == b);
      }
  }
  SUBCASE("two chains by hand") {
    const RibbonModel m = assemble_ribbon(rect, {1, 1}, 2, kp01);
    const ChainDecomposition& cd = m.chains;
    MatXc H(4, 4);
    const Mat2c self = chain_coupling(kp01, 0.0, 0.0, q0, cd.a_par, cd.e_par) - 0.5 * I1 * Mat2c::Identity();
    const double b = -cd.par_step, y = -cd.perp_spacing;
    const Mat2c up = std::exp(-I1 * kp01 * b) * chain_coupling(kp01, b, y, q0, cd.a_par, cd.e_par);
    const Mat2c dn = std::exp(I1 * kp01 * b) * chain_coupling(kp01, -b, -y, q0, cd.a_par, cd.e_par);
    H << self, up, dn, self;
    CHECK((m.H - H).norm() < 1e-14 * H.norm());
  }
  SUBCASE("serial and parallel assembly agree") {
    CHECK(assemble_ribbon(rect, {1, 1}, 12, kp01, q0, Exec::serial).H ==
          assemble_ribbon(rect, {1, 1}, 12, kp01, q0, Exec::parallel).H);
  }
  SUBCASE("inversion and reciprocity") {
    const int L = 20;
    MatXc P = MatXc::Zero(2 * L, 2 * L);
    for (int r = 0; r < L; ++r) P.block<2, 2>(2 * r, 2 * (L - 1 - r)) = Mat2c::Identity();
    // symmetric blocks make H persymmetric at any momentum
    const RibbonModel n = assemble_ribbon(rect, {1, 1}, L, kp01);
    CHECK((P * n.H.transpose() * P - n.H).norm() < 1e-10 * n.H.norm());
    CHECK((n.H - n.H.transpose()).norm() > 1e-4 * n.H.norm());
    // combined with inversion, only k_par = 0 is reciprocal
    const RibbonModel m = assemble_ribbon(rect, {1, 1}, L, 0.0);
    CHECK((m.H - m.H.transpose()).norm() < 1e-10 * m.H.norm());
  }
  SUBCASE("square [1,1] ribbon symmetry class") {
    const int L = 16;
    const RibbonModel m = assemble_ribbon(sq, {1, 1}, L, kp01);
    MatXc Tp = MatXc::Zero(2 * L, 2 * L);
    for (int r = 0; r < L; ++r) Tp.block<2, 2>(2 * r, 2 * r) = sz();
    CHECK((Tp * m.H.transpose() * Tp - m.H).norm() < 1e-10 * m.H.norm());
  }
}

TEST_CASE("open-boundary spectra") {
  const int L = 40;
  SUBCASE("eigenpairs, ordering and normalization") {
    const RibbonModel m = assemble_ribbon(rect, {1, 1}, L, kp01);
    const ObcResult r = obc_spectrum(m, rect);
    REQUIRE(r.energies.size() == 2 * L);
    const double hn = m.H.norm();
    for (Eigen::Index i = 0; i < r.energies.size(); ++i) {
      CHECK((m.H * r.states.col(i) - r.energies[i] * r.states.col(i)).norm() < 1e-10 * hn);
      CHECK(std::abs(r.states.col(i).norm() - 1.0) < 1e-12);
      if (i > 0) CHECK(r.energies[i - 1].imag() <= r.energies[i].imag());
    }
    double s = 0;
    for (double v : r.S_NH) {
      CHECK(v >= 0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) < 1e-12);
    CHECK(r.N_prime == int(std::lround(2.0 * L * cone_fraction(rect, m.chains, kp01, q0))));
  }
  SUBCASE("skin localization flips with the parallel momentum") {
    const ObcResult p = obc_spectrum(assemble_ribbon(rect, {1, 1}, L, kp01), rect);
    const ObcResult n = obc_spectrum(assemble_ribbon(rect, {1, 1}, L, -kp01), rect);
    const double rp = edge_mass(p.S_NH, 0.1, true) / edge_mass(p.S_NH, 0.1, false);
    const double rn = edge_mass(n.S_NH, 0.1, true) / edge_mass(n.S_NH, 0.1, false);
    CHECK(((rp > 5 && rn < 0.2) || (rp < 0.2 && rn > 5)));
  }
  SUBCASE("square and zero momentum are delocalized") {
    for (const auto& [lat, k] : {std::pair{sq, kp01}, std::pair{rect, 0.0}}) {
      const ObcResult r = obc_spectrum(assemble_ribbon(lat, {1, 1}, L, k), lat);
      const auto [lo, hi] = std::minmax_element(r.S_NH.begin(), r.S_NH.end());
      CHECK(*hi / *lo < 3.0);
    }
  }
  SUBCASE("doubly degenerate spectrum at zero momentum") {
    // real-symmetric-like pairing: each eigenvalue has a partner
    const RibbonModel m = assemble_ribbon(rect, {1, 1}, L, 0.0);
    const VecXc e = eig(m.H, false).values;
    const VecXc et = eig(m.H.transpose().eval(), false).values;
    CHECK(hausdorff(e, et) < 1e-8);
  }
}

TEST_CASE("bulk slices") {
  const ChainDecomposition cd = ribbon_decomposition(rect, {1, 1}, 40);
  const double P = two_pi / cd.perp_spacing;
  std::vector<double> ks, mk;
  for (double f : {0.07, 0.19, 0.33, 0.41}) {
    ks.push_back(f * P);
    mk.push_back(-f * P);
  }
  SUBCASE("square slice is even in k_perp") {
    const ChainDecomposition cs = ribbon_decomposition(sq, {1, 1}, 40);
    const double Ps = two_pi / cs.perp_spacing;
    std::vector<double> a, b;
    for (double f : {0.07, 0.19, 0.33, 0.41}) {
      a.push_back(f * Ps);
      b.push_back(-f * Ps);
    }
    const auto s1 = bulk_slice_spectrum(sq, cs, kp01, q0, a), s2 = bulk_slice_spectrum(sq, cs, kp01, q0, b);
    for (std::size_t i = 0; i < s1.size(); ++i) {
      const double d = std::min(std::abs(s1[i].E1 - s2[i].E1) + std::abs(s1[i].E2 - s2[i].E2),
                                std::abs(s1[i].E1 - s2[i].E2) + std::abs(s1[i].E2 - s2[i].E1));
      CHECK(d < 1e-8 * std::abs(s1[i].E1));
    }
  }
  SUBCASE("rectangular slice is not") {
    const auto s1 = bulk_slice_spectrum(rect, cd, kp01, q0, ks), s2 = bulk_slice_spectrum(rect, cd, kp01, q0, mk);
    double worst = 0;
    for (std::size_t i = 0; i < s1.size(); ++i)
      worst = std::max(worst, std::min(std::abs(s1[i].E1 - s2[i].E1) + std::abs(s1[i].E2 - s2[i].E2),
                                       std::abs(s1[i].E1 - s2[i].E2) + std::abs(s1[i].E2 - s2[i].E1)));
    CHECK(worst > 1e-3);
  }
  SUBCASE("cone crossings sit on the circle") {
    const auto xs = slice_cone_crossings(rect, cd, kp01, q0);
    CHECK(xs.size() == 2);
    const ReciprocalBasis rb = reciprocal_basis(rect);
    for (double x : xs) CHECK(cone_gap(rb, kp01 * cd.e_par + x * cd.e_perp, q0) < 1e-10);
  }
  SUBCASE("bloch form of an evanescent ribbon matches the bulk") {
    // outside every cone the couplings decay exponentially, so a wide ribbon
    // truncates nothing visible
    const double k = 2.5 * q0;
    const RibbonModel m = assemble_ribbon(rect, {1, 1}, 30, k);
    const auto s = bulk_slice_spectrum(rect, m.chains, k, q0, ks, EMOptions{6, 8.0});
    for (std::size_t i = 0; i < ks.size(); ++i) {
      const BandPoint b = diagonalize2(bloch_beta(m, std::exp(I1 * ks[i] * m.chains.perp_spacing)));
      const double d = std::min(std::abs(b.E1 - s[i].E1) + std::abs(b.E2 - s[i].E2),
                                std::abs(b.E1 - s[i].E2) + std::abs(b.E2 - s[i].E1));
      CHECK(d < 1e-5 * std::abs(s[i].E1));
    }
  }
  SUBCASE("obc spectra approach the slice as the ribbon widens") {
    std::vector<double> grid;
    for (int i = 0; i < 4000; ++i) grid.push_back((i + 0.5) * P / 4000);
    const auto s = bulk_slice_spectrum(rect, cd, kp01, q0, grid);
    std::vector<cplx> pts;
    for (const auto& x : s)
      if (!x.near_cone) {
        pts.push_back(x.E1);
        pts.push_back(x.E2);
      }
    const VecXc bulk = Eigen::Map<VecXc>(pts.data(), Eigen::Index(pts.size()));
    double prev = 1e300;
    for (int L : {40, 80, 160}) {
      const VecXc e = eig(assemble_ribbon(rect, {1, 1}, L, kp01).H, false).values;
      const double d = one_sided(bulk, e);
      CHECK(d < prev);
      prev = d;
    }
  }
}

TEST_CASE("spectral winding") {
  const ChainDecomposition cd = ribbon_decomposition(rect, {1, 1}, 2);
  SUBCASE("reference energies") {
    CHECK(winding_number(rect, cd, kp01, q0, cplx(-0.2, -3.2)).W == 1);
    CHECK(winding_number(rect, cd, kp01, q0, cplx(3.0, -3.2)).W == 0);
    const WindingResult far = winding_number(rect, cd, kp01, q0, cplx(40.0, 40.0));
    CHECK(far.W == 0);
    CHECK(far.snap_error < 1e-2);
  }
  SUBCASE("cone jumps cancel") {
    const WindingResult w = winding_number(rect, cd, kp01, q0, cplx(-0.2, -3.2), 2000, {}, 1e-5);
    REQUIRE(w.jumps.size() == 2);
    CHECK(std::abs(std::abs(w.jumps[0]) - pi / 2) < 0.05);
    CHECK(std::abs(std::abs(w.jumps[1]) - pi / 2) < 0.05);
    CHECK(std::abs(w.jump_sum) < 1e-3 * two_pi);
    CHECK(w.snap_error < 1e-2);
  }
  SUBCASE("square slice has no winding") {
    const ChainDecomposition cs = ribbon_decomposition(sq, {1, 1}, 2);
    CHECK(winding_number(sq, cs, kp01, q0, cplx(-0.2, -3.2)).W == 0);
  }
  SUBCASE("coarse sampling is refused") {
    CHECK_THROWS_AS(winding_number(rect, cd, kp01, q0, cplx(-0.2, -3.2), 16), NyquistError);
  }
}

TEST_CASE("characteristic roots") {
  const int L = 24;
  SUBCASE("count and null vectors") {
    const RibbonModel m = assemble_ribbon(rect, {1, 1}, L, kp01);
    const ObcResult r = obc_spectrum(m, rect);
    const cplx E = r.energies[Eigen::Index(std::lround(0.2 * L) - 1)];
    const BetaSolutionSet s = characteristic_roots(m, E);
    CHECK(s.roots.size() + s.infinite == 4 * (L - 1));
    for (Eigen::Index i = 0; i < s.roots.size(); ++i) {
      if (i > 0) CHECK(std::abs(s.roots[i - 1]) <= std::abs(s.roots[i]));
      const Mat2c h = bloch_beta(m, s.roots[i]) - E * Mat2c::Identity();
      const double scale = std::max(1.0, std::pow(std::abs(s.roots[i]), double(L - 1)));
      CHECK((h * s.A[std::size_t(i)]).norm() < 1e-7 * scale * m.H.norm());
    }
  }
  auto unpaired = [](const BetaSolutionSet& s, double tol) {
    int n = 0;
    for (Eigen::Index i = 0; i < s.roots.size(); ++i) {
      const cplx inv = 1.0 / s.roots[i];
      const double d = (s.roots.array() - inv).abs().minCoeff();
      if (d > tol * std::abs(inv)) ++n;
    }
    return n;
  };
  SUBCASE("mirror symmetric ribbon pairs beta with its inverse") {
    const RibbonModel m = assemble_ribbon(sq, {1, 1}, L, kp01);
    const BetaSolutionSet s = characteristic_roots(m, obc_spectrum(m, sq).energies[4]);
    CHECK(unpaired(s, 1e-6) == 0);
  }
  SUBCASE("rectangular ribbon does not") {
    const RibbonModel m = assemble_ribbon(rect, {1, 1}, L, kp01);
    const BetaSolutionSet s = characteristic_roots(m, obc_spectrum(m, rect).energies[4]);
    CHECK(unpaired(s, 1e-3) >= int(0.2 * double(s.roots.size())));
  }
  SUBCASE("reconstruction of an open-boundary state") {
    const int Lr = 40;
    const RibbonModel m = assemble_ribbon(rect, {1, 1}, Lr, kp01);
    const ObcResult r = obc_spectrum(m, rect);
    const Eigen::Index n = std::lround(0.2 * Lr) - 1;
    const BetaSolutionSet s = characteristic_roots(m, r.energies[n]);
    const Reconstruction rc = reconstruct_eigenstate(s, r.states.col(n), Lr);
    CHECK(rc.residual < 1e-6);
    CHECK(rc.boundary_residual < 1e-6);
    CHECK(rc.partial_residual > 0.5);
    const double wmax = *std::max_element(rc.weights.begin(), rc.weights.end());
    CHECK(std::count_if(rc.weights.begin(), rc.weights.end(), [&](double w) { return w > 0.01 * wmax; }) > 2);
    CHECK_THROWS_AS(reconstruct_eigenstate(s, r.states.col(n).head(4), Lr), DomainError);
  }
}

TEST_CASE("characteristic length") {
  SUBCASE("pure exponential") {
    std::vector<double> p(100);
    for (int i = 0; i < 100; ++i) p[std::size_t(i)] = std::exp(-i / 7.0);
    const LengthFit f = fit_characteristic_length(p);
    CHECK(!f.delocalized);
    CHECK(std::abs(f.xi - 7.0) < 1e-9);
    CHECK(std::abs(f.xi_over_L - 0.07) < 1e-11);
    CHECK(f.end - f.start == 100);
  }
  SUBCASE("flat profile is delocalized") {
    std::vector<double> p(100, 0.01);
    for (int i = 0; i < 100; ++i) p[std::size_t(i)] *= 1.0 + 0.2 * std::sin(0.9 * i);
    CHECK(fit_characteristic_length(p).delocalized);
  }
  SUBCASE("square ribbon state is delocalized") {
    const int L = 40;
    const RibbonModel m = assemble_ribbon(sq, {1, 1}, L, kp01);
    const ObcResult r = obc_spectrum(m, sq);
    CHECK(fit_characteristic_length(r.S_NH).delocalized);
  }
  CHECK_THROWS_AS(fit_characteristic_length(std::vector<double>(4, 1.0)), DomainError);
}
