#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "common.hpp"
#include "nhm/scatter.hpp"

using namespace nhm;
using nhm::test::rel_err;

namespace {

const Lattice2D sq = Lattice2D::square(0.2);
const Lattice2D rect = Lattice2D::rectangular(0.2, 1.1);

DipoleScene scene_of(std::vector<Vec3> pos) {
  DipoleScene s;
  s.positions = std::move(pos);
  return s;
}

double max_abs(const MatXc& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("bare polarizability") {
  const double c = 3.0 / (4.0 * pi * pi);
  CHECK(std::abs(bare_polarizability(0.0) - I1 * c) < 1e-15);
  const double im0 = (1.0 / bare_polarizability(0.0)).imag();
  for (double d : {-30.0, -2.5, -0.5, 0.1, 1.7, 30.0}) CHECK(std::abs((1.0 / bare_polarizability(d)).imag() - im0) < 1e-12 * std::abs(im0));
  CHECK(std::abs(std::abs(bare_polarizability(1e6)) * 1e6 - c / 2) < 1e-6 * c);
}

TEST_CASE("scene validation") {
  CHECK_THROWS_AS(validate(scene_of({})), DomainError);
  CHECK_THROWS_AS(validate(scene_of({Vec3(0, 0, 0), Vec3(0, 0, 0)})), DomainError);
  DipoleScene s = scene_of({Vec3(0, 0, 0)});
  s.pol_dof = 4;
  CHECK_THROWS_AS(validate(s), DomainError);
  const DipoleScene p = array_scene(rect, 3, 2, Boundary::parallelogram);
  CHECK(p.positions.size() == 6);
  CHECK((p.positions[3].head<2>() - (rect.a1 + rect.a2)).norm() < 1e-15);
}

TEST_CASE("single and paired atoms") {
  const Drive pw = plane_wave(Vec3(0, 0, 1), CVec3(1, 0, 0));
  SUBCASE("one atom responds with the bare polarizability") {
    for (double d : {0.0, 0.8, -3.0}) {
      DipoleSolver solver(scene_of({Vec3(0, 0, 0)}));
      const SolvedDipoles p = solver.solve(pw, d);
      CHECK(std::abs(p.p[0][0] - bare_polarizability(d)) < 1e-15);
      CHECK(std::abs(p.p[0][1]) == 0.0);
    }
  }
  SUBCASE("two atoms in the symmetric channel") {
    // equal drive at both sites: p = E / (1/alpha - q^2 G(d)) per axis
    const double dist = 0.31;
    for (double d : {0.0, 0.4}) {
      DipoleSolver solver(scene_of({Vec3(0, 0, 0), Vec3(dist, 0, 0)}));
      const Tensor3 G = green_real(Vec3(dist, 0, 0), q0);
      for (int ax = 0; ax < 2; ++ax) {
        CVec3 pol = CVec3::Zero();
        pol[ax] = 1.0;
        const SolvedDipoles p = solver.solve(plane_wave(Vec3(0, 0, 1), pol), d);
        const cplx ref = 1.0 / (1.0 / bare_polarizability(d) - q0 * q0 * G(ax, ax));
        CHECK(rel_err(p.p[0][ax], ref) < 1e-12);
        CHECK(rel_err(p.p[1][ax], ref) < 1e-12);
      }
    }
  }
}

TEST_CASE("resolvent identity") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  std::vector<Vec3> pos;
  while (pos.size() < 8) {
    const Vec3 r(u(rng), u(rng), 0.0);
    bool ok = true;
    for (const auto& s : pos) ok = ok && (s - r).norm() > 0.05;
    if (ok) pos.push_back(r);
  }
  for (int dof : {2, 3})
    for (double muB : {0.0, 0.5}) {
      DipoleScene s = scene_of(pos);
      s.pol_dof = dof;
      s.muB = muB;
      const MatXc H = interaction_hamiltonian(s);
      for (double d : {-0.5, 0.0, 1.3}) {
        const MatXc lhs = inverse_polarizability_matrix(s, d).inverse();
        MatXc A = -H;
        A.diagonal().array() += d;
        const MatXc rhs = -3.0 / (8.0 * pi * pi) * A.inverse();
        CHECK(rel_err(lhs, rhs) < 1e-10);
      }
      CHECK(interaction_hamiltonian(s, Exec::serial) == interaction_hamiltonian(s, Exec::parallel));
    }
}

TEST_CASE("fields") {
  DipoleSolver solver(array_scene(sq, 6, 6));
  const Drive pw = plane_wave(Vec3(0, 0, 1), CVec3(1, 0, 0));
  const SolvedDipoles p = solver.solve(pw, 0.2);
  CHECK(p.residual < 1e-10);
  SUBCASE("mirror symmetry about the atomic plane") {
    for (const Vec3& r : {Vec3(0.3, 0.4, 0.7), Vec3(-0.2, 1.1, 2.5), Vec3(0.5, 0.5, 0.05)}) {
      const double up = field_at(solver.scene(), p, pw, r).scattered.norm();
      const double dn = field_at(solver.scene(), p, pw, Vec3(r.x(), r.y(), -r.z())).scattered.norm();
      CHECK(std::abs(up - dn) < 1e-8 * up);
    }
  }
  SUBCASE("linearity in the drive") {
    Drive twice = pw;
    twice.amplitude = 2.0;
    const SolvedDipoles p2 = solver.solve(twice, 0.2);
    const Vec3 r(0.3, 0.4, 0.7);
    const CVec3 e1 = field_at(solver.scene(), p, pw, r).scattered;
    const CVec3 e2 = field_at(solver.scene(), p2, twice, r).scattered;
    CHECK((e2 - 2.0 * e1).norm() < 1e-14 * e1.norm());
  }
  SUBCASE("field at an atom is refused") {
    CHECK_THROWS_AS(field_at(solver.scene(), p, pw, solver.scene().positions[7]), DomainError);
  }
}

TEST_CASE("far-field scattering matrix") {
  SUBCASE("no polarization conversion at normal incidence on a square array") {
    DipoleSolver solver(array_scene(sq, 16, 16));
    const ScatterMatrix s = farfield_scatter_matrix(solver, Vec2::Zero(), 0.0);
    CHECK(std::abs(s.S_ps(0, 1)) < 1e-6 * std::abs(s.S_ps(0, 0)));
    CHECK(std::abs(s.S_ps(1, 0)) < 1e-6 * std::abs(s.S_ps(0, 0)));
  }
  SUBCASE("transparent far from resonance") {
    DipoleSolver solver(array_scene(sq, 16, 16));
    const double near = max_abs(farfield_scatter_matrix(solver, Vec2::Zero(), 0.0).S_ps);
    double prev = near;
    for (double d : {5.0, 10.0, 20.0, 30.0}) {
      const double s = max_abs(farfield_scatter_matrix(solver, Vec2::Zero(), d).S_ps);
      CHECK(s < prev);
      prev = s;
    }
    // far tail of a Lorentzian: |S| delta tends to a constant
    const double s20 = max_abs(farfield_scatter_matrix(solver, Vec2::Zero(), 20.0).S_ps);
    CHECK(std::abs(prev * 30.0 / (s20 * 20.0) - 1.0) < 0.05);
    CHECK(prev < 0.1 * near);
  }
  SUBCASE("several diffraction orders are refused") {
    DipoleSolver solver(array_scene(Lattice2D::square(1.2), 4, 4));
    CHECK_THROWS_AS(farfield_scatter_matrix(solver, Vec2::Zero(), 0.0), DomainError);
  }
}

TEST_CASE("extraction from synthetic infinite-array data") {
  const Vec2 k(0.1 * pi / 0.2, 0.0);
  const Tensor3 Hb = heff_bravais(rect, k, q0);
  const Mat2c bulk = Hb.topLeftCorner<2, 2>();
  SUBCASE("closed loop") {
    const ScatterMatrix a = synthetic_scatter_matrix(rect, k, 0.5);
    const ScatterMatrix b = synthetic_scatter_matrix(rect, k, -0.5);
    const ExtractedKernel e = extract_heff(a, b, k);
    CHECK((e.H - bulk).norm() < 1e-8 * bulk.norm());
    const BandPoint bp = diagonalize2(bulk);
    CHECK(std::min(std::abs(e.E1 - bp.E1), std::abs(e.E1 - bp.E2)) < 1e-8 * bulk.norm());
  }
  SUBCASE("detuning pair independence") {
    auto pair = [&](double d1, double d2, bool z) {
      return extract_heff(synthetic_scatter_matrix(rect, k, d1, q0, {}, 0, z),
                          synthetic_scatter_matrix(rect, k, d2, q0, {}, 0, z), k)
          .H;
    };
    CHECK((pair(0.5, -0.5, false) - pair(0.3, -0.7, false)).cwiseAbs().maxCoeff() < 1e-3);
    // z dipoles driven through sin(theta) shift the kernel by t^2 (d - H) P (d - H) / (d - 30) to first
    // order; moving both detunings by 0.2 changes that by at most 2 t^2 |H| 0.2 / 30
    const double t2 = std::pow(std::tan(std::asin(k.norm() / q0)), 2);
    const double dz = (pair(0.5, -0.5, true) - pair(0.3, -0.7, true)).cwiseAbs().maxCoeff();
    CHECK(dz > 1e-5);
    CHECK(dz < 2 * t2 * bulk.norm() * 0.2 / 30.0);
  }
  SUBCASE("out-of-plane contribution to the pp element") {
    const ScatterMatrix with = synthetic_scatter_matrix(rect, k, 0.5, q0, {}, 0, true);
    const ScatterMatrix without = synthetic_scatter_matrix(rect, k, 0.5, q0, {}, 0, false);
    const double rel = std::abs(with.S_ps(0, 0) - without.S_ps(0, 0)) / std::abs(without.S_ps(0, 0));
    CHECK(rel > 0.0);
    CHECK(rel < 1.0 / 60.0);
  }
  SUBCASE("equal detunings are refused") {
    const ScatterMatrix a = synthetic_scatter_matrix(rect, k, 0.5);
    CHECK_THROWS(extract_heff(a, a, k));
  }
}

TEST_CASE("energy balance at normal incidence") {
  DipoleSolver solver(array_scene(sq, 24, 24));
  const Drive pw = plane_wave(Vec3(0, 0, 1), CVec3(1, 0, 0));
  const EnergyBalance e = energy_balance(solver.scene(), solver.solve(pw, 0.0), pw);
  CHECK(e.R + e.T >= 0.95);
  CHECK(e.R + e.T <= 1.05);
  CHECK(e.R > 0.5);
}

TEST_CASE("finite array modes") {
  SUBCASE("bookkeeping") {
    const DipoleScene s = array_scene(rect, 12, 8);
    const FiniteModes f = finite_array_modes(s);
    const MatXc H = interaction_hamiltonian(s);
    REQUIRE(f.energies.size() == 2 * 96);
    for (Eigen::Index i = 0; i < f.energies.size(); ++i) {
      CHECK((H * f.states.col(i) - f.energies[i] * f.states.col(i)).norm() < 1e-10 * H.norm());
      if (i > 0) CHECK(f.energies[i - 1].imag() <= f.energies[i].imag());
      CHECK(f.boundary[std::size_t(i)] >= 0.0);
      CHECK(f.boundary[std::size_t(i)] <= 1.0 + 1e-12);
    }
    double sum = 0;
    for (double v : f.S_NH) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-12);
    CHECK(f.N_prime == int(std::lround(pi * 0.2 * 0.2 / 1.1 * 2 * 96)));
  }
  SUBCASE("square array has no skin accumulation") {
    const FiniteModes f = finite_array_modes(array_scene(sq, 14, 14));
    const auto [lo, hi] = std::minmax_element(f.S_NH.begin(), f.S_NH.end());
    CHECK(*hi / *lo < 3.0);
  }
}
