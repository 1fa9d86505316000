#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nhm/lattice.hpp"

using namespace nhm;

TEST_CASE("reciprocal bases") {
  auto sq = reciprocal_basis(Lattice2D::square(0.2));
  CHECK((sq.b1 - Vec2(two_pi / 0.2, 0)).norm() < 1e-12);
  CHECK((sq.b2 - Vec2(0, two_pi / 0.2)).norm() < 1e-12);
  auto re = reciprocal_basis(Lattice2D::rectangular(0.2, 1.1));
  CHECK(re.b1.norm() == doctest::Approx(two_pi * 1.1 / 0.2).epsilon(1e-14));
  CHECK(re.b2.norm() == doctest::Approx(two_pi / 0.2).epsilon(1e-14));
  for (const auto& lat : {Lattice2D::square(0.3), Lattice2D::rectangular(0.2, 1.05), Lattice2D::triangular(0.4),
                          Lattice2D::honeycomb(0.25), Lattice2D::kagome(0.5)}) {
    auto rb = reciprocal_basis(lat);
    CHECK(std::abs(rb.b1.dot(lat.a1) - two_pi) < 1e-12 * two_pi);
    CHECK(std::abs(rb.b2.dot(lat.a2) - two_pi) < 1e-12 * two_pi);
    CHECK(std::abs(rb.b1.dot(lat.a2)) < 1e-12 * two_pi);
    CHECK(std::abs(rb.b2.dot(lat.a1)) < 1e-12 * two_pi);
  }
}

TEST_CASE("validation") {
  Lattice2D bad{Vec2(1, 0), Vec2(2, 0), {}};
  CHECK_THROWS_AS(validate(bad), DomainError);
}

TEST_CASE("light cone membership") {
  CHECK(in_light_cone(Vec2(0, 0), q0));
  CHECK_FALSE(in_light_cone(Vec2(q0, 0), q0));
  CHECK_FALSE(in_light_cone(Vec2(5 * pi, 0), q0));
}

TEST_CASE("ribbon decomposition") {
  const double a = 0.2;
  auto sq = ribbon_decomposition(Lattice2D::square(a), {1, 1}, 10);
  CHECK(sq.a_par == doctest::Approx(a * std::sqrt(2.0)));
  CHECK(sq.r_perp(0, 1).norm() == doctest::Approx(a / std::sqrt(2.0)));
  CHECK(sq.b_par(0, 1) == doctest::Approx(sq.a_par / 2));
  CHECK(sq.b_par(1, 0) == doctest::Approx(sq.a_par / 2));

  auto ax = ribbon_decomposition(Lattice2D::square(a), {1, 0}, 10);
  CHECK(ax.a_par == doctest::Approx(a));
  CHECK((ax.r_perp(3, 1).cwiseAbs() - Vec2(0, 2 * a)).norm() < 1e-14);

  auto re = ribbon_decomposition(Lattice2D::rectangular(a, 1.1), {1, 1}, 10);
  const double b = re.b_par(0, 1);
  CHECK(std::abs(b) > 1e-6);
  CHECK(std::abs(b - re.a_par / 2) > 1e-6);
  for (int m = 0; m < 5; ++m)
    for (int n = 0; n < 5; ++n) CHECK(std::abs(re.r_perp(m, n).dot(re.d_par)) < 1e-14 * (1 + re.r_perp(m, n).norm()));

  CHECK_THROWS_AS(ribbon_decomposition(Lattice2D::square(a), {2, 2}, 10), DomainError);
}
