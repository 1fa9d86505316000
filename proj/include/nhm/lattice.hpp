#pragma once

#include <array>
#include <vector>

#include "nhm/core.hpp"

namespace nhm {

struct Lattice2D {
  Vec2 a1;
  Vec2 a2;
  std::vector<Vec2> offsets;  // empty for a Bravais lattice

  // |a2| / |a1|
  double eta() const { return a2.norm() / a1.norm(); }
  double cell_area() const { return std::abs(a1.x() * a2.y() - a1.y() * a2.x()); }
  Vec2 site(long m, long n) const { return double(m) * a1 + double(n) * a2; }

  static Lattice2D square(double a);
  // a1 = (a/eta, 0), a2 = (0, a)
  static Lattice2D rectangular(double a, double eta);
  static Lattice2D triangular(double a);
  static Lattice2D honeycomb(double a);
  static Lattice2D kagome(double a);
};

void validate(const Lattice2D& lat);

struct ReciprocalBasis {
  Vec2 b1;
  Vec2 b2;
  double cell_area;  // direct cell area |a1 x a2|
};

ReciprocalBasis reciprocal_basis(const Lattice2D& lat);

bool in_light_cone(const Vec2& k, double q);

// Distance of k from the nearest cone circle |G + k| = q over the reciprocal
// lattice, together with the offending G.
double cone_gap(const ReciprocalBasis& rb, const Vec2& k, double q, Vec2* nearest_G = nullptr);

struct ChainDecomposition {
  std::array<int, 2> direction{1, 0};
  Vec2 d_par;    // chain direction lattice vector
  Vec2 s_stack;  // stacking lattice vector, s_stack . e_perp > 0
  Vec2 e_par;
  Vec2 e_perp;   // e_z x e_par
  double a_par = 0;
  double perp_spacing = 0;  // s_stack . e_perp
  double par_step = 0;      // s_stack . e_par
  int L = 0;

  // Parallel offset of chain m relative to chain n, wrapped into [0, a_par).
  double b_par(int m, int n) const;
  // Perpendicular separation vector r_m - r_n.
  Vec2 r_perp(int m, int n) const;
  double r_perp_signed(int m, int n) const { return double(m - n) * perp_spacing; }
};

ChainDecomposition ribbon_decomposition(const Lattice2D& lat, std::array<int, 2> direction, int L);

}  // namespace nhm
