#pragma once

#include "nhm/core.hpp"
#include "nhm/lattice.hpp"

namespace nhm {

// Damped real-space lattice sum, extrapolated to zero damping.
struct OracleOptions {
  double h = 0.0;      // damping step; 0 picks 0.08 q
  int n = 8;           // damping values eps_j = j h, j = 1..n
  double cutoff = 40;  // terms are dropped once eps_1 |R| exceeds this
  Exec exec = Exec::parallel;
};

// sum_{R + b != 0} e^{-ik.(R + b)} G0(R + b) e^{-eps |R + b|}, eps -> 0 by
// polynomial (Neville) extrapolation in eps.
Tensor3 realspace_green_sum(const Lattice2D& lat, const Vec2& k, double q, const Vec2& b = Vec2::Zero(),
                            const OracleOptions& opt = {});

}  // namespace nhm
