#pragma once

#include <algorithm>
#include <random>

#include "nhm/core.hpp"

namespace nhm::test {

template <class A, class B>
double rel_err(const A& a, const B& b) {
  return (a - b).norm() / std::max(1e-300, b.norm());
}

inline double rel_err(cplx a, cplx b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

// Random momentum at least `gap` away from the cone circle |k| = q, |k| < kmax.
inline Vec2 random_k(std::mt19937_64& rng, double q, double kmax, double gap) {
  std::uniform_real_distribution<double> u(-kmax, kmax);
  for (;;) {
    Vec2 k(u(rng), u(rng));
    if (k.norm() < kmax && std::abs(k.norm() - q) > gap) return k;
  }
}

}  // namespace nhm::test
