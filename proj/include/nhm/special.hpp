#pragma once

#include "nhm/core.hpp"

namespace nhm {

inline constexpr int M_max = 8;  // Bernoulli numbers up to B_16

// B_n with the B_1 = -1/2 convention, 0 <= n <= 2*M_max.
double bernoulli_number(int n);
double bernoulli_poly(int n, double x);

// H_n^(1)(x) = J_n(x) + i Y_n(x), n in {0, 1, 2}, x > 0.
cplx hankel1(int n, double x);
// K_n(x), n in {0, 1, 2}, x > 0.
double bessel_k(int n, double x);

// Li_s(e^{i theta}) for s in {1, 2, 3}.
cplx polylog_unit_circle(int s, double theta);

double zeta_int(int n);  // Riemann zeta at integer n != 1

}  // namespace nhm
