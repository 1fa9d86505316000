#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nhm {

using cplx = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Tensor3 = Eigen::Matrix3cd;
using Mat2c = Eigen::Matrix2cd;
using MatXc = Eigen::MatrixXcd;
using VecXc = Eigen::VectorXcd;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;
inline constexpr cplx I1{0.0, 1.0};

// Units: lambda = 1, hbar = 1, Gamma0 = 1, eps0 = 1.
inline constexpr double q0 = two_pi;

// -3*pi*Gamma0*c/omega0 in these units is -3*pi/q.
inline double coupling_prefactor(double q) { return 3.0 * pi / q; }

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Bad arguments or violated preconditions.
struct DomainError : Error {
  using Error::Error;
};
// Evaluation on or too close to a light-cone circle or a chain resonance.
struct SingularityError : Error {
  using Error::Error;
};
struct ConvergenceError : Error {
  using Error::Error;
};
// Loop sampling too coarse to track the phase.
struct NyquistError : Error {
  using Error::Error;
};

enum class Exec { serial, parallel };

inline double tol_lc(double q) { return 1e-9 * q; }

}  // namespace nhm
