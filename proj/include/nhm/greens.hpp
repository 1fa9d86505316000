#pragma once

#include "nhm/core.hpp"
#include "nhm/lattice.hpp"

namespace nhm {

// Free-space dyadic Green's function at separation r != 0.
Tensor3 green_real(const Vec3& r, double q);

// 2D Fourier transform over the plane z = 0:
// G(r) = \int d^2k/(2pi)^2 e^{ik.r} g(k).
Tensor3 green_recip_2d(const Vec2& k, double q);

// 1D Fourier transform along e_par at fixed in-plane perpendicular offset
// r_perp = y * e_perp (y signed, nonzero): G(x e_par + r_perp) = \int dk/(2pi) e^{ikx} g(k, r_perp).
Tensor3 green_recip_1d(double k_par, double y_perp, double q, const Vec2& e_par);

struct PolarizationBasis {
  Vec3 k_hat;
  Vec3 e_p;
  Vec3 e_s;
};

// Propagation direction (sin t cos f, sin t sin f, cos t); e_s = (-sin f, cos f, 0), e_p = e_s x k_hat.
PolarizationBasis polarization_basis(double theta, double phi);
PolarizationBasis polarization_basis(const Vec3& k);

// Transverse projector of the single-order far field of a periodic dipole
// sheet with in-plane momentum k_par, evaluated at r (z != 0), including the
// scalar prefactor i q^2 e^{i k_par.r} e^{i kz |z|} / (2 A kz).
// Throws if any G != 0 of rb satisfies |G + k_par| < q.
Tensor3 green_farfield_fourier(const Vec3& k, const Vec3& r, const ReciprocalBasis& rb, double q);

// sum_{n != 0} e^{-i k n a} G(n a e) for a straight chain.
Tensor3 chain_self_sum(double k_par, double a_par, double q, const Vec2& chain_dir);

// Rotation taking (e_par, e_perp, e_z) frame components to Cartesian ones.
Eigen::Matrix3d frame_rotation(const Vec2& e_par);

}  // namespace nhm
