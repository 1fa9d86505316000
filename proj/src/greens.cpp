#include "nhm/greens.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nhm/special.hpp"

namespace nhm {

Tensor3 green_real(const Vec3& r, double q) {
  const double d = r.norm();
  if (!(d > 0)) throw SingularityError("green_real: self-interaction at r = 0 is divergent");
  const Vec3 n = r / d;
  const double qr = q * d;
  const cplx pre = std::exp(I1 * qr) / (4.0 * pi * d);
  const cplx a = 1.0 + (I1 * qr - 1.0) / (qr * qr);
  const cplx b = -1.0 + (3.0 - 3.0 * I1 * qr) / (qr * qr);
  Tensor3 G = a * Tensor3::Identity();
  G += b * (n * n.transpose()).cast<cplx>();
  return pre * G;
}

Tensor3 green_recip_2d(const Vec2& k, double q) {
  const double k2 = k.squaredNorm();
  const double w = q * q - k2;
  if (std::abs(std::sqrt(k2) - q) < tol_lc(q)) throw SingularityError("green_recip_2d: momentum on the light cone");
  const cplx h = w > 0 ? cplx(0.0, 0.5 / std::sqrt(w)) : cplx(0.5 / std::sqrt(-w), 0.0);
  const double iq2 = 1.0 / (q * q);
  Tensor3 T = Tensor3::Zero();
  T(0, 0) = 1.0 - k.x() * k.x() * iq2;
  T(1, 1) = 1.0 - k.y() * k.y() * iq2;
  T(0, 1) = T(1, 0) = -k.x() * k.y() * iq2;
  T(2, 2) = k2 * iq2;
  return h * T;
}

Eigen::Matrix3d frame_rotation(const Vec2& e_par) {
  Eigen::Matrix3d R = Eigen::Matrix3d::Zero();
  R(0, 0) = e_par.x();
  R(1, 0) = e_par.y();
  R(0, 1) = -e_par.y();
  R(1, 1) = e_par.x();
  R(2, 2) = 1.0;
  return R;
}

Tensor3 green_recip_1d(double k, double y, double q, const Vec2& e_par) {
  const double rho = std::abs(y);
  if (!(rho > 0)) throw DomainError("green_recip_1d: r_perp = 0, use chain_self_sum");
  if (std::abs(std::abs(k) - q) < tol_lc(q)) throw SingularityError("green_recip_1d: k_par on the light cone");
  const double sgn = y > 0 ? 1.0 : -1.0;
  const double iq2 = 1.0 / (q * q);
  // phi(rho) = 2D scalar Green's function (i/4) H0(kappa rho) or K0(gamma rho)/(2 pi);
  // g = phi I + (1/q^2)[ -k^2 phi e_par e_par + i k phi' sgn (e_par e_perp + e_perp e_par)
  //                      + phi'' e_perp e_perp + (phi'/rho) e_z e_z ]
  cplx phi, dphi, d2phi;
  if (k * k < q * q) {
    const double kap = std::sqrt(q * q - k * k);
    const double x = kap * rho;
    const cplx H0 = hankel1(0, x), H1 = hankel1(1, x), H2 = hankel1(2, x);
    phi = 0.25 * I1 * H0;
    dphi = -0.25 * I1 * kap * H1;
    d2phi = -0.125 * I1 * kap * kap * (H0 - H2);
  } else {
    const double gam = std::sqrt(k * k - q * q);
    const double x = gam * rho;
    const double K0 = bessel_k(0, x), K1 = bessel_k(1, x), K2 = bessel_k(2, x);
    phi = K0 / two_pi;
    dphi = -gam * K1 / two_pi;
    d2phi = gam * gam * 0.5 * (K0 + K2) / two_pi;
  }
  Tensor3 F = Tensor3::Zero();
  F(0, 0) = phi - k * k * iq2 * phi;
  F(1, 1) = phi + iq2 * d2phi;
  F(2, 2) = phi + iq2 * dphi / rho;
  F(0, 1) = F(1, 0) = I1 * k * sgn * iq2 * dphi;
  const Eigen::Matrix3d R = frame_rotation(e_par);
  return R.cast<cplx>() * F * R.transpose().cast<cplx>();
}

PolarizationBasis polarization_basis(double theta, double phi) {
  PolarizationBasis pb;
  pb.k_hat = Vec3(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
  pb.e_s = Vec3(-std::sin(phi), std::cos(phi), 0.0);
  pb.e_p = pb.e_s.cross(pb.k_hat);
  return pb;
}

PolarizationBasis polarization_basis(const Vec3& k) {
  const double kn = k.norm();
  if (!(kn > 0)) throw DomainError("polarization_basis: zero wave vector");
  const double theta = std::acos(std::clamp(k.z() / kn, -1.0, 1.0));
  const double kp = std::hypot(k.x(), k.y());
  const double phi = kp > 1e-14 * kn ? std::atan2(k.y(), k.x()) : 0.0;
  return polarization_basis(theta, phi);
}

Tensor3 green_farfield_fourier(const Vec3& k, const Vec3& r, const ReciprocalBasis& rb, double q) {
  const Vec2 kp(k.x(), k.y());
  if (std::abs(k.norm() - q) > 1e-9 * q) throw DomainError("green_farfield_fourier: k must lie on shell |k| = q");
  if (r.z() == 0.0) throw DomainError("green_farfield_fourier: evaluation point must have z != 0");
  // check for additional propagating diffraction orders
  std::ostringstream bad;
  int nbad = 0;
  const double bmin = std::min(rb.b1.norm(), rb.b2.norm());
  const int span = int(std::ceil(2.0 * q / bmin)) + 1;
  for (int m = -span; m <= span; ++m)
    for (int n = -span; n <= span; ++n) {
      if (m == 0 && n == 0) continue;
      const Vec2 G = m * rb.b1 + n * rb.b2;
      if ((G + kp).norm() < q) {
        bad << " (" << G.x() << "," << G.y() << ")";
        ++nbad;
      }
    }
  if (nbad) throw DomainError("green_farfield_fourier: multiple diffraction orders, G =" + bad.str());
  const double kz2 = q * q - kp.squaredNorm();
  if (!(kz2 > 0)) throw SingularityError("green_farfield_fourier: grazing incidence");
  const double kz = std::sqrt(kz2);
  const Vec3 kout(kp.x(), kp.y(), r.z() > 0 ? kz : -kz);
  const PolarizationBasis pb = polarization_basis(kout);
  const Eigen::Matrix3d P = pb.e_p * pb.e_p.transpose() + pb.e_s * pb.e_s.transpose();
  const cplx pre = I1 * q * q * std::exp(I1 * (kp.dot(Vec2(r.x(), r.y())) + kz * std::abs(r.z()))) /
                   (2.0 * rb.cell_area * kz);
  return pre * P.cast<cplx>();
}

Tensor3 chain_self_sum(double k, double a, double q, const Vec2& dir) {
  if (!(a > 0)) throw DomainError("chain_self_sum: a_par must be positive");
  const double tm = (q - k) * a, tp = (q + k) * a;
  auto resonant = [](double t) { return std::abs(std::remainder(t, two_pi)) < 1e-12; };
  if (resonant(tm) || resonant(tp)) throw SingularityError("chain_self_sum: chain resonance (q +- k) a = 0 mod 2 pi");
  cplx F[4];
  for (int p = 1; p <= 3; ++p) F[p] = std::pow(a, -p) * (polylog_unit_circle(p, tm) + polylog_unit_circle(p, tp));
  const cplx cI = (F[1] + I1 * F[2] / q - F[3] / (q * q)) / (4.0 * pi);
  const cplx cE = (-F[1] - 3.0 * I1 * F[2] / q + 3.0 * F[3] / (q * q)) / (4.0 * pi);
  const Vec2 e = dir.normalized();
  const Vec3 e3(e.x(), e.y(), 0.0);
  Tensor3 S = cI * Tensor3::Identity();
  S += cE * (e3 * e3.transpose()).cast<cplx>();
  return S;
}

}  // namespace nhm
