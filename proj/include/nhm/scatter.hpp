#pragma once

#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "nhm/bands.hpp"
#include "nhm/core.hpp"
#include "nhm/greens.hpp"
#include "nhm/lattice.hpp"
#include "nhm/linalg.hpp"

namespace nhm {

enum class Boundary { rectangle, parallelogram };

struct DipoleScene {
  std::vector<Vec3> positions;  // z = 0
  int pol_dof = 2;              // 2: in-plane only, 3: adds z detuned by z_detuning
  double z_detuning = 30.0;
  double muB = 0.0;
  double q = q0;
  std::optional<Lattice2D> lattice;  // for diffraction-order checks
  double a = 0.0;                    // lattice constant, sets the far-field probe distance
  int Lx = 0, Ly = 0;
};

void validate(const DipoleScene& s);

// Sites m a1 + n a2 (rectangle) or m a1 + n (a1 + a2) (parallelogram), 0 <= m < Lx, 0 <= n < Ly.
DipoleScene array_scene(const Lattice2D& lat, int Lx, int Ly, Boundary shape = Boundary::rectangle);

// -(3 / 4 pi^2) lambda^3 (Gamma0 / 2) / (delta + i Gamma0 / 2), lambda = 1.
cplx bare_polarizability(double delta);

// Interaction kernel relative to omega0, size (pol_dof N)^2, index pol_dof * m + mu.
MatXc interaction_hamiltonian(const DipoleScene& s, Exec exec = Exec::parallel);

enum class DriveKind { plane_wave, gaussian_beam };

struct Drive {
  DriveKind kind = DriveKind::plane_wave;
  Vec3 k_hat{0, 0, 1};
  CVec3 pol{1, 0, 0};
  Vec3 focus = Vec3::Zero();
  double w0 = 0;
  double q = q0;
  cplx amplitude = 1.0;

  CVec3 field(const Vec3& r) const;
};

Drive plane_wave(const Vec3& k_hat, const CVec3& pol, double q = q0);
// Scalar paraxial beam with waist w0 at the focus, polarization fixed along the axis.
Drive gaussian_beam(const Vec3& k_hat, const CVec3& pol, const Vec3& focus, double w0, double q = q0);

struct SolvedDipoles {
  std::vector<CVec3> p;
  double delta = 0;
  double residual = 0;
};

// p = [alpha^-1 - q^2 G0]^-1 E_inc = -(3 / 8 pi^2) [delta - H]^-1 E_inc. Factorizations are cached per detuning.
class DipoleSolver {
 public:
  explicit DipoleSolver(DipoleScene scene, Exec exec = Exec::parallel);
  const DipoleScene& scene() const { return scene_; }
  const MatXc& hamiltonian() const { return H_; }
  SolvedDipoles solve(const Drive& drive, double delta);
  std::vector<SolvedDipoles> solve(const std::vector<Drive>& drives, double delta);

 private:
  const LuFactor& factor(double delta);
  DipoleScene scene_;
  MatXc H_;
  std::map<double, std::unique_ptr<LuFactor>> lu_;
};

// alpha^-1 I - q^2 G0 with the scene's diagonal shifts, built independently of the Hamiltonian.
MatXc inverse_polarizability_matrix(const DipoleScene& s, double delta);

struct FieldValue {
  CVec3 scattered;
  CVec3 total;
};

FieldValue field_at(const DipoleScene& s, const SolvedDipoles& d, const Drive& drive, const Vec3& r);

struct ScatterMatrix {
  Tensor3 S;          // Cartesian, maps the incident polarization to the scattered field
  Mat2c S_ps;         // (p, s) block, rows: scattered component, columns: drive
  PolarizationBasis basis;
  Vec3 probe = Vec3::Zero();
  double delta = 0;
};

struct ScatterOptions {
  double w0_over_a = 4.0;
  double z_over_a = 5.0;
};

// Scattered/incident ratio at the beam-axis point z = z_over_a * a for p and s Gaussian drives
// with in-plane momentum k_par, focused at the array centre.
ScatterMatrix farfield_scatter_matrix(DipoleSolver& solver, const Vec2& k_par, double delta,
                                      const ScatterOptions& opt = {});

// Infinite-array S' from the bulk kernel: far-field Fourier projector times the collective
// polarizability; include_z adds the z block detuned by z_detuning.
ScatterMatrix synthetic_scatter_matrix(const Lattice2D& lat, const Vec2& k_par, double delta, double q = q0,
                                       const EMOptions& em = {}, double muB = 0.0, bool include_z = false,
                                       double z_detuning = 30.0, double z_probe = 1.0);

// In-plane (x, y) image of the transverse block: U^-T S_ps U^-1 with U the in-plane parts of e_p, e_s.
Mat2c inplane_projection(const ScatterMatrix& s);

struct ExtractedKernel {
  Mat2c H;  // relative to omega0, Cartesian (x, y)
  cplx E1, E2;
  double delta1 = 0, delta2 = 0;
  Vec2 k_par = Vec2::Zero();
};

ExtractedKernel extract_heff(const ScatterMatrix& s1, const ScatterMatrix& s2, const Vec2& k_par);
ExtractedKernel extract_heff(DipoleSolver& solver, const Vec2& k_par, double delta1, double delta2,
                             const ScatterOptions& opt = {});

// Extracted kernels on a uniform incidence grid (all points inside the cone).
BandGrid extracted_grid(DipoleSolver& solver, const Window& win, int nx, int ny, double delta1, double delta2,
                        const ScatterOptions& opt = {});
Vorticity extracted_vorticity(DipoleSolver& solver, const std::vector<Vec2>& loop, double delta1, double delta2,
                              const ScatterOptions& opt = {});

struct EnergyBalance {
  double P_inc = 0;   // incident intensity times the array aperture
  double P_ext = 0;   // extinction from the dipoles
  double P_back = 0;  // scattered power into z < 0
  double P_fwd = 0;   // scattered power into z > 0
  double R = 0, T = 0;
};

// Plane-wave energy bookkeeping with Gauss-Legendre angular quadrature of the far field.
EnergyBalance energy_balance(const DipoleScene& s, const SolvedDipoles& d, const Drive& drive, int n_phi = 192);

struct FiniteModes {
  VecXc energies;  // ascending imaginary part
  MatXc states;
  std::vector<double> S_NH;      // per site
  std::vector<double> boundary;  // per mode, weight in the outer `frame` columns on both sides
  int N_prime = 0;
};

// In-plane eigenmodes of a finite array, N_prime <= 0 selects round(pi (a/lambda)^2 / eta * 2N).
FiniteModes finite_array_modes(const DipoleScene& s, int N_prime = 0, int frame = 6);

}  // namespace nhm
