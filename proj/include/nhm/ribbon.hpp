#pragma once

#include <array>
#include <vector>

#include "nhm/core.hpp"
#include "nhm/emsum.hpp"
#include "nhm/lattice.hpp"

namespace nhm {

// In-plane coupling between two parallel chains (a_par spacing, direction e_par),
// in the (e_par, e_perp) frame. r_perp = 0 with b_par = 0 gives the chain self sum.
Mat2c chain_coupling(double k_par, double b_par, double r_perp, double q, double a_par, const Vec2& e_par);

struct RibbonModel {
  ChainDecomposition chains;
  double k_par = 0;
  double q = q0;
  // T[j + L - 1] = H_{m, m+j}, j = -(L-1)..(L-1)
  std::vector<Mat2c> T;
  // 2L x 2L, index 2m + mu with mu = 0 (parallel), 1 (perpendicular)
  MatXc H;
  const Mat2c& block(int j) const { return T[std::size_t(j + chains.L - 1)]; }
};

RibbonModel assemble_ribbon(const Lattice2D& lat, std::array<int, 2> direction, int L, double k_par, double q = q0,
                            Exec exec = Exec::parallel);

// Fraction of the k_perp circle at fixed k_par lying inside some light cone.
double cone_fraction(const Lattice2D& lat, const ChainDecomposition& cd, double k_par, double q, int samples = 20000);

struct ObcResult {
  VecXc energies;  // ascending imaginary part
  MatXc states;    // unit-norm right eigenvectors, same order
  std::vector<double> S_NH;
  int N_prime = 0;
};

// N_prime <= 0 selects round(2L x cone fraction).
ObcResult obc_spectrum(const RibbonModel& model, const Lattice2D& lat, int N_prime = 0);

// |psi(r_perp)|^2 summed over polarizations.
std::vector<double> chain_profile(const VecXc& state);

// Mass in the first and last `frac` of the sites.
double edge_mass(const std::vector<double>& S, double frac, bool first);

struct SliceSample {
  double k_perp;
  cplx E1, E2;
  bool near_cone;
};

// Bulk bands along k = k_par e_par + k_perp e_perp.
std::vector<SliceSample> bulk_slice_spectrum(const Lattice2D& lat, const ChainDecomposition& cd, double k_par, double q,
                                             const std::vector<double>& k_perp, const EMOptions& em = {});

// Cone crossings of the slice, k_perp in [0, 2 pi / perp_spacing).
std::vector<double> slice_cone_crossings(const Lattice2D& lat, const ChainDecomposition& cd, double k_par, double q);

struct WindingResult {
  int W = 0;
  double raw = 0;
  double snap_error = 0;
  std::vector<double> crossings;
  std::vector<double> jumps;  // arg det change across each cone window
  double jump_sum = 0;
  double max_step = 0;        // largest regular phase step
};

WindingResult winding_number(const Lattice2D& lat, const ChainDecomposition& cd, double k_par, double q, cplx E_r,
                             int n_samples = 2000, const EMOptions& em = {}, double eps_frac = 1e-3);

struct BetaSolutionSet {
  VecXc roots;                             // ascending modulus
  std::vector<Eigen::Vector2cd> A;         // null vectors of H(beta) - E
  cplx E;
  int infinite = 0;                        // deflated roots at beta = infinity
};

// H(beta) = sum_j T_j beta^j.
Mat2c bloch_beta(const RibbonModel& model, cplx beta);

BetaSolutionSet characteristic_roots(const RibbonModel& model, cplx E);

struct Reconstruction {
  VecXc coefficients;             // in the column-scaled basis
  std::vector<double> weights;    // norm of each term over the ribbon
  double residual = 0;            // relative, full window including the vanishing rows
  double boundary_residual = 0;   // norm of the fit on the vanishing rows, relative
  double partial_residual = 0;    // only |beta| < 1 terms kept, relative, on the ribbon
  double condition = 0;
};

Reconstruction reconstruct_eigenstate(const BetaSolutionSet& roots, const VecXc& state, int L);

struct LengthFit {
  bool delocalized = true;
  double xi = 0;        // |psi|^2 ~ exp(-r / xi), chain units
  double xi_over_L = 0;
  int start = 0, end = 0;
  double r2 = 0;
};

LengthFit fit_characteristic_length(const std::vector<double>& profile, double r2_min = 0.98);

}  // namespace nhm
