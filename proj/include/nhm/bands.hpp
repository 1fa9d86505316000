#pragma once

#include <optional>
#include <vector>

#include "nhm/core.hpp"
#include "nhm/emsum.hpp"
#include "nhm/lattice.hpp"

namespace nhm {

// 3x3 Bloch kernel of a Bravais lattice, units of Gamma0 relative to omega0.
Tensor3 heff_bravais(const Lattice2D& lat, const Vec2& k, double q, const EMOptions& em = {},
                     bool* near_divergence = nullptr);

// Columns are |+> = -(x + iy)/sqrt2 and |-> = (x - iy)/sqrt2.
Mat2c circular_basis();
Mat2c to_circular(const Mat2c& h_xy);

// In-plane kernel in the circular basis; muB adds +-muB on the diagonal.
Mat2c heff_circular(const Lattice2D& lat, const Vec2& k, double q, const EMOptions& em = {}, double muB = 0.0);

inline cplx kappa_pm(const Mat2c& h) { return h(0, 1); }
inline cplx kappa_mp(const Mat2c& h) { return h(1, 0); }

// 3n x 3n kernel for a lattice with n sublattice offsets; block (i, j) couples
// sublattice j into i.
MatXc heff_nonbravais(const Lattice2D& lat, const Vec2& k, double q, const EMOptions& em = {});

struct BandPoint {
  Vec2 k = Vec2::Zero();
  cplx E1, E2;
  Mat2c V;  // normalized right eigenvectors
  cplx detV;
  double Delta(int i) const { return (i == 1 ? E1 : E2).real(); }
  double Gamma(int i) const { return -2.0 * (i == 1 ? E1 : E2).imag(); }
};

// (H00 - H11)^2 + 4 H01 H10 = (E1 - E2)^2
inline cplx discriminant(const Mat2c& h) { return (h(0, 0) - h(1, 1)) * (h(0, 0) - h(1, 1)) + 4.0 * h(0, 1) * h(1, 0); }

// E1,2 = tr/2 +- sqrt(disc)/2 with the principal root.
BandPoint diagonalize2(const Mat2c& h);

enum class DegeneracyKind { NDP, EP };

struct DegeneracyRecord {
  Vec2 location = Vec2::Zero();
  DegeneracyKind kind = DegeneracyKind::EP;
  double vorticity = 0;
  double snap_error = 0;
  double res_pm = 0;  // |kappa_{+-}|
  double res_mp = 0;  // |kappa_{-+}|
};

struct Window {
  double x0, x1, y0, y1;
};

struct DegeneracyOptions {
  int grid = 201;
  double tol_deg = 1e-6;
  double muB = 0.0;
  std::optional<Window> window;  // default: light-cone bounding box
};

struct DegeneracyReport {
  std::vector<DegeneracyRecord> found;
  std::vector<Vec2> unresolved;  // Newton failures
};

DegeneracyReport find_degeneracies(const Lattice2D& lat, double q, const EMOptions& em = {},
                                   const DegeneracyOptions& opt = {});

struct Vorticity {
  double value = 0;  // snapped to a half-integer
  double raw = 0;
  double snap_error = 0;
};

// -(1/2pi) x total change of arg(E1 - E2) along the closed loop (last point joins the first).
Vorticity vorticity(const std::vector<Vec2>& loop, const Lattice2D& lat, double q, const EMOptions& em = {},
                    double muB = 0.0);
// Same, from kernels sampled along the loop.
Vorticity vorticity_from_kernels(const std::vector<Mat2c>& kernels);

std::vector<Vec2> circle_loop(const Vec2& centre, double radius, int n, bool ccw = true);

// Uniform grid with per-node kernels; nodes too close to a cone circle are invalid.
struct BandGrid {
  Window win{};
  int nx = 0, ny = 0;
  std::vector<Mat2c> h;
  std::vector<char> valid;
  double dx() const { return (win.x1 - win.x0) / (nx - 1); }
  double dy() const { return (win.y1 - win.y0) / (ny - 1); }
  Vec2 node(int i, int j) const { return {win.x0 + i * dx(), win.y0 + j * dy()}; }
  int idx(int i, int j) const { return j * nx + i; }
};

BandGrid sample_grid(const Lattice2D& lat, double q, const EMOptions& em, const Window& win, int n, double muB = 0.0,
                     Exec exec = Exec::parallel);
Window cone_box(double q);

struct ArcSegment {
  Vec2 p0, p1;
};

struct FermiArcs {
  std::vector<ArcSegment> real_arcs;  // Re(E1 - E2) = 0
  std::vector<ArcSegment> imag_arcs;  // Im(E1 - E2) = 0
};

FermiArcs fermi_arcs(const BandGrid& grid);
FermiArcs fermi_arcs(const Lattice2D& lat, double q, const EMOptions& em = {}, int n = 201);

// Endpoints of the polylines formed by a segment soup.
std::vector<Vec2> arc_endpoints(const std::vector<ArcSegment>& segs, double tol);

// arg(E1 - E2), sign of the root propagated continuously from the node nearest Gamma.
// Invalid nodes hold NaN.
std::vector<double> spectral_phase_map(const BandGrid& grid);

}  // namespace nhm
