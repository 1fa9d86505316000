#pragma once

#include <functional>
#include <vector>

#include "nhm/core.hpp"
#include "nhm/jet.hpp"
#include "nhm/lattice.hpp"

namespace nhm {

enum class TilingKind { rectangular, triangular };

// automatic: finite differences for M = 2, Taylor jets above.
enum class DerivativeMode { automatic, finite_difference, analytic };

// User-level knobs of the summation engine.
struct EMOptions {
  int M = 2;
  double R_inner = 8.0;
  DerivativeMode derivatives = DerivativeMode::automatic;
};

struct TilingSpec {
  TilingKind kind = TilingKind::rectangular;
  Vec2 b1{two_pi, 0.0};
  Vec2 b2{0.0, two_pi};
  int M = 2;
  double R_inner = 8.0;  // inner side, in units of `unit`
  double unit = two_pi;  // 2 pi / a
  DerivativeMode derivatives = DerivativeMode::automatic;
  // The inner boundary must enclose a disk of this radius around -k_offset
  // (the light cone); 0 disables the check.
  double exclusion_radius = 0.0;

  int order_K() const { return 2 * M - 2; }
  double cell_area() const { return std::abs(b1.x() * b2.y() - b1.y() * b2.x()); }
  bool use_jets() const;
};

void validate(const TilingSpec& spec);

// Tiling spec for the reciprocal lattice of lat (triangular if |b1| = |b2| at 60/120 degrees).
TilingSpec make_tiling(const ReciprocalBasis& rb, double unit, int M = 2, double R_inner = 8.0,
                       DerivativeMode mode = DerivativeMode::automatic);
TilingSpec make_tiling(const Lattice2D& lat, int M = 2, double R_inner = 8.0,
                       DerivativeMode mode = DerivativeMode::automatic);

struct SmoothField {
  int ncomp = 1;
  std::function<void(const Vec2&, cplx*)> value;
  // Optional: all partials d^{i+j}/dx^i dy^j up to total order K,
  // out[c * tri_size(K) + tri_index(i, j)].
  std::function<void(const Vec2&, int, cplx*)> partials;
};

// Partial-derivative table of f at p up to order spec.order_K().
std::vector<cplx> derivative_table(const SmoothField& f, const Vec2& p, const TilingSpec& spec);

enum class RectVertex { interior, edge_x, edge_y, corner };
enum class TriVertex { interior, edge, corner };

// Share of the integral carried by a tiling vertex. sx, sy give the side of the
// occupied cells (edge_x uses sx, edge_y uses sy, corner both).
std::vector<cplx> corrections_rect_vertex(const SmoothField& f, RectVertex cls, const Vec2& point,
                                          const TilingSpec& spec, int sx = -1, int sy = -1);
// bisector_deg: direction bisecting the occupied sector; snapped to the tiling.
std::vector<cplx> corrections_tri_vertex(const SmoothField& f, TriVertex cls, const Vec2& point,
                                         const TilingSpec& spec, double bisector_deg = 90.0);

// Linear functional on the derivative table at one boundary point.
struct Stencil {
  Vec2 point;
  std::vector<double> w;
};

struct HollowGeometry {
  std::vector<Vec2> inner;     // lattice points strictly inside the inner boundary
  std::vector<Stencil> boundary;
  std::vector<Vec2> polygon;   // inner boundary, counter-clockwise
  double cell_area = 0;
  int K = 0;
};

HollowGeometry hollow_geometry(const TilingSpec& spec);

// sum_{G in T} f(G + k_offset) - int_T f / cell, from the inner-boundary corrections.
std::vector<cplx> hollow_sum(const SmoothField& f, const TilingSpec& spec, const Vec2& k_offset,
                             Exec exec = Exec::serial);

struct GreenSum {
  Tensor3 value = Tensor3::Zero();
  bool near_divergence = false;
  double min_cone_gap = 0;  // min |G + k| - q over checked G, relative to q
};

// Reciprocal-space Green tensor components packed as (xx, xy, yy, zz).
SmoothField green_field(double q, double scale = 1.0);

// \int over polygon (counter-clockwise, enclosing the cone) of green_recip_2d.
Tensor3 green_polygon_integral(const std::vector<Vec2>& polygon, double q);

// sum_{R != 0} e^{-ik.R} G0(R)
GreenSum periodic_green_sum(const Lattice2D& lat, const Vec2& k, double q, const TilingSpec& spec);
GreenSum periodic_green_sum(const Lattice2D& lat, const Vec2& k, double q, const EMOptions& em = {});

struct LambShift {
  double Delta = 0;
  double Gamma = 0;
  bool near_divergence = false;
  bool singular = false;
};

// Square lattice, k = 0, in-plane polarization, units of Gamma0.
LambShift lamb_shift_normal(double a_over_lambda, double R_inner = 8.0, int M = 2,
                            DerivativeMode mode = DerivativeMode::automatic);

struct PhaseClass {
  Vec2 rep;     // coset representative G_c
  cplx weight;  // e^{i G_c . b}
};

struct PhaseClasses {
  ReciprocalBasis sub;  // basis of {G : G.b in 2 pi Z} (b1, b2 fields)
  std::vector<PhaseClass> classes;
};

PhaseClasses phase_classes(const ReciprocalBasis& rb, const Vec2& b);

// sum_R e^{-ik.(R + b)} G0(R + b), b = offsets[i] - offsets[j].
GreenSum offdiag_sublattice_sum(const Lattice2D& lat, int i, int j, const Vec2& k, double q, const EMOptions& em = {});

}  // namespace nhm
