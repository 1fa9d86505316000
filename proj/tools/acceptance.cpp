// Acceptance run: one PASS/FAIL line per criterion. Exit 0 unless a failure falls outside the known list.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nhm/bands.hpp"
#include "nhm/emsum.hpp"
#include "nhm/oracle.hpp"
#include "nhm/ribbon.hpp"
#include "nhm/scatter.hpp"

using namespace nhm;

namespace {

// Failures measured and recorded at the pinned settings.
const std::set<std::string> known_failures = {"1.convergence", "6.collapse", "8.extraction"};

struct Outcome {
  std::vector<std::string> failed;  // "<criterion>.<part>"
  std::ostringstream detail;

  void part(const std::string& id, const std::string& name, bool ok, const std::string& text) {
    if (!ok) failed.push_back(id + "." + name);
    if (detail.tellp() > 0) detail << "; ";
    detail << name << " " << text << (ok ? "" : " [fail]");
  }
};

std::string fmt(const char* f, double a, double b = 0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const Lattice2D sq = Lattice2D::square(0.2);
const Lattice2D rect = Lattice2D::rectangular(0.2, 1.1);
const double kp01 = 0.1 * pi / 0.2;

DegeneracyOptions census(int grid) {
  DegeneracyOptions o;
  o.grid = grid;
  return o;
}

void criterion1(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0, at = 0;
  int used = 0;
  for (int i = 0; i < 100; ++i) {
    const double a = 0.1 + 0.85 * i / 99.0;
    const LambShift r4 = lamb_shift_normal(a, 4.0, 2), r8 = lamb_shift_normal(a, 8.0, 2);
    if (r4.near_divergence || r8.near_divergence || r4.singular || r8.singular) continue;
    ++used;
    const double d = std::max(std::abs(r4.Delta - r8.Delta), std::abs(r4.Gamma - r8.Gamma));
    if (d > worst) worst = d, at = a;
  }
  const double t = seconds_since(t0);
  o.part("1", "convergence", worst < 1e-3, fmt("max|d(R4,R8)| %.3e at a/lambda %.3f", worst, at) + fmt(" over %.0f points", used));
  const LambShift one = lamb_shift_normal(1.0, 8.0, 2);
  o.part("1", "flag", one.near_divergence || one.singular, one.singular ? "a/lambda=1 singular" : "a/lambda=1 near divergence");
  o.part("1", "runtime", t < 60, fmt("%.2f s", t));
}

void criterion2(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-pi / 0.2, pi / 0.2);
  OracleOptions opt;
  opt.h = 0.15;
  opt.n = 14;
  double worst = 0, worst_m4 = 0;
  for (int n = 0; n < 10;) {
    const Vec2 k(u(rng), u(rng));
    if (std::abs(k.norm() - q0) < 0.3 * q0) continue;
    ++n;
    const Tensor3 ref = realspace_green_sum(sq, k, q0, Vec2::Zero(), opt);
    const Tensor3 em6 = periodic_green_sum(sq, k, q0, EMOptions{6, 8.0}).value;
    const Tensor3 em4 = periodic_green_sum(sq, k, q0, EMOptions{4, 8.0}).value;
    worst = std::max(worst, (em6 - ref).norm() / ref.norm());
    worst_m4 = std::max(worst_m4, (em4 - ref).norm() / ref.norm());
  }
  const double t = seconds_since(t0);
  o.part("2", "oracle", worst < 1e-4, fmt("max rel %.3e at M=6 (M=4: %.3e)", worst, worst_m4));
  o.part("2", "runtime", t < 300, fmt("%.1f s", t));
}

void criterion3(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const DegeneracyReport s = find_degeneracies(sq, q0, {}, census(201));
  const bool ndp = s.found.size() == 1 && s.found[0].kind == DegeneracyKind::NDP &&
                   s.found[0].location.norm() < 1e-6 * q0 && std::abs(s.found[0].vorticity) < 1e-2;
  o.part("3", "square", ndp, fmt("%.0f degeneracies, |v| %.2e", double(s.found.size()),
                                  s.found.empty() ? 0.0 : std::abs(s.found[0].vorticity)));

  const DegeneracyReport r = find_degeneracies(rect, q0, {}, census(201));
  int eps = 0;
  double verr = 0;
  for (const auto& d : r.found) {
    eps += d.kind == DegeneracyKind::EP && d.location.norm() < q0;
    verr = std::max(verr, std::abs(std::abs(d.vorticity) - 0.5));
  }
  o.part("3", "rectangular", eps == 4 && r.found.size() == 4 && verr < 1e-2,
         fmt("%.0f EPs inside the cone, max||v|-1/2| %.2e", eps, verr));

  // every real-arc end is an EP or lies on the cone circle
  const BandGrid g = sample_grid(rect, q0, {}, cone_box(q0), 201);
  const double cell = g.dx();
  const auto ends = arc_endpoints(fermi_arcs(g).real_arcs, 1e-9 * q0);
  int at_cone = 0, stray = 0;
  double worst = 0;
  for (const Vec2& p : ends) {
    bool at_ep = false;
    for (const auto& d : r.found) at_ep = at_ep || (p - d.location).norm() < 2 * cell;
    if (at_ep) continue;
    const double gap = std::abs(p.norm() - q0);
    worst = std::max(worst, gap / cell);
    gap < 2 * cell ? ++at_cone : ++stray;
  }
  o.part("3", "arcs", at_cone > 0 && stray == 0,
         fmt("%.0f cone ends, %.0f stray", at_cone, stray) + fmt(", worst %.2f cells", worst));
  const double t = seconds_since(t0);
  o.part("3", "runtime", t < 600, fmt("%.1f s", t));
}

void criterion4(Outcome& o) {
  const ChainDecomposition cd = ribbon_decomposition(rect, {1, 1}, 2);
  const WindingResult in = winding_number(rect, cd, kp01, q0, cplx(-0.2, -3.2));
  const WindingResult out = winding_number(rect, cd, kp01, q0, cplx(3.0, -3.2));
  o.part("4", "W", in.W == 1 && out.W == 0, fmt("(-0.2-3.2i) = %.0f, (3-3.2i) = %.0f", in.W, out.W));
  const double snap = std::max(in.snap_error, out.snap_error);
  o.part("4", "snap", snap < 1e-2 && in.crossings.size() == 2,
         fmt("%.2e with %.0f cone jumps", snap, double(in.jumps.size())));
}

double edge_ratio(const ObcResult& r) { return edge_mass(r.S_NH, 0.1, true) / edge_mass(r.S_NH, 0.1, false); }

double spread(const ObcResult& r) {
  const auto [lo, hi] = std::minmax_element(r.S_NH.begin(), r.S_NH.end());
  return *hi / *lo;
}

void criterion5(Outcome& o) {
  const int L = 80;
  double tmax = 0;
  auto timed = [&](const Lattice2D& lat, double k) {
    const auto t0 = std::chrono::steady_clock::now();
    ObcResult r = obc_spectrum(assemble_ribbon(lat, {1, 1}, L, k), lat);
    tmax = std::max(tmax, seconds_since(t0));
    return r;
  };
  const double rp = edge_ratio(timed(rect, kp01)), rn = edge_ratio(timed(rect, -kp01));
  o.part("5", "skin", std::max(rp, rn) > 5 && std::min(rp, rn) < 0.2 && (rp > 1) != (rn > 1),
         fmt("edge ratio %.3g at +k, %.3g at -k", rp, rn));
  const double s1 = spread(timed(sq, kp01)), s2 = spread(timed(rect, 0.0));
  o.part("5", "delocalized", s1 < 3 && s2 < 3, fmt("max/min square %.3f, k=0 %.3f", s1, s2));
  o.part("5", "runtime", tmax < 300, fmt("%.2f s per case", tmax));
}

void criterion6(Outcome& o) {
  auto obc = [](int L) { return obc_spectrum(assemble_ribbon(rect, {1, 1}, L, kp01), rect); };
  const ObcResult a = obc(80), b = obc(160);
  double peak = 0, worst = 0;
  for (int m = 0; m < 80; ++m) {
    peak = std::max(peak, 80 * a.S_NH[std::size_t(m)]);
    worst = std::max(worst, std::abs(80 * a.S_NH[std::size_t(m)] - 160 * b.S_NH[std::size_t(2 * m)]));
  }
  o.part("6", "collapse", worst < 0.1 * peak, fmt("sup %.3f of the maximum (tol 0.1)", worst / peak));

  auto xi_over_L = [](const ObcResult& r, int L) {
    const Eigen::Index n = std::lround(0.2 * L) - 1;
    return fit_characteristic_length(chain_profile(r.states.col(n))).xi_over_L;
  };
  const double x160 = xi_over_L(b, 160), x240 = xi_over_L(obc(240), 240);
  const double d = std::abs(x240 / x160 - 1.0);
  o.part("6", "plateau", x160 > 0 && d < 0.2, fmt("xi/L %.4f at 160, %.4f at 240", x160, x240) + fmt(" (%.1f%%)", 100 * d));
}

int unpaired(const BetaSolutionSet& s, double tol) {
  int n = 0;
  for (Eigen::Index i = 0; i < s.roots.size(); ++i) {
    const cplx inv = 1.0 / s.roots[i];
    if ((s.roots.array() - inv).abs().minCoeff() > tol * std::abs(inv)) ++n;
  }
  return n;
}

void criterion7(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const int L = 160;
  const Eigen::Index n = std::lround(0.2 * L) - 1;
  const RibbonModel m = assemble_ribbon(rect, {1, 1}, L, kp01);
  const ObcResult r = obc_spectrum(m, rect);
  const BetaSolutionSet s = characteristic_roots(m, r.energies[n]);
  const long count = long(s.roots.size()) + s.infinite;
  o.part("7", "count", count == 4 * (L - 1), fmt("%.0f roots (%.0f at infinity)", double(count), s.infinite));

  const RibbonModel ms = assemble_ribbon(sq, {1, 1}, L, kp01);
  const BetaSolutionSet ss = characteristic_roots(ms, obc_spectrum(ms, sq).energies[n]);
  const int us = unpaired(ss, 1e-6), ur = unpaired(s, 1e-3);
  o.part("7", "pairing", us == 0 && ur > 0,
         fmt("square unpaired %.0f at 1e-6, rectangular unpaired %.0f at 1e-3", us, ur));

  const Reconstruction rc = reconstruct_eigenstate(s, r.states.col(n), L);
  o.part("7", "reconstruction", rc.residual < 1e-6 && rc.partial_residual > 0.5,
         fmt("residual %.2e, |beta|<1 only %.3f", rc.residual, rc.partial_residual));
  const double t = seconds_since(t0);
  o.part("7", "runtime", t < 600, fmt("%.1f s", t));
}

std::pair<cplx, cplx> match(cplx e1, cplx e2, cplx b1, cplx b2) {
  if (std::abs(e1 - b1) + std::abs(e2 - b2) <= std::abs(e1 - b2) + std::abs(e2 - b1)) return {e1, e2};
  return {e2, e1};
}

void criterion8(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  DipoleSolver solver(array_scene(sq, 32, 32));
  const DipoleScene& s = solver.scene();
  Vec3 c = Vec3::Zero();
  for (const auto& p : s.positions) c += p;
  c /= double(s.positions.size());

  // cooperative resonance: the collective Lamb shift at normal incidence
  const double delta_c = diagonalize2(heff_circular(sq, Vec2::Zero(), q0, EMOptions{4, 8.0})).E1.real();
  const ScatterOptions opt;
  const Drive beam = gaussian_beam(Vec3(0, 0, 1), CVec3(1, 0, 0), c, opt.w0_over_a * 0.2);
  const Vec3 probe = c + Vec3(0, 0, opt.z_over_a * 0.2);
  const double T = field_at(s, solver.solve(beam, delta_c), beam, probe).total.squaredNorm() / beam.field(probe).squaredNorm();
  o.part("8", "transmission", T < 0.05, fmt("%.4f at delta %.4f", T, delta_c));

  double worst = 0;
  for (const Vec2& k : {Vec2(kp01, 0), Vec2(0, kp01), Vec2(-kp01, 0), Vec2(0, -kp01)}) {
    const ExtractedKernel ex = extract_heff(solver, k, 0.5, -0.5, opt);
    const BandPoint b = diagonalize2(heff_circular(sq, k, q0, EMOptions{4, 8.0}));
    const auto [e1, e2] = match(ex.E1, ex.E2, b.E1, b.E2);
    worst = std::max({worst, std::abs(e1 - b.E1), std::abs(e2 - b.E2)});
  }
  o.part("8", "extraction", worst < 0.1, fmt("max|E - E_bulk| %.4f (tol 0.1)", worst));

  double loop = 0;
  for (const Vec2& k : {Vec2(kp01, 0), Vec2(0.7 * kp01, 0.7 * kp01)}) {
    const ExtractedKernel ex = extract_heff(synthetic_scatter_matrix(rect, k, 0.5), synthetic_scatter_matrix(rect, k, -0.5), k);
    const BandPoint b = diagonalize2(heff_circular(rect, k, q0));
    const auto [e1, e2] = match(ex.E1, ex.E2, b.E1, b.E2);
    loop = std::max({loop, std::abs(e1 - b.E1), std::abs(e2 - b.E2)});
  }
  o.part("8", "closed loop", loop < 1e-8, fmt("%.2e", loop));
  const double t = seconds_since(t0);
  o.part("8", "runtime", t < 900, fmt("%.1f s", t));
}

void criterion9(Outcome& o) {
  const BandPoint g = diagonalize2(heff_circular(sq, Vec2::Zero(), q0, {}, 0.5));
  const double gap = std::abs(g.E1 - g.E2);
  o.part("9", "gap", std::abs(gap - 1.0) < 1e-6, fmt("|E1 - E2| at Gamma %.9f", gap));

  const Lattice2D r105 = Lattice2D::rectangular(0.2, 1.05);
  const DegeneracyReport bare = find_degeneracies(r105, q0, {}, census(201));
  DegeneracyOptions zo = census(201);
  zo.muB = 0.5;
  const DegeneracyReport z = find_degeneracies(r105, q0, {}, zo);
  int inside = 0;
  double dv = 0;
  for (const auto& d : z.found) {
    inside += d.kind == DegeneracyKind::EP && d.location.norm() < q0;
    const DegeneracyRecord* near = nullptr;
    for (const auto& b : bare.found)
      if (!near || (b.location - d.location).norm() < (near->location - d.location).norm()) near = &b;
    dv = std::max(dv, near ? std::abs(near->vorticity - d.vorticity) : 1.0);
  }
  o.part("9", "EPs", inside == 4 && z.found.size() == 4 && bare.found.size() == 4 && dv < 1e-2,
         fmt("%.0f EPs inside the cone, max vorticity change %.2e", inside, dv));
}

void criterion10(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const int rc = std::system(NHM_PROPERTIES_BIN);
  const double t = seconds_since(t0);
  o.part("10", "properties", rc == 0, rc == 0 ? "all pass" : "see the lines above");
  o.part("10", "runtime", t < 600, fmt("%.1f s", t));
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"EM convergence", criterion1},     {"oracle equivalence", criterion2}, {"degeneracy census", criterion3},
      {"winding", criterion4},            {"skin effect", criterion5},        {"scale-free collapse", criterion6},
      {"beta roots", criterion7},         {"scattering", criterion8},         {"Zeeman robustness", criterion9},
      {"property suites", criterion10},
  };
  bool unexpected = false;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const std::string id = std::to_string(i + 1);
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.part(id, "error", false, e.what());
    }
    for (const auto& f : o.failed) unexpected = unexpected || !known_failures.count(f);
    std::printf("%s  %2zu %-20s %s\n", o.failed.empty() ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.str().c_str());
    std::fflush(stdout);
  }
  return unexpected ? 1 : 0;
}
