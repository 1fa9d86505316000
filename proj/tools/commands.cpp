#include "commands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>

#include "nhm/bands.hpp"
#include "nhm/emsum.hpp"
#include "nhm/ribbon.hpp"
#include "nhm/scatter.hpp"

namespace nhm::cli {

namespace {

using nlohmann::json;

// Momenta of 2D band maps are given in units of q, ribbon and incidence momenta in units of pi/a.

struct LatticeSpec {
  Lattice2D lat;
  double a = 0;
  std::string type;
};

LatticeSpec read_lattice(const Config& cfg, bool bravais_only) {
  LatticeSpec s;
  s.type = cfg.get_string("lattice.type", "square");
  s.a = cfg.get_double("lattice.a_over_lambda", 0.2);
  const double eta = cfg.get_double("lattice.eta", 1.0);
  const auto offsets = cfg.get_tuples("lattice.offsets", 2, std::vector<std::vector<double>>{});
  cfg.require(s.a > 0, "lattice.a_over_lambda", "must be positive");
  cfg.require(eta > 0, "lattice.eta", "must be positive");
  if (s.type == "square") {
    s.lat = Lattice2D::square(s.a);
  } else if (s.type == "rectangular") {
    s.lat = Lattice2D::rectangular(s.a, eta);
  } else if (s.type == "triangular") {
    s.lat = Lattice2D::triangular(s.a);
  } else if (s.type == "honeycomb") {
    s.lat = Lattice2D::honeycomb(s.a);
  } else if (s.type == "kagome") {
    s.lat = Lattice2D::kagome(s.a);
  } else {
    cfg.fail("lattice.type", "unknown lattice '" + s.type + "' (square, rectangular, triangular, honeycomb, kagome)");
  }
  if (!offsets.empty()) {
    s.lat.offsets.clear();
    for (const auto& o : offsets) s.lat.offsets.push_back(s.a * Vec2(o[0], o[1]));
  }
  try {
    validate(s.lat);
  } catch (const DomainError& e) {
    cfg.fail("lattice.type", e.what());
  }
  if (bravais_only && !s.lat.offsets.empty()) cfg.fail("lattice.type", "this command needs a Bravais lattice");
  return s;
}

EMOptions read_em(const Config& cfg) {
  EMOptions em;
  em.M = cfg.get_int("numeric.em_order", 2);
  em.R_inner = cfg.get_double("numeric.r_inner", 8.0);
  const std::string d = cfg.get_string("numeric.derivatives", "auto");
  cfg.require(em.M >= 1 && em.M <= 12, "numeric.em_order", "must lie in 1..12");
  cfg.require(em.R_inner > 0, "numeric.r_inner", "must be positive");
  if (d == "auto") {
    em.derivatives = DerivativeMode::automatic;
  } else if (d == "fd") {
    em.derivatives = DerivativeMode::finite_difference;
  } else if (d == "jets") {
    em.derivatives = DerivativeMode::analytic;
  } else {
    cfg.fail("numeric.derivatives", "expected auto, fd or jets");
  }
  return em;
}

Window read_window(const Config& cfg, double q) {
  const auto w = cfg.get_doubles("sweep.window", std::vector<double>{-1, 1, -1, 1});
  cfg.require(w.size() == 4, "sweep.window", "expected [kx0, kx1, ky0, ky1]");
  cfg.require(w[0] < w[1] && w[2] < w[3], "sweep.window", "bounds must be increasing");
  return {w[0] * q, w[1] * q, w[2] * q, w[3] * q};
}

int read_grid(const Config& cfg, int def) {
  const int n = cfg.get_int("sweep.grid", def);
  cfg.require(n >= 3 && n <= 4001, "sweep.grid", "must lie in 3..4001");
  return n;
}

double read_mu_b(const Config& cfg) { return cfg.get_double("physics.mu_b", 0.0); }

cplx nan_c() { return {std::nan(""), std::nan("")}; }

// ---------------------------------------------------------------- band maps

Job bands_job(const Config& cfg) {
  auto L = read_lattice(cfg, true);
  auto em = read_em(cfg);
  const double q = q0;
  Window win = read_window(cfg, q);
  int n = read_grid(cfg, 51);
  double muB = read_mu_b(cfg);
  return [=] {
    BandGrid g = sample_grid(L.lat, q, em, win, n, muB);
    Table t{"bands", {"kx", "ky", "ReE1", "ImE1", "ReE2", "ImE2", "detV_abs"}, {}};
    int invalid = 0;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const Vec2 k = g.node(i, j);
        if (!g.valid[std::size_t(g.idx(i, j))]) {
          ++invalid;
          t.add({k.x(), k.y(), nan_c().real(), nan_c().imag(), nan_c().real(), nan_c().imag(), std::nan("")});
          continue;
        }
        BandPoint b = diagonalize2(g.h[std::size_t(g.idx(i, j))]);
        t.add({k.x(), k.y(), b.E1.real(), b.E1.imag(), b.E2.real(), b.E2.imag(), std::abs(b.detV)});
      }
    JobOutput out;
    out.tables.push_back(std::move(t));
    out.summary = {{"nodes", n * n}, {"near_cone_nodes", invalid}};
    return out;
  };
}

Job lambshift_job(const Config& cfg) {
  auto em = read_em(cfg);
  auto range = cfg.get_doubles("sweep.range", std::vector<double>{0.1, 0.95, 18});
  auto list = cfg.get_doubles("sweep.a_over_lambda", std::vector<double>{});
  cfg.require(range.size() == 3 && range[2] >= 1 && range[0] > 0 && range[1] >= range[0], "sweep.range",
              "expected [start, stop, points] with 0 < start <= stop");
  std::vector<double> as = list;
  if (as.empty()) {
    const int np = int(range[2]);
    for (int i = 0; i < np; ++i) as.push_back(np == 1 ? range[0] : range[0] + (range[1] - range[0]) * i / (np - 1));
  }
  for (double a : as) cfg.require(a > 0, "sweep.a_over_lambda", "values must be positive");
  return [=] {
    std::vector<LambShift> r(as.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < as.size(); ++i) r[i] = lamb_shift_normal(as[i], em.R_inner, em.M, em.derivatives);
    Table t{"lambshift", {"a_over_lambda", "Delta", "Gamma", "near_divergence", "singular"}, {}};
    int flagged = 0;
    for (std::size_t i = 0; i < as.size(); ++i) {
      t.add({as[i], r[i].Delta, r[i].Gamma, r[i].near_divergence, r[i].singular});
      flagged += r[i].near_divergence || r[i].singular;
    }
    JobOutput out;
    out.tables.push_back(std::move(t));
    out.summary = {{"points", as.size()}, {"flagged", flagged}};
    return out;
  };
}

const char* kind_name(DegeneracyKind k) { return k == DegeneracyKind::NDP ? "NDP" : "EP"; }

Job degeneracies_job(const Config& cfg) {
  auto L = read_lattice(cfg, true);
  auto em = read_em(cfg);
  DegeneracyOptions opt;
  opt.grid = read_grid(cfg, 201);
  opt.tol_deg = cfg.get_double("numeric.tol_deg", 1e-6);
  opt.muB = read_mu_b(cfg);
  cfg.require(opt.tol_deg > 0, "numeric.tol_deg", "must be positive");
  if (cfg.has("sweep.window")) opt.window = read_window(cfg, q0);
  return [=] {
    DegeneracyReport r = find_degeneracies(L.lat, q0, em, opt);
    Table t{"degeneracies", {"kx", "ky", "kind", "vorticity", "snap_error", "res_pm", "res_mp"}, {}};
    int ndp = 0, ep = 0;
    for (const auto& d : r.found) {
      t.add({d.location.x(), d.location.y(), kind_name(d.kind), d.vorticity, d.snap_error, d.res_pm, d.res_mp});
      (d.kind == DegeneracyKind::NDP ? ndp : ep)++;
    }
    JobOutput out;
    out.tables.push_back(std::move(t));
    out.summary = {{"NDP", ndp}, {"EP", ep}, {"unresolved", r.unresolved.size()}};
    return out;
  };
}

Job vorticity_job(const Config& cfg) {
  auto L = read_lattice(cfg, true);
  auto em = read_em(cfg);
  auto centres = cfg.get_tuples("loop.centers", 2, std::vector<std::vector<double>>{{0.0, 0.0}});
  double radius = cfg.get_double("loop.radius", 0.05);
  int points = cfg.get_int("loop.points", 400);
  double muB = read_mu_b(cfg);
  cfg.require(radius > 0, "loop.radius", "must be positive");
  cfg.require(points >= 8, "loop.points", "need at least 8 points");
  cfg.require(!centres.empty(), "loop.centers", "need at least one loop");
  return [=] {
    Table t{"vorticity", {"kx", "ky", "radius", "vorticity", "raw", "snap_error"}, {}};
    for (const auto& c : centres) {
      const Vec2 centre = q0 * Vec2(c[0], c[1]);
      Vorticity v = vorticity(circle_loop(centre, radius * q0, points), L.lat, q0, em, muB);
      t.add({centre.x(), centre.y(), radius * q0, v.value, v.raw, v.snap_error});
    }
    JobOutput out;
    out.tables.push_back(std::move(t));
    return out;
  };
}

Job fermi_arcs_job(const Config& cfg) {
  auto L = read_lattice(cfg, true);
  auto em = read_em(cfg);
  Window win = read_window(cfg, q0);
  int n = read_grid(cfg, 201);
  double muB = read_mu_b(cfg);
  return [=] {
    BandGrid g = sample_grid(L.lat, q0, em, win, n, muB);
    FermiArcs arcs = fermi_arcs(g);
    Table segs{"fermi-arcs", {"kind", "x0", "y0", "x1", "y1"}, {}};
    for (const auto& s : arcs.real_arcs) segs.add({"real", s.p0.x(), s.p0.y(), s.p1.x(), s.p1.y()});
    for (const auto& s : arcs.imag_arcs) segs.add({"imag", s.p0.x(), s.p0.y(), s.p1.x(), s.p1.y()});
    const ReciprocalBasis rb = reciprocal_basis(L.lat);
    const double tol = 1e-6 * std::min(g.dx(), g.dy());
    Table ends{"fermi-arcs_endpoints", {"kind", "kx", "ky", "cone_gap_cells"}, {}};
    for (const auto& [name, set] : {std::pair{"real", &arcs.real_arcs}, std::pair{"imag", &arcs.imag_arcs}})
      for (const Vec2& p : arc_endpoints(*set, tol)) ends.add({name, p.x(), p.y(), cone_gap(rb, p, q0) / g.dx()});
    JobOutput out;
    out.summary = {{"real_segments", arcs.real_arcs.size()}, {"imag_segments", arcs.imag_arcs.size()}};
    out.tables.push_back(std::move(segs));
    out.tables.push_back(std::move(ends));
    return out;
  };
}

// ---------------------------------------------------------------- ribbons

struct RibbonSpec {
  std::array<int, 2> direction{1, 1};
  int L = 80;
  double k_par = 0;  // absolute
};

RibbonSpec read_ribbon(const Config& cfg, const LatticeSpec& lat, bool need_length) {
  RibbonSpec r;
  auto d = cfg.get_ints("ribbon.direction", std::vector<int>{1, 1});
  cfg.require(d.size() == 2 && (d[0] != 0 || d[1] != 0), "ribbon.direction", "expected two integers, not both 0");
  r.direction = {d[0], d[1]};
  if (need_length) {
    r.L = cfg.get_int("ribbon.length", 80);
    cfg.require(r.L >= 2 && r.L <= 2000, "ribbon.length", "must lie in 2..2000");
  } else {
    r.L = 2;
  }
  r.k_par = cfg.get_double("ribbon.k_par", 0.1) * pi / lat.a;
  return r;
}

double edge_ratio(const std::vector<double>& S, double frac) {
  return edge_mass(S, frac, true) / edge_mass(S, frac, false);
}

Job ribbon_spectrum_job(const Config& cfg) {
  auto L = read_lattice(cfg, true);
  auto rs = read_ribbon(cfg, L, true);
  int n_prime = cfg.get_int("ribbon.n_prime", 0);
  double frac = cfg.get_double("ribbon.edge_fraction", 0.1);
  int bulk = cfg.get_int("ribbon.bulk_points", 0);
  auto em = read_em(cfg);
  cfg.require(frac > 0 && frac <= 0.5, "ribbon.edge_fraction", "must lie in (0, 0.5]");
  cfg.require(bulk >= 0, "ribbon.bulk_points", "must be non-negative");
  return [=] {
    RibbonModel m = assemble_ribbon(L.lat, rs.direction, rs.L, rs.k_par);
    ObcResult r = obc_spectrum(m, L.lat, n_prime);
    Table t{"ribbon-spectrum", {"index", "ReE", "ImE", "edge_first", "edge_last"}, {}};
    for (Eigen::Index i = 0; i < r.energies.size(); ++i) {
      auto p = chain_profile(r.states.col(i));
      t.add({long(i), r.energies[i].real(), r.energies[i].imag(), edge_mass(p, frac, true), edge_mass(p, frac, false)});
    }
    JobOutput out;
    out.tables.push_back(std::move(t));
    if (bulk > 0) {
      const double period = two_pi / m.chains.perp_spacing;
      std::vector<double> kp(static_cast<std::size_t>(bulk));
      for (int i = 0; i < bulk; ++i) kp[std::size_t(i)] = period * (i + 0.5) / bulk;
      auto s = bulk_slice_spectrum(L.lat, m.chains, rs.k_par, q0, kp, em);
      Table b{"ribbon-spectrum_bulk", {"k_perp", "ReE1", "ImE1", "ReE2", "ImE2", "near_cone"}, {}};
      for (const auto& x : s) b.add({x.k_perp, x.E1.real(), x.E1.imag(), x.E2.real(), x.E2.imag(), x.near_cone});
      out.tables.push_back(std::move(b));
    }
    out.summary = {{"N_prime", r.N_prime}, {"edge_ratio_first_last", edge_ratio(r.S_NH, frac)}};
    return out;
  };
}

Job ribbon_skin_job(const Config& cfg) {
  auto L = read_lattice(cfg, true);
  auto rs = read_ribbon(cfg, L, true);
  int n_prime = cfg.get_int("ribbon.n_prime", 0);
  double frac = cfg.get_double("ribbon.edge_fraction", 0.1);
  cfg.require(frac > 0 && frac <= 0.5, "ribbon.edge_fraction", "must lie in (0, 0.5]");
  return [=] {
    RibbonModel m = assemble_ribbon(L.lat, rs.direction, rs.L, rs.k_par);
    ObcResult r = obc_spectrum(m, L.lat, n_prime);
    Table t{"ribbon-skin", {"r_perp", "S_NH"}, {}};
    for (int i = 0; i < rs.L; ++i) t.add({i * m.chains.perp_spacing, r.S_NH[std::size_t(i)]});
    auto [mn, mx] = std::minmax_element(r.S_NH.begin(), r.S_NH.end());
    LengthFit fit = fit_characteristic_length(r.S_NH);
    JobOutput out;
    out.tables.push_back(std::move(t));
    out.summary = {{"N_prime", r.N_prime},
                   {"edge_ratio_first_last", edge_ratio(r.S_NH, frac)},
                   {"max_over_min", *mx / *mn},
                   {"delocalized", fit.delocalized},
                   {"xi_over_L", fit.xi_over_L}};
    return out;
  };
}

Job beta_roots_job(const Config& cfg) {
  auto L = read_lattice(cfg, true);
  auto rs = read_ribbon(cfg, L, true);
  int mode = cfg.get_int("ribbon.mode", -1);
  cfg.require(mode < 2 * rs.L, "ribbon.mode", "exceeds the number of ribbon modes");
  if (mode < 0) mode = std::max(0, int(std::lround(0.2 * rs.L)) - 1);
  return [=] {
    RibbonModel m = assemble_ribbon(L.lat, rs.direction, rs.L, rs.k_par);
    ObcResult r = obc_spectrum(m, L.lat);
    const cplx E = r.energies[mode];
    BetaSolutionSet roots = characteristic_roots(m, E);
    Reconstruction rec = reconstruct_eigenstate(roots, r.states.col(mode), rs.L);
    Table t{"beta-roots", {"index", "ReBeta", "ImBeta", "abs_beta", "weight"}, {}};
    double pairing = 0;
    for (Eigen::Index i = 0; i < roots.roots.size(); ++i) {
      const cplx b = roots.roots[i];
      double best = INFINITY;
      for (Eigen::Index j = 0; j < roots.roots.size(); ++j) best = std::min(best, std::abs(b * roots.roots[j] - 1.0));
      pairing = std::max(pairing, best);
      t.add({long(i), b.real(), b.imag(), std::abs(b), rec.weights[std::size_t(i)]});
    }
    JobOutput out;
    out.tables.push_back(std::move(t));
    out.summary = {{"mode", mode},
                   {"ReE", E.real()},
                   {"ImE", E.imag()},
                   {"finite_roots", roots.roots.size()},
                   {"infinite_roots", roots.infinite},
                   {"expected_roots", 4 * (rs.L - 1)},
                   {"max_pairing_error", pairing},
                   {"residual", rec.residual},
                   {"boundary_residual", rec.boundary_residual},
                   {"partial_residual", rec.partial_residual},
                   {"condition", rec.condition}};
    return out;
  };
}

Job winding_job(const Config& cfg) {
  auto L = read_lattice(cfg, true);
  auto rs = read_ribbon(cfg, L, false);
  auto em = read_em(cfg);
  auto energies = cfg.get_tuples("winding.energies", 2, std::vector<std::vector<double>>{{-0.2, -3.2}, {3.0, -3.2}});
  int samples = cfg.get_int("winding.samples", 2000);
  double eps = cfg.get_double("winding.eps_frac", 1e-3);
  cfg.require(!energies.empty(), "winding.energies", "need at least one reference energy");
  cfg.require(samples >= 16, "winding.samples", "need at least 16 samples");
  cfg.require(eps > 0 && eps < 0.1, "winding.eps_frac", "must lie in (0, 0.1)");
  return [=] {
    ChainDecomposition cd = ribbon_decomposition(L.lat, rs.direction, 2);
    Table t{"winding", {"ReE_r", "ImE_r", "W", "raw", "snap_error", "jump_sum", "max_step"}, {}};
    json crossings = json::array();
    for (const auto& e : energies) {
      WindingResult w = winding_number(L.lat, cd, rs.k_par, q0, cplx(e[0], e[1]), samples, em, eps);
      t.add({e[0], e[1], w.W, w.raw, w.snap_error, w.jump_sum, w.max_step});
      if (crossings.empty()) crossings = w.crossings;
    }
    JobOutput out;
    out.tables.push_back(std::move(t));
    out.summary = {{"cone_crossings", crossings}, {"period", two_pi / cd.perp_spacing}};
    return out;
  };
}

// ---------------------------------------------------------------- dipole arrays

struct ArraySpec {
  int Lx = 32, Ly = 32;
  Boundary shape = Boundary::rectangle;
  int pol_dof = 2;
  double z_detuning = 30;
};

ArraySpec read_array(const Config& cfg, bool with_z) {
  ArraySpec s;
  s.Lx = cfg.get_int("array.lx", 32);
  s.Ly = cfg.get_int("array.ly", 32);
  cfg.require(s.Lx >= 1 && s.Lx <= 200, "array.lx", "must lie in 1..200");
  cfg.require(s.Ly >= 1 && s.Ly <= 200, "array.ly", "must lie in 1..200");
  const std::string shape = cfg.get_string("array.shape", "rectangle");
  if (shape == "rectangle") {
    s.shape = Boundary::rectangle;
  } else if (shape == "parallelogram") {
    s.shape = Boundary::parallelogram;
  } else {
    cfg.fail("array.shape", "expected rectangle or parallelogram");
  }
  if (with_z) {
    s.pol_dof = cfg.get_int("array.pol_dof", 2);
    s.z_detuning = cfg.get_double("array.z_detuning", 30.0);
    cfg.require(s.pol_dof == 2 || s.pol_dof == 3, "array.pol_dof", "expected 2 or 3");
  }
  return s;
}

DipoleScene make_scene(const LatticeSpec& L, const ArraySpec& a, double muB) {
  DipoleScene s = array_scene(L.lat, a.Lx, a.Ly, a.shape);
  s.pol_dof = a.pol_dof;
  s.z_detuning = a.z_detuning;
  s.muB = muB;
  return s;
}

Vec2 read_incidence(const Config& cfg, const std::string& key, const LatticeSpec& L) {
  auto k = cfg.get_doubles(key, std::vector<double>{0.0, 0.0});
  cfg.require(k.size() == 2, key, "expected [kx, ky] in units of pi/a");
  Vec2 kk = (pi / L.a) * Vec2(k[0], k[1]);
  cfg.require(kk.norm() < 0.99 * q0, key, "incidence must lie inside the light cone");
  return kk;
}

Vec3 incidence(const Vec2& k) {
  return {k.x() / q0, k.y() / q0, std::sqrt(std::max(0.0, 1.0 - k.squaredNorm() / (q0 * q0)))};
}

Job scatter_field_job(const Config& cfg) {
  auto L = read_lattice(cfg, true);
  auto arr = read_array(cfg, true);
  double muB = read_mu_b(cfg);
  double delta = cfg.get_double("scatter.delta", 0.0);
  Vec2 k = read_incidence(cfg, "scatter.k_par", L);
  std::string pol = cfg.get_string("scatter.polarization", "x");
  std::string beam = cfg.get_string("scatter.beam", "plane");
  double w0 = cfg.get_double("scatter.w0_over_a", 4.0);
  double zp = cfg.get_double("scatter.z_over_a", 5.0);
  auto xs = cfg.get_doubles("field.x", std::vector<double>{-20, 20, 41});
  auto zs = cfg.get_doubles("field.z", std::vector<double>{-20, 20, 40});
  cfg.require(pol == "x" || pol == "y" || pol == "p" || pol == "s", "scatter.polarization", "expected x, y, p or s");
  cfg.require(beam == "plane" || beam == "gaussian", "scatter.beam", "expected plane or gaussian");
  cfg.require(w0 > 0, "scatter.w0_over_a", "must be positive");
  cfg.require(zp > 0, "scatter.z_over_a", "must be positive");
  for (const auto* key : {"field.x", "field.z"}) {
    const auto& v = std::string(key) == "field.x" ? xs : zs;
    cfg.require(v.size() == 3 && v[2] >= 1 && v[2] <= 2000 && v[1] >= v[0], key,
                "expected [start, stop, points] in units of a");
  }
  return [=] {
    DipoleScene s = make_scene(L, arr, muB);
    Vec3 c = Vec3::Zero();
    for (const auto& p : s.positions) c += p;
    c /= double(s.positions.size());
    const Vec3 kh = incidence(k);
    const PolarizationBasis pb = polarization_basis(kh);
    Vec3 e = pol == "x" ? Vec3(1, 0, 0) : pol == "y" ? Vec3(0, 1, 0) : pol == "p" ? pb.e_p : pb.e_s;
    // Cartesian choices are made transverse to the incidence direction.
    if (pol == "x" || pol == "y") {
      e -= e.dot(kh) * kh;
      e.normalize();
    }
    Drive d = beam == "plane" ? plane_wave(kh, e.cast<cplx>()) : gaussian_beam(kh, e.cast<cplx>(), c, w0 * L.a);
    DipoleSolver solver(s);
    SolvedDipoles sol = solver.solve(d, delta);
    auto axis = [](const std::vector<double>& v, int i) {
      const int n = int(v[2]);
      return n == 1 ? v[0] : v[0] + (v[1] - v[0]) * i / (n - 1);
    };
    Table t{"scatter-field", {"x", "z", "I_inc", "I_sc", "I_tot"}, {}};
    for (int iz = 0; iz < int(zs[2]); ++iz)
      for (int ix = 0; ix < int(xs[2]); ++ix) {
        const Vec3 r = c + Vec3(axis(xs, ix) * L.a, 0, axis(zs, iz) * L.a);
        bool on_atom = false;
        for (const auto& p : s.positions) on_atom = on_atom || (r - p).norm() < 1e-9 * L.a;
        if (on_atom) {
          t.add({r.x() - c.x(), r.z(), d.field(r).squaredNorm(), std::nan(""), std::nan("")});
          continue;
        }
        FieldValue f = field_at(s, sol, d, r);
        t.add({r.x() - c.x(), r.z(), d.field(r).squaredNorm(), f.scattered.squaredNorm(), f.total.squaredNorm()});
      }
    const Vec3 probe = c + (zp * L.a / kh.z()) * kh;
    FieldValue fp = field_at(s, sol, d, probe);
    JobOutput out;
    out.tables.push_back(std::move(t));
    out.summary = {{"residual", sol.residual},
                   {"transmission_on_axis", fp.total.squaredNorm() / d.field(probe).squaredNorm()}};
    if (beam == "plane") {
      EnergyBalance eb = energy_balance(s, sol, d);
      out.summary["R"] = eb.R;
      out.summary["T"] = eb.T;
      out.summary["P_ext"] = eb.P_ext;
      out.summary["P_scattered"] = eb.P_back + eb.P_fwd;
    }
    return out;
  };
}

// Pairs extracted eigenvalues with bulk ones by the smaller total distance.
std::pair<cplx, cplx> match(cplx e1, cplx e2, cplx b1, cplx b2) {
  if (std::abs(e1 - b1) + std::abs(e2 - b2) <= std::abs(e1 - b2) + std::abs(e2 - b1)) return {e1, e2};
  return {e2, e1};
}

Job scatter_extract_job(const Config& cfg) {
  auto L = read_lattice(cfg, true);
  auto arr = read_array(cfg, true);
  auto em = read_em(cfg);
  double muB = read_mu_b(cfg);
  auto deltas = cfg.get_doubles("scatter.deltas", std::vector<double>{0.5, -0.5});
  auto ks = cfg.get_tuples("scatter.k_points", 2,
                           std::vector<std::vector<double>>{{0.1, 0.0}, {0.0, 0.1}, {-0.1, 0.0}, {0.0, -0.1}});
  ScatterOptions opt;
  opt.w0_over_a = cfg.get_double("scatter.w0_over_a", 4.0);
  opt.z_over_a = cfg.get_double("scatter.z_over_a", 5.0);
  bool synthetic = cfg.get_bool("scatter.synthetic", false);
  cfg.require(deltas.size() == 2 && deltas[0] != deltas[1], "scatter.deltas", "expected two distinct detunings");
  cfg.require(!ks.empty(), "scatter.k_points", "need at least one incidence point");
  cfg.require(opt.w0_over_a > 0, "scatter.w0_over_a", "must be positive");
  cfg.require(opt.z_over_a > 0, "scatter.z_over_a", "must be positive");
  std::vector<Vec2> kv;
  for (const auto& k : ks) {
    Vec2 kk = (pi / L.a) * Vec2(k[0], k[1]);
    cfg.require(kk.norm() < 0.99 * q0, "scatter.k_points", "incidence must lie inside the light cone");
    kv.push_back(kk);
  }
  return [=] {
    Table t{"scatter-extract",
            {"kx", "ky", "ReE1", "ImE1", "ReE2", "ImE2", "ReE1_bulk", "ImE1_bulk", "ReE2_bulk", "ImE2_bulk", "max_error"},
            {}};
    std::unique_ptr<DipoleSolver> solver;
    if (!synthetic) solver = std::make_unique<DipoleSolver>(make_scene(L, arr, muB));
    double worst = 0;
    for (const Vec2& k : kv) {
      ExtractedKernel ex;
      if (synthetic) {
        auto s1 = synthetic_scatter_matrix(L.lat, k, deltas[0], q0, em, muB, arr.pol_dof == 3, arr.z_detuning);
        auto s2 = synthetic_scatter_matrix(L.lat, k, deltas[1], q0, em, muB, arr.pol_dof == 3, arr.z_detuning);
        ex = extract_heff(s1, s2, k);
      } else {
        ex = extract_heff(*solver, k, deltas[0], deltas[1], opt);
      }
      BandPoint b = diagonalize2(heff_circular(L.lat, k, q0, em, muB));
      auto [e1, e2] = match(ex.E1, ex.E2, b.E1, b.E2);
      const double err = std::max(std::abs(e1 - b.E1), std::abs(e2 - b.E2));
      worst = std::max(worst, err);
      t.add({k.x(), k.y(), e1.real(), e1.imag(), e2.real(), e2.imag(), b.E1.real(), b.E1.imag(), b.E2.real(),
             b.E2.imag(), err});
    }
    JobOutput out;
    out.tables.push_back(std::move(t));
    out.summary = {{"max_error", worst}, {"synthetic", synthetic}};
    return out;
  };
}

Job finite_modes_job(const Config& cfg) {
  auto L = read_lattice(cfg, true);
  auto arr = read_array(cfg, false);
  double muB = read_mu_b(cfg);
  int n_prime = cfg.get_int("finite.n_prime", 0);
  int frame = cfg.get_int("finite.frame", 6);
  cfg.require(frame >= 1, "finite.frame", "must be positive");
  cfg.require(arr.Lx * arr.Ly <= 2500, "array.lx", "array larger than 2500 sites is not supported here");
  return [=] {
    DipoleScene s = make_scene(L, arr, muB);
    FiniteModes fm = finite_array_modes(s, n_prime, frame);
    Table modes{"finite-modes", {"index", "ReE", "ImE", "boundary"}, {}};
    for (Eigen::Index i = 0; i < fm.energies.size(); ++i)
      modes.add({long(i), fm.energies[i].real(), fm.energies[i].imag(), fm.boundary[std::size_t(i)]});
    Table prof{"finite-modes_profile", {"x", "y", "S_NH"}, {}};
    for (std::size_t m = 0; m < s.positions.size(); ++m)
      prof.add({s.positions[m].x(), s.positions[m].y(), fm.S_NH[m]});
    JobOutput out;
    out.tables.push_back(std::move(modes));
    out.tables.push_back(std::move(prof));
    out.summary = {{"N_prime", fm.N_prime}, {"sites", s.positions.size()}};
    return out;
  };
}

using Factory = Job (*)(const Config&);

const std::map<std::string, std::pair<Factory, const char*>>& registry() {
  static const std::map<std::string, std::pair<Factory, const char*>> r = {
      {"bands", {bands_job, "bands"}},
      {"lambshift", {lambshift_job, "emsum"}},
      {"degeneracies", {degeneracies_job, "bands"}},
      {"vorticity", {vorticity_job, "bands"}},
      {"fermi-arcs", {fermi_arcs_job, "bands"}},
      {"ribbon-spectrum", {ribbon_spectrum_job, "ribbon"}},
      {"ribbon-skin", {ribbon_skin_job, "ribbon"}},
      {"beta-roots", {beta_roots_job, "ribbon"}},
      {"winding", {winding_job, "ribbon"}},
      {"scatter-field", {scatter_field_job, "scatter"}},
      {"scatter-extract", {scatter_extract_job, "scatter"}},
      {"finite-modes", {finite_modes_job, "scatter"}},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"bands",           "lambshift",   "degeneracies",  "vorticity",
                                                 "fermi-arcs",      "ribbon-spectrum", "ribbon-skin", "beta-roots",
                                                 "winding",         "scatter-field", "scatter-extract", "finite-modes"};
  return names;
}

Job prepare(const std::string& command, const Config& cfg) {
  auto it = registry().find(command);
  if (it == registry().end()) throw ConfigError("unknown command '" + command + "'");
  return it->second.first(cfg);
}

std::string module_of(const std::string& command) {
  auto it = registry().find(command);
  return it == registry().end() ? "cli" : it->second.second;
}

const std::vector<KeyDoc>& config_schema() {
  static const std::vector<KeyDoc> keys = {
      {"lattice.type", "square", "square, rectangular, triangular, honeycomb or kagome"},
      {"lattice.a_over_lambda", "0.2", "lattice constant a in wavelengths"},
      {"lattice.eta", "1.0", "aspect ratio |a2|/|a1| of the rectangular lattice"},
      {"lattice.offsets", "[]", "sublattice offsets in units of a, replaces the built-in basis"},
      {"numeric.em_order", "2", "Euler-Maclaurin order M"},
      {"numeric.r_inner", "8", "inner region side in units of 2 pi/a"},
      {"numeric.derivatives", "auto", "auto, fd or jets"},
      {"numeric.tol_deg", "1e-6", "degeneracy acceptance on |E1 - E2|"},
      {"physics.mu_b", "0", "Zeeman splitting in units of Gamma0"},
      {"sweep.grid", "51 (bands), 201", "grid nodes per side"},
      {"sweep.window", "[-1, 1, -1, 1]", "[kx0, kx1, ky0, ky1] in units of q"},
      {"sweep.range", "[0.1, 0.95, 18]", "lambshift: [start, stop, points] of a/lambda"},
      {"sweep.a_over_lambda", "[]", "lambshift: explicit a/lambda list, overrides the range"},
      {"loop.centers", "[[0, 0]]", "loop centres in units of q"},
      {"loop.radius", "0.05", "loop radius in units of q"},
      {"loop.points", "400", "points per loop"},
      {"ribbon.direction", "[1, 1]", "chain direction in lattice coordinates"},
      {"ribbon.length", "80", "number of chains L"},
      {"ribbon.k_par", "0.1", "momentum along the chains in units of pi/a"},
      {"ribbon.n_prime", "0", "modes averaged in S_NH, 0 selects the light-cone count"},
      {"ribbon.edge_fraction", "0.1", "edge window for the mass ratio"},
      {"ribbon.bulk_points", "0", "ribbon-spectrum: bulk slice samples, 0 disables"},
      {"ribbon.mode", "-1", "beta-roots: eigenstate index, -1 selects round(0.2 L) - 1"},
      {"winding.energies", "[[-0.2, -3.2], [3, -3.2]]", "reference energies [Re, Im]"},
      {"winding.samples", "2000", "regular samples over one period"},
      {"winding.eps_frac", "1e-3", "cone window half-width as a fraction of the period"},
      {"array.lx", "32", "sites along a1"},
      {"array.ly", "32", "sites along a2"},
      {"array.shape", "rectangle", "rectangle or parallelogram"},
      {"array.pol_dof", "2", "2 (in-plane) or 3 (adds the detuned z dipole)"},
      {"array.z_detuning", "30", "z dipole detuning in units of Gamma0"},
      {"scatter.delta", "0", "scatter-field: drive detuning in units of Gamma0"},
      {"scatter.k_par", "[0, 0]", "scatter-field: in-plane incidence momentum in units of pi/a"},
      {"scatter.polarization", "x", "x, y, p or s"},
      {"scatter.beam", "plane", "plane or gaussian"},
      {"scatter.w0_over_a", "4", "Gaussian waist in units of a"},
      {"scatter.z_over_a", "5", "probe height on the beam axis in units of a"},
      {"scatter.deltas", "[0.5, -0.5]", "scatter-extract: detuning pair"},
      {"scatter.k_points", "[[0.1, 0], [0, 0.1], [-0.1, 0], [0, -0.1]]", "incidence momenta in units of pi/a"},
      {"scatter.synthetic", "false", "scatter-extract: use the infinite-array S matrix"},
      {"field.x", "[-20, 20, 41]", "scatter-field: x range [start, stop, points] in units of a"},
      {"field.z", "[-20, 20, 40]", "scatter-field: z range in units of a"},
      {"finite.n_prime", "0", "modes averaged in S_NH, 0 selects the light-cone count"},
      {"finite.frame", "6", "boundary columns on each side"},
  };
  return keys;
}

}  // namespace nhm::cli
