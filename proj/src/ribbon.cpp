#include "nhm/ribbon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nhm/bands.hpp"
#include "nhm/greens.hpp"
#include "nhm/linalg.hpp"

namespace nhm {

namespace {

const Vec2 frame_x(1.0, 0.0);

// Columns e_par, e_perp.
Eigen::Matrix2d frame2(const ChainDecomposition& cd) {
  Eigen::Matrix2d R;
  R.col(0) = cd.e_par;
  R.col(1) = cd.e_perp;
  return R;
}

bool inside_some_cone(const ReciprocalBasis& rb, const Vec2& k, double q) {
  Eigen::Matrix2d B;
  B.col(0) = rb.b1;
  B.col(1) = rb.b2;
  const Vec2 c = B.inverse() * (-k);
  const double bmin = std::min(rb.b1.norm(), rb.b2.norm());
  const int span = int(std::ceil(q / bmin)) + 2;
  for (int m = int(std::floor(c[0])) - span; m <= int(std::ceil(c[0])) + span; ++m)
    for (int n = int(std::floor(c[1])) - span; n <= int(std::ceil(c[1])) + span; ++n)
      if ((k + m * rb.b1 + n * rb.b2).norm() < q) return true;
  return false;
}

double circ_dist(double x, double y, double P) { return std::abs(std::remainder(x - y, P)); }

Mat2c inplane_frame(const Lattice2D& lat, const ChainDecomposition& cd, const Vec2& k, double q,
                    const EMOptions& em) {
  const Tensor3 h = heff_bravais(lat, k, q, em);
  const Eigen::Matrix2d R = frame2(cd);
  return R.transpose().cast<cplx>() * h.topLeftCorner<2, 2>() * R.cast<cplx>();
}

}  // namespace

Mat2c chain_coupling(double k, double b, double y, double q, double a, const Vec2& e_par) {
  (void)e_par;  // the result is expressed in the chain frame
  if (!(a > 0)) throw DomainError("chain_coupling: a_par must be positive");
  const double c = coupling_prefactor(q);
  if (y == 0.0) {
    if (std::abs(std::remainder(b, a)) > 1e-12 * a) throw DomainError("chain_coupling: coincident chains with offset");
    const Tensor3 S = chain_self_sum(k, a, q, frame_x);
    // lattice translations by whole periods only shift the Bloch phase
    const cplx ph = std::exp(I1 * k * (b - std::remainder(b, a)));
    return -c * ph * S.topLeftCorner<2, 2>();
  }
  const double g = two_pi / a;
  const double rho = std::abs(y);
  Mat2c sum = Mat2c::Zero();
  auto term = [&](long m) {
    const double p = k + g * double(m);
    const Tensor3 F = green_recip_1d(p, y, q, frame_x);
    return Mat2c(std::exp(I1 * p * b) * F.topLeftCorner<2, 2>());
  };
  const long m0 = std::lround(-k / g);
  sum += term(m0);
  for (long s = 1;; ++s) {
    const long mp = m0 + s, mm = m0 - s;
    const Mat2c tp = term(mp), tm = term(mm);
    sum += tp + tm;
    const double gp = std::abs(k + g * double(mp)), gm = std::abs(k + g * double(mm));
    const bool evan = gp > q && gm > q;
    const double small = std::max(tp.norm(), tm.norm());
    if (evan && std::sqrt(std::min(gp, gm) * std::min(gp, gm) - q * q) * rho > 1.0 &&
        small < 1e-17 * std::max(sum.norm(), 1e-300))
      break;
    if (s > 1000000) throw ConvergenceError("chain_coupling: reciprocal sum did not converge");
  }
  return -c * sum / a;
}

RibbonModel assemble_ribbon(const Lattice2D& lat, std::array<int, 2> direction, int L, double k_par, double q,
                            Exec exec) {
  RibbonModel m;
  m.chains = ribbon_decomposition(lat, direction, L);
  m.k_par = k_par;
  m.q = q;
  const ChainDecomposition& cd = m.chains;
  const int nb = 2 * L - 1;
  m.T.assign(std::size_t(nb), Mat2c::Zero());
  // Bloch phases refer to absolute positions along e_par, so a bulk state has
  // amplitude ratio beta = exp(i k_perp perp_spacing) between adjacent chains
  bool failed = false;
  std::string msg;
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (int i = 0; i < nb; ++i) {
    const int j = i - (L - 1);
    try {
      const double b = -double(j) * cd.par_step;
      const double y = -double(j) * cd.perp_spacing;
      Mat2c t = std::exp(-I1 * k_par * b) * chain_coupling(k_par, b, y, q, cd.a_par, cd.e_par);
      if (j == 0) t += -0.5 * I1 * Mat2c::Identity();
      m.T[std::size_t(i)] = t;
    } catch (const Error& e) {
#pragma omp critical
      {
        failed = true;
        msg = e.what();
      }
    }
  }
  if (failed) throw SingularityError("assemble_ribbon: " + msg);
  m.H.resize(2 * L, 2 * L);
  for (int r = 0; r < L; ++r)
    for (int s = 0; s < L; ++s) m.H.block<2, 2>(2 * r, 2 * s) = m.block(s - r);
  return m;
}

double cone_fraction(const Lattice2D& lat, const ChainDecomposition& cd, double k_par, double q, int samples) {
  if (samples < 1) throw DomainError("cone_fraction: samples must be positive");
  const ReciprocalBasis rb = reciprocal_basis(lat);
  const double P = two_pi / cd.perp_spacing;
  int in = 0;
  for (int s = 0; s < samples; ++s) {
    const double kp = (double(s) + 0.5) * P / samples;
    if (inside_some_cone(rb, k_par * cd.e_par + kp * cd.e_perp, q)) ++in;
  }
  return double(in) / samples;
}

std::vector<double> chain_profile(const VecXc& state) {
  std::vector<double> p(std::size_t(state.size() / 2));
  for (std::size_t m = 0; m < p.size(); ++m) p[m] = std::norm(state[2 * m]) + std::norm(state[2 * m + 1]);
  return p;
}

double edge_mass(const std::vector<double>& S, double frac, bool first) {
  const std::size_t n = S.size();
  const std::size_t w = std::max<std::size_t>(1, std::size_t(std::lround(frac * double(n))));
  double s = 0;
  for (std::size_t i = 0; i < w && i < n; ++i) s += first ? S[i] : S[n - 1 - i];
  return s;
}

ObcResult obc_spectrum(const RibbonModel& model, const Lattice2D& lat, int N_prime) {
  const int L = model.chains.L;
  const EigResult e = eig(model.H, true);
  const std::vector<int> idx = order_by_imag(e.values);
  ObcResult r;
  r.energies.resize(e.values.size());
  r.states.resize(e.vectors.rows(), e.vectors.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    r.energies[Eigen::Index(i)] = e.values[idx[i]];
    r.states.col(Eigen::Index(i)) = e.vectors.col(idx[i]);
  }
  if (N_prime <= 0) N_prime = int(std::lround(2.0 * L * cone_fraction(lat, model.chains, model.k_par, model.q)));
  N_prime = std::clamp(N_prime, 1, 2 * L);
  r.N_prime = N_prime;
  r.S_NH.assign(std::size_t(L), 0.0);
  for (int i = 0; i < N_prime; ++i) {
    const std::vector<double> p = chain_profile(r.states.col(i));
    for (int m = 0; m < L; ++m) r.S_NH[std::size_t(m)] += p[std::size_t(m)] / N_prime;
  }
  return r;
}

std::vector<SliceSample> bulk_slice_spectrum(const Lattice2D& lat, const ChainDecomposition& cd, double k_par,
                                             double q, const std::vector<double>& k_perp, const EMOptions& em) {
  const ReciprocalBasis rb = reciprocal_basis(lat);
  std::vector<SliceSample> out(k_perp.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < k_perp.size(); ++i) {
    const Vec2 k = k_par * cd.e_par + k_perp[i] * cd.e_perp;
    SliceSample& s = out[i];
    s.k_perp = k_perp[i];
    s.near_cone = cone_gap(rb, k, q) < 1e-3 * q;
    if (cone_gap(rb, k, q) < tol_lc(q)) {
      s.E1 = s.E2 = cplx(std::nan(""), std::nan(""));
      continue;
    }
    const BandPoint bp = diagonalize2(inplane_frame(lat, cd, k, q, em));
    s.E1 = bp.E1;
    s.E2 = bp.E2;
  }
  return out;
}

std::vector<double> slice_cone_crossings(const Lattice2D& lat, const ChainDecomposition& cd, double k_par, double q) {
  const ReciprocalBasis rb = reciprocal_basis(lat);
  const double P = two_pi / cd.perp_spacing;
  const double bmin = std::min(rb.b1.norm(), rb.b2.norm());
  const int span = int(std::ceil((q + std::abs(k_par) + P) / bmin)) + 2;
  std::vector<double> xs;
  for (int m = -span; m <= span; ++m)
    for (int n = -span; n <= span; ++n) {
      const Vec2 G = m * rb.b1 + n * rb.b2;
      const double gp = G.dot(cd.e_par) + k_par;
      const double d = q * q - gp * gp;
      if (d < 0) continue;
      const double r = std::sqrt(d);
      for (double sg : {-1.0, 1.0}) {
        double x = std::fmod(-G.dot(cd.e_perp) + sg * r, P);
        if (x < 0) x += P;
        if (x >= P) x -= P;
        bool dup = false;
        for (double y : xs) dup = dup || circ_dist(x, y, P) < 1e-12 * P;
        if (!dup) xs.push_back(x);
      }
    }
  std::sort(xs.begin(), xs.end());
  return xs;
}

WindingResult winding_number(const Lattice2D& lat, const ChainDecomposition& cd, double k_par, double q, cplx E_r,
                             int n_samples, const EMOptions& em, double eps_frac) {
  if (n_samples < 16) throw DomainError("winding_number: too few samples");
  const double P = two_pi / cd.perp_spacing;
  const double eps = eps_frac * P;
  WindingResult w;
  w.crossings = slice_cone_crossings(lat, cd, k_par, q);

  // sample positions with a tag: -1 regular, i = left edge of window i
  struct Pt {
    double t;
    int window;
  };
  std::vector<Pt> pts;
  for (int s = 0; s < n_samples; ++s) {
    const double t = double(s) * P / n_samples;
    bool near = false;
    for (double c : w.crossings) near = near || circ_dist(t, c, P) <= eps;
    if (!near) pts.push_back({t, -1});
  }
  for (std::size_t i = 0; i < w.crossings.size(); ++i) {
    auto wrapP = [P](double x) { return x - P * std::floor(x / P); };
    pts.push_back({wrapP(w.crossings[i] - eps), int(i)});
    pts.push_back({wrapP(w.crossings[i] + eps), -1});
  }
  std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) { return a.t < b.t; });

  std::vector<cplx> f(pts.size());
  std::vector<double> gap(pts.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec2 k = k_par * cd.e_par + pts[i].t * cd.e_perp;
    const Mat2c h = inplane_frame(lat, cd, k, q, em);
    const Mat2c d = h - E_r * Mat2c::Identity();
    f[i] = d.determinant();
    const BandPoint bp = diagonalize2(h);
    gap[i] = std::min(std::abs(bp.E1 - E_r), std::abs(bp.E2 - E_r));
  }
  if (*std::min_element(gap.begin(), gap.end()) < 1e-8)
    throw DomainError("winding_number: reference energy lies on the spectrum");

  double total = 0;
  w.jumps.assign(w.crossings.size(), 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::size_t j = (i + 1) % pts.size();
    const double step = std::arg(f[j] / f[i]);
    total += step;
    if (pts[i].window >= 0) {
      w.jumps[std::size_t(pts[i].window)] = step;
      w.jump_sum += step;
    } else {
      w.max_step = std::max(w.max_step, std::abs(step));
    }
  }
  if (w.max_step >= pi / 2) throw NyquistError("winding_number: phase step exceeds pi/2, increase n_samples");
  w.raw = total / two_pi;
  w.W = int(std::lround(w.raw));
  w.snap_error = std::abs(w.raw - w.W);
  return w;
}

Mat2c bloch_beta(const RibbonModel& model, cplx beta) {
  const int L = model.chains.L;
  Mat2c h = Mat2c::Zero();
  for (int j = -(L - 1); j <= L - 1; ++j) h += model.block(j) * std::pow(beta, j);
  return h;
}

BetaSolutionSet characteristic_roots(const RibbonModel& model, cplx E) {
  const int L = model.chains.L;
  const int d = 2 * (L - 1);
  const int N = 2 * d;
  // sum_i C_i beta^i v = 0 with C_i = T_{i-(L-1)} - E delta_{i,L-1}, i = 0..d
  auto C = [&](int i) {
    Mat2c c = model.block(i - (L - 1));
    if (i == L - 1) c -= E * Mat2c::Identity();
    return c;
  };
  MatXc A = MatXc::Zero(N, N), B = MatXc::Identity(N, N);
  for (int i = 0; i + 1 < d; ++i) A.block<2, 2>(2 * i, 2 * (i + 1)) = Mat2c::Identity();
  for (int i = 0; i < d; ++i) A.block<2, 2>(2 * (d - 1), 2 * i) = -C(i);
  B.block<2, 2>(2 * (d - 1), 2 * (d - 1)) = C(d);

  const GenEigResult g = geneig(A, B);
  BetaSolutionSet out;
  out.E = E;
  std::vector<std::pair<cplx, Eigen::Vector2cd>> roots;
  for (int i = 0; i < N; ++i) {
    if (std::abs(g.beta[i]) <= 1e-14 * std::abs(g.alpha[i])) {
      ++out.infinite;
      continue;
    }
    const cplx b = g.alpha[i] / g.beta[i];
    // blocks are v_0 beta^i; take the best-scaled one
    int best = 0;
    double bn = -1;
    for (int blk = 0; blk < d; ++blk) {
      const double nn = g.vectors.col(i).segment<2>(2 * blk).norm();
      if (nn > bn) {
        bn = nn;
        best = blk;
      }
    }
    Eigen::Vector2cd a = g.vectors.col(i).segment<2>(2 * best);
    a.normalize();
    roots.emplace_back(b, a);
  }
  std::stable_sort(roots.begin(), roots.end(),
                   [](const auto& x, const auto& y) { return std::abs(x.first) < std::abs(y.first); });
  out.roots.resize(Eigen::Index(roots.size()));
  for (std::size_t i = 0; i < roots.size(); ++i) {
    out.roots[Eigen::Index(i)] = roots[i].first;
    out.A.push_back(roots[i].second);
  }
  return out;
}

Reconstruction reconstruct_eigenstate(const BetaSolutionSet& rs, const VecXc& state, int L) {
  if (state.size() != 2 * L) throw DomainError("reconstruct_eigenstate: state size must be 2L");
  const int m_lo = -L + 2, m_hi = 2 * L - 1;
  const int rows = 2 * (m_hi - m_lo + 1);
  const int nc = int(rs.roots.size());
  MatXc M(rows, nc);
  VecXc rhs = VecXc::Zero(rows);
  auto on_ribbon = [&](int m) { return m >= 1 && m <= L; };
  for (int m = m_lo; m <= m_hi; ++m)
    if (on_ribbon(m)) rhs.segment<2>(2 * (m - m_lo)) = state.segment<2>(2 * (m - 1));
  for (int c = 0; c < nc; ++c) {
    const cplx b = rs.roots[c];
    const int ref = std::abs(b) > 1.0 ? m_hi : m_lo;
    for (int m = m_lo; m <= m_hi; ++m) M.block<2, 1>(2 * (m - m_lo), c) = std::pow(b, m - ref) * rs.A[std::size_t(c)];
  }
  Eigen::ColPivHouseholderQR<MatXc> qr(M);
  Reconstruction r;
  r.coefficients = qr.solve(rhs);
  {
    const auto R = qr.matrixR();
    const Eigen::Index n = std::min(R.rows(), R.cols());
    double rmax = 0, rmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) {
      rmax = std::max(rmax, std::abs(R(i, i)));
      rmin = std::min(rmin, std::abs(R(i, i)));
    }
    r.condition = rmin > 0 ? rmax / rmin : std::numeric_limits<double>::infinity();
  }
  const VecXc fit = M * r.coefficients;
  const double sn = state.norm();
  r.residual = (fit - rhs).norm() / sn;
  double bnd = 0;
  VecXc partial = VecXc::Zero(rows);
  for (int c = 0; c < nc; ++c)
    if (std::abs(rs.roots[c]) < 1.0) partial += M.col(c) * r.coefficients[c];
  double pr = 0;
  r.weights.assign(std::size_t(nc), 0.0);
  for (int m = m_lo; m <= m_hi; ++m) {
    const int o = 2 * (m - m_lo);
    if (on_ribbon(m)) {
      pr += (partial.segment<2>(o) - rhs.segment<2>(o)).squaredNorm();
      for (int c = 0; c < nc; ++c)
        r.weights[std::size_t(c)] += std::norm(r.coefficients[c]) * M.block<2, 1>(o, c).squaredNorm();
    } else {
      bnd += fit.segment<2>(o).squaredNorm();
    }
  }
  for (double& w : r.weights) w = std::sqrt(w);
  r.boundary_residual = std::sqrt(bnd) / sn;
  r.partial_residual = std::sqrt(pr) / sn;
  return r;
}

LengthFit fit_characteristic_length(const std::vector<double>& p, double r2_min) {
  LengthFit out;
  const int L = int(p.size());
  if (L < 8) throw DomainError("fit_characteristic_length: profile too short");
  const double pmax = *std::max_element(p.begin(), p.end());
  std::vector<double> y(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) y[std::size_t(i)] = std::log(std::max(p[std::size_t(i)], 1e-300 * pmax + 1e-300));
  const int wmin = std::max(5, L / 10);
  int best_len = 0;
  for (int s = 0; s + wmin <= L; ++s) {
    double Sx = 0, Sy = 0, Sxx = 0, Sxy = 0, Syy = 0;
    for (int e = s; e < L; ++e) {
      const double x = e, v = y[std::size_t(e)];
      Sx += x;
      Sy += v;
      Sxx += x * x;
      Sxy += x * v;
      Syy += v * v;
      const int n = e - s + 1;
      if (n < wmin || n <= best_len) continue;
      const double vx = Sxx - Sx * Sx / n, vy = Syy - Sy * Sy / n, cxy = Sxy - Sx * Sy / n;
      if (vx <= 0 || vy <= 0) continue;
      const double r2 = cxy * cxy / (vx * vy);
      const double slope = cxy / vx;
      // require at least one e-fold of decay across the window
      if (r2 >= r2_min && std::abs(slope) * (n - 1) >= 1.0) {
        best_len = n;
        out.start = s;
        out.end = e + 1;
        out.r2 = r2;
        out.xi = 1.0 / std::abs(slope);
      }
    }
  }
  if (best_len == 0) return out;
  out.delocalized = false;
  out.xi_over_L = out.xi / L;
  return out;
}

}  // namespace nhm
