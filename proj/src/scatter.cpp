#include "nhm/scatter.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

namespace nhm {

namespace {

double wavelength(double q) { return two_pi / q; }

// p = kappa (delta - H)^-1 E
double kappa(double q) {
  const double lam = wavelength(q);
  return -3.0 * lam * lam * lam / (8.0 * pi * pi);
}

Mat2c zeeman(double muB) {
  Mat2c z;
  z << 0.0, -I1 * muB, I1 * muB, 0.0;
  return z;
}

Vec3 centroid(const DipoleScene& s) {
  Vec3 c = Vec3::Zero();
  for (const Vec3& r : s.positions) c += r;
  return c / double(s.positions.size());
}

Vec3 incidence_direction(const Vec2& k_par, double q) {
  const double k2 = k_par.squaredNorm();
  if (!(k2 < q * q)) throw DomainError("in-plane momentum must lie inside the light cone");
  return Vec3(k_par.x(), k_par.y(), std::sqrt(q * q - k2)) / q;
}

void check_single_order(const Lattice2D& lat, const Vec2& k_par, double q) {
  const ReciprocalBasis rb = reciprocal_basis(lat);
  const double bmin = std::min(rb.b1.norm(), rb.b2.norm());
  const int span = int(std::ceil(2.0 * q / bmin)) + 1;
  for (int m = -span; m <= span; ++m)
    for (int n = -span; n <= span; ++n) {
      if (m == 0 && n == 0) continue;
      if ((m * rb.b1 + n * rb.b2 + k_par).norm() < q)
        throw DomainError("multiple diffraction orders propagate at this incidence");
    }
}

}  // namespace

void validate(const DipoleScene& s) {
  if (s.positions.empty()) throw DomainError("scene has no atoms");
  if (s.pol_dof != 2 && s.pol_dof != 3) throw DomainError("pol_dof must be 2 or 3");
  if (!(s.q > 0)) throw DomainError("q must be positive");
  for (const Vec3& r : s.positions)
    if (r.z() != 0.0) throw DomainError("atoms must lie in the plane z = 0");
  std::vector<Vec3> sorted = s.positions;
  std::sort(sorted.begin(), sorted.end(), [](const Vec3& a, const Vec3& b) { return a.x() < b.x(); });
  for (std::size_t i = 0; i < sorted.size(); ++i)
    for (std::size_t j = i + 1; j < sorted.size() && sorted[j].x() - sorted[i].x() < 1e-12; ++j)
      if ((sorted[j] - sorted[i]).norm() < 1e-12) throw DomainError("two atoms share a position");
}

DipoleScene array_scene(const Lattice2D& lat, int Lx, int Ly, Boundary shape) {
  validate(lat);
  if (Lx < 1 || Ly < 1) throw DomainError("array dimensions must be positive");
  if (!lat.offsets.empty()) throw DomainError("array_scene expects a Bravais lattice");
  DipoleScene s;
  s.lattice = lat;
  s.a = lat.a2.norm();
  s.Lx = Lx;
  s.Ly = Ly;
  const Vec2 b2 = shape == Boundary::rectangle ? lat.a2 : Vec2(lat.a1 + lat.a2);
  s.positions.reserve(std::size_t(Lx) * std::size_t(Ly));
  for (int n = 0; n < Ly; ++n)
    for (int m = 0; m < Lx; ++m) {
      const Vec2 r = double(m) * lat.a1 + double(n) * b2;
      s.positions.emplace_back(r.x(), r.y(), 0.0);
    }
  return s;
}

cplx bare_polarizability(double delta) { return -3.0 / (4.0 * pi * pi) * 0.5 / (delta + 0.5 * I1); }

MatXc interaction_hamiltonian(const DipoleScene& s, Exec exec) {
  validate(s);
  const int d = s.pol_dof;
  const int N = int(s.positions.size());
  const double c = coupling_prefactor(s.q);
  MatXc H(d * N, d * N);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
  for (int m = 0; m < N; ++m) {
    for (int n = 0; n < N; ++n) {
      if (m == n) continue;
      const Tensor3 G = green_real(s.positions[std::size_t(m)] - s.positions[std::size_t(n)], s.q);
      H.block(d * m, d * n, d, d) = -c * G.topLeftCorner(d, d);
    }
    auto D = H.block(d * m, d * m, d, d);
    D.setZero();
    D.diagonal().setConstant(-0.5 * I1);
    D.topLeftCorner<2, 2>() += zeeman(s.muB);
    if (d == 3) D(2, 2) += s.z_detuning;
  }
  return H;
}

MatXc inverse_polarizability_matrix(const DipoleScene& s, double delta) {
  validate(s);
  const int d = s.pol_dof;
  const int N = int(s.positions.size());
  const double lam = wavelength(s.q);
  const double q2 = s.q * s.q;
  // alpha^-1 = -(8 pi^2 / 3 lambda^3) (delta + i/2); diagonal shifts detune the transition
  const double f = -8.0 * pi * pi / (3.0 * lam * lam * lam);
  MatXc M(d * N, d * N);
  for (int m = 0; m < N; ++m)
    for (int n = 0; n < N; ++n) {
      if (m == n) {
        Eigen::MatrixXcd D = Eigen::MatrixXcd::Identity(d, d) * (f * (delta + 0.5 * I1));
        D.topLeftCorner<2, 2>() -= f * zeeman(s.muB);
        if (d == 3) D(2, 2) -= f * s.z_detuning;
        M.block(d * m, d * m, d, d) = D;
      } else {
        const Tensor3 G = green_real(s.positions[std::size_t(m)] - s.positions[std::size_t(n)], s.q);
        M.block(d * m, d * n, d, d) = -q2 * G.topLeftCorner(d, d);
      }
    }
  return M;
}

CVec3 Drive::field(const Vec3& r) const {
  if (kind == DriveKind::plane_wave) return amplitude * std::exp(I1 * q * k_hat.dot(r)) * pol;
  const Vec3 d = r - focus;
  const double zeta = k_hat.dot(d);
  const double rho2 = std::max(0.0, d.squaredNorm() - zeta * zeta);
  const double zR = 0.5 * q * w0 * w0;
  const cplx qt(zeta, -zR);
  const cplx u = (-I1 * zR / qt) * std::exp(I1 * q * zeta) * std::exp(I1 * q * rho2 / (2.0 * qt));
  return amplitude * u * pol;
}

Drive plane_wave(const Vec3& k_hat, const CVec3& pol, double q) {
  Drive d;
  d.kind = DriveKind::plane_wave;
  d.k_hat = k_hat.normalized();
  d.pol = pol;
  d.q = q;
  if (std::abs(pol.dot(d.k_hat.cast<cplx>())) > 1e-12 * pol.norm())
    throw DomainError("plane_wave: polarization must be transverse");
  return d;
}

Drive gaussian_beam(const Vec3& k_hat, const CVec3& pol, const Vec3& focus, double w0, double q) {
  if (!(w0 > 0)) throw DomainError("gaussian_beam: waist must be positive");
  Drive d = plane_wave(k_hat, pol, q);
  d.kind = DriveKind::gaussian_beam;
  d.focus = focus;
  d.w0 = w0;
  return d;
}

DipoleSolver::DipoleSolver(DipoleScene scene, Exec exec) : scene_(std::move(scene)) {
  H_ = interaction_hamiltonian(scene_, exec);
}

const LuFactor& DipoleSolver::factor(double delta) {
  auto it = lu_.find(delta);
  if (it != lu_.end()) return *it->second;
  MatXc A = -H_;
  A.diagonal().array() += delta;
  auto res = lu_.emplace(delta, std::make_unique<LuFactor>(A));
  return *res.first->second;
}

std::vector<SolvedDipoles> DipoleSolver::solve(const std::vector<Drive>& drives, double delta) {
  const int d = scene_.pol_dof;
  const int N = int(scene_.positions.size());
  MatXc rhs(d * N, Eigen::Index(drives.size()));
  for (std::size_t j = 0; j < drives.size(); ++j)
    for (int m = 0; m < N; ++m) {
      const CVec3 E = drives[j].field(scene_.positions[std::size_t(m)]);
      for (int mu = 0; mu < d; ++mu) rhs(d * m + mu, Eigen::Index(j)) = E[mu];
    }
  const MatXc x = factor(delta).solve(rhs);
  std::vector<SolvedDipoles> out(drives.size());
  const double kap = kappa(scene_.q);
  for (std::size_t j = 0; j < drives.size(); ++j) {
    const Eigen::Index c = Eigen::Index(j);
    VecXc Ax = delta * x.col(c) - H_ * x.col(c);
    const double rn = rhs.col(c).norm();
    out[j].residual = rn > 0 ? (Ax - rhs.col(c)).norm() / rn : 0.0;
    if (!(out[j].residual < 1e-10)) throw ConvergenceError("DipoleSolver: linear solve residual too large");
    out[j].delta = delta;
    out[j].p.assign(std::size_t(N), CVec3::Zero());
    for (int m = 0; m < N; ++m)
      for (int mu = 0; mu < d; ++mu) out[j].p[std::size_t(m)][mu] = kap * x(d * m + mu, c);
  }
  return out;
}

SolvedDipoles DipoleSolver::solve(const Drive& drive, double delta) { return solve(std::vector<Drive>{drive}, delta)[0]; }

FieldValue field_at(const DipoleScene& s, const SolvedDipoles& d, const Drive& drive, const Vec3& r) {
  FieldValue f;
  f.scattered.setZero();
  for (std::size_t m = 0; m < s.positions.size(); ++m) {
    if ((r - s.positions[m]).norm() < 1e-12) throw DomainError("field_at: evaluation point on an atom");
    f.scattered += s.q * s.q * green_real(r - s.positions[m], s.q) * d.p[m];
  }
  f.total = f.scattered + drive.field(r);
  return f;
}

ScatterMatrix farfield_scatter_matrix(DipoleSolver& solver, const Vec2& k_par, double delta,
                                      const ScatterOptions& opt) {
  const DipoleScene& s = solver.scene();
  if (!(s.a > 0)) throw DomainError("farfield_scatter_matrix: scene needs a lattice constant");
  if (s.lattice) check_single_order(*s.lattice, k_par, s.q);
  const Vec3 kh = incidence_direction(k_par, s.q);
  ScatterMatrix out;
  out.delta = delta;
  out.basis = polarization_basis(kh);
  const Vec3 focus = centroid(s);
  out.probe = focus + (opt.z_over_a * s.a / kh.z()) * kh;
  const double w0 = opt.w0_over_a * s.a;
  const Vec3 pols[2] = {out.basis.e_p, out.basis.e_s};
  std::vector<Drive> drives;
  for (const Vec3& e : pols) drives.push_back(gaussian_beam(kh, e.cast<cplx>(), focus, w0, s.q));
  const std::vector<SolvedDipoles> sol = solver.solve(drives, delta);
  out.S.setZero();
  for (int b = 0; b < 2; ++b) {
    const CVec3 Einc = drives[std::size_t(b)].field(out.probe);
    const cplx A = pols[b].cast<cplx>().dot(Einc);
    const CVec3 Esc = field_at(s, sol[std::size_t(b)], drives[std::size_t(b)], out.probe).scattered / A;
    for (int a = 0; a < 2; ++a) out.S_ps(a, b) = pols[a].cast<cplx>().dot(Esc);
    out.S += Esc * pols[b].transpose().cast<cplx>();
  }
  return out;
}

ScatterMatrix synthetic_scatter_matrix(const Lattice2D& lat, const Vec2& k_par, double delta, double q,
                                       const EMOptions& em, double muB, bool include_z, double z_detuning,
                                       double z_probe) {
  const Vec3 kh = incidence_direction(k_par, q);
  ScatterMatrix out;
  out.delta = delta;
  out.basis = polarization_basis(kh);
  out.probe = Vec3(0.0, 0.0, z_probe);
  Tensor3 H = heff_bravais(lat, k_par, q, em);
  H.topLeftCorner<2, 2>() += zeeman(muB);
  H(2, 2) += z_detuning;
  Tensor3 Gp = Tensor3::Zero();
  if (include_z) {
    Tensor3 A = delta * Tensor3::Identity() - H;
    Gp = kappa(q) * A.inverse();
  } else {
    Mat2c A = delta * Mat2c::Identity() - H.topLeftCorner<2, 2>();
    Gp.topLeftCorner<2, 2>() = kappa(q) * A.inverse();
  }
  const Tensor3 g = green_farfield_fourier(q * kh, out.probe, reciprocal_basis(lat), q);
  out.S = g * Gp;
  const Vec3 pols[2] = {out.basis.e_p, out.basis.e_s};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      out.S_ps(a, b) = pols[a].cast<cplx>().dot(out.S * pols[b].cast<cplx>());
  return out;
}

Mat2c inplane_projection(const ScatterMatrix& s) {
  Eigen::Matrix2d U;
  U << s.basis.e_p.x(), s.basis.e_s.x(), s.basis.e_p.y(), s.basis.e_s.y();
  const Eigen::Matrix2d Ui = U.inverse();
  return Ui.transpose().cast<cplx>() * s.S_ps * Ui.cast<cplx>();
}

ExtractedKernel extract_heff(const ScatterMatrix& s1, const ScatterMatrix& s2, const Vec2& k_par) {
  if (s1.delta == s2.delta) throw DomainError("extract_heff: detunings must differ");
  const Mat2c P1 = inplane_projection(s1), P2 = inplane_projection(s2);
  const double tiny = 1e-300;
  if (std::abs(P1.determinant()) < tiny || std::abs(P2.determinant()) < tiny)
    throw SingularityError("extract_heff: singular projected scattering matrix");
  const Mat2c P1i = P1.inverse(), P2i = P2.inverse();
  const Mat2c D = P1i - P2i;
  if (std::abs(D.determinant()) < tiny) throw SingularityError("extract_heff: detuning difference is singular");
  ExtractedKernel k;
  k.delta1 = s1.delta;
  k.delta2 = s2.delta;
  k.k_par = k_par;
  k.H = s1.delta * Mat2c::Identity() - (s1.delta - s2.delta) * P1i * D.inverse();
  const BandPoint bp = diagonalize2(k.H);
  k.E1 = bp.E1;
  k.E2 = bp.E2;
  return k;
}

ExtractedKernel extract_heff(DipoleSolver& solver, const Vec2& k_par, double delta1, double delta2,
                             const ScatterOptions& opt) {
  const ScatterMatrix s1 = farfield_scatter_matrix(solver, k_par, delta1, opt);
  const ScatterMatrix s2 = farfield_scatter_matrix(solver, k_par, delta2, opt);
  return extract_heff(s1, s2, k_par);
}

BandGrid extracted_grid(DipoleSolver& solver, const Window& win, int nx, int ny, double delta1, double delta2,
                        const ScatterOptions& opt) {
  if (nx < 2 || ny < 2) throw DomainError("extracted_grid: need at least 2 x 2 nodes");
  BandGrid g;
  g.win = win;
  g.nx = nx;
  g.ny = ny;
  g.h.assign(std::size_t(nx) * std::size_t(ny), Mat2c::Zero());
  g.valid.assign(g.h.size(), 0);
  const double q = solver.scene().q;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Vec2 k = g.node(i, j);
      if (!(k.norm() < q * (1.0 - 1e-6))) continue;
      try {
        g.h[std::size_t(g.idx(i, j))] = to_circular(extract_heff(solver, k, delta1, delta2, opt).H);
        g.valid[std::size_t(g.idx(i, j))] = 1;
      } catch (const DomainError&) {
      }
    }
  return g;
}

Vorticity extracted_vorticity(DipoleSolver& solver, const std::vector<Vec2>& loop, double delta1, double delta2,
                              const ScatterOptions& opt) {
  std::vector<Mat2c> ks;
  ks.reserve(loop.size());
  for (const Vec2& k : loop) ks.push_back(extract_heff(solver, k, delta1, delta2, opt).H);
  return vorticity_from_kernels(ks);
}

EnergyBalance energy_balance(const DipoleScene& s, const SolvedDipoles& d, const Drive& drive, int n_phi) {
  if (drive.kind != DriveKind::plane_wave) throw DomainError("energy_balance: plane-wave drive required");
  if (!s.lattice) throw DomainError("energy_balance: scene needs its lattice for the aperture");
  if (n_phi < 4) throw DomainError("energy_balance: quadrature too coarse");
  const double q = s.q;
  EnergyBalance eb;
  const double I0 = 0.5 * drive.pol.squaredNorm() * std::norm(drive.amplitude);
  eb.P_inc = I0 * std::abs(drive.k_hat.z()) * double(s.positions.size()) * s.lattice->cell_area();
  cplx ext = 0;
  for (std::size_t m = 0; m < s.positions.size(); ++m) ext += drive.field(s.positions[m]).dot(d.p[m]);
  eb.P_ext = 0.5 * q * ext.imag();

  // 96-point Gauss-Legendre in cos(theta) on each hemisphere, trapezoid in phi
  using GL = boost::math::quadrature::gauss<double, 96>;
  std::vector<double> x, w;
  for (std::size_t i = 0; i < GL::abscissa().size(); ++i)
    for (double sg : {-1.0, 1.0}) {
      x.push_back(sg * GL::abscissa()[i]);
      w.push_back(GL::weights()[i]);
    }
  const int nh = int(x.size());
  const double pref = 0.5 * std::pow(q, 4) / (16.0 * pi * pi);
  double back = 0, fwd = 0;
#pragma omp parallel for collapse(2) reduction(+ : back, fwd) schedule(dynamic)
  for (int hemi = 0; hemi < 2; ++hemi)
    for (int it = 0; it < nh; ++it) {
      // map [-1, 1] onto [0, 1] or [-1, 0]
      const double u = 0.5 * (x[std::size_t(it)] + 1.0);
      const double ct = hemi == 0 ? u : -u;
      const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      double acc = 0;
      for (int ip = 0; ip < n_phi; ++ip) {
        const double ph = two_pi * ip / n_phi;
        const Vec3 rh(st * std::cos(ph), st * std::sin(ph), ct);
        CVec3 F = CVec3::Zero();
        for (std::size_t m = 0; m < s.positions.size(); ++m)
          F += std::exp(-I1 * q * rh.dot(s.positions[m])) * d.p[m];
        const CVec3 Ft = F - rh.cast<cplx>() * rh.cast<cplx>().dot(F);
        acc += Ft.squaredNorm();
      }
      const double val = pref * acc * (two_pi / n_phi) * 0.5 * w[std::size_t(it)];
      if (hemi == 0)
        fwd += val;
      else
        back += val;
    }
  // forward is along the drive's propagation side
  if (drive.k_hat.z() < 0) std::swap(fwd, back);
  eb.P_fwd = fwd;
  eb.P_back = back;
  eb.R = back / eb.P_inc;
  eb.T = (eb.P_inc - eb.P_ext + fwd) / eb.P_inc;
  return eb;
}

FiniteModes finite_array_modes(const DipoleScene& s0, int N_prime, int frame) {
  DipoleScene s = s0;
  s.pol_dof = 2;
  validate(s);
  const int N = int(s.positions.size());
  const MatXc H = interaction_hamiltonian(s);
  const EigResult e = eig(H, true);
  const std::vector<int> idx = order_by_imag(e.values);
  FiniteModes fm;
  fm.energies.resize(e.values.size());
  fm.states.resize(e.vectors.rows(), e.vectors.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    fm.energies[Eigen::Index(i)] = e.values[idx[i]];
    fm.states.col(Eigen::Index(i)) = e.vectors.col(idx[i]);
  }
  if (N_prime <= 0) {
    if (!s.lattice) throw DomainError("finite_array_modes: N' rule needs the lattice");
    const double lam = wavelength(s.q);
    const double a = s.a / lam;
    N_prime = int(std::lround(pi * a * a / s.lattice->eta() * 2.0 * N));
  }
  N_prime = std::clamp(N_prime, 1, 2 * N);
  fm.N_prime = N_prime;
  fm.S_NH.assign(std::size_t(N), 0.0);
  fm.boundary.assign(std::size_t(2 * N), 0.0);
  const int Lx = s.Lx > 0 ? s.Lx : N;
  for (int i = 0; i < 2 * N; ++i) {
    double edge = 0, tot = 0;
    for (int m = 0; m < N; ++m) {
      const double pm = std::norm(fm.states(2 * m, i)) + std::norm(fm.states(2 * m + 1, i));
      tot += pm;
      const int col = m % Lx;
      if (col < frame || col >= Lx - frame) edge += pm;
      if (i < N_prime) fm.S_NH[std::size_t(m)] += pm / N_prime;
    }
    fm.boundary[std::size_t(i)] = tot > 0 ? edge / tot : 0.0;
  }
  return fm;
}

}  // namespace nhm
