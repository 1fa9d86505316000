#include "nhm/linalg.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace nhm {

EigResult eig(const MatXc& A, bool want_vectors) {
  if (A.rows() != A.cols()) throw DomainError("eig: matrix must be square");
  const lapack_int n = lapack_int(A.rows());
  EigResult r;
  r.values.resize(n);
  if (n == 0) return r;
  MatXc work = A;
  MatXc vr(want_vectors ? n : 1, want_vectors ? n : 1);
  cplx dummy;
  const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', want_vectors ? 'V' : 'N', n, work.data(), n,
                                        r.values.data(), &dummy, 1, vr.data(), want_vectors ? n : 1);
  if (info != 0) throw ConvergenceError("eig: zgeev failed with info = " + std::to_string(info));
  if (want_vectors) {
    r.vectors = std::move(vr);
    for (lapack_int j = 0; j < n; ++j) r.vectors.col(j).normalize();
  }
  return r;
}

GenEigResult geneig(const MatXc& A, const MatXc& B) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || B.cols() != A.cols())
    throw DomainError("geneig: matrices must be square and of equal size");
  const lapack_int n = lapack_int(A.rows());
  GenEigResult r;
  r.alpha.resize(n);
  r.beta.resize(n);
  r.vectors.resize(n, n);
  if (n == 0) return r;
  MatXc a = A, b = B;
  cplx dummy;
  const lapack_int info = LAPACKE_zggev(LAPACK_COL_MAJOR, 'N', 'V', n, a.data(), n, b.data(), n, r.alpha.data(),
                                        r.beta.data(), &dummy, 1, r.vectors.data(), n);
  if (info != 0) throw ConvergenceError("geneig: zggev failed with info = " + std::to_string(info));
  for (lapack_int j = 0; j < n; ++j) r.vectors.col(j).normalize();
  return r;
}

LuFactor::LuFactor(const MatXc& A) : lu_(A) {
  if (A.rows() != A.cols()) throw DomainError("LuFactor: matrix must be square");
  const lapack_int n = lapack_int(A.rows());
  piv_.resize(std::size_t(n));
  if (n == 0) return;
  const lapack_int info = LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n, lu_.data(), n, piv_.data());
  if (info > 0) throw ConvergenceError("LuFactor: matrix is exactly singular");
  if (info < 0) throw ConvergenceError("LuFactor: zgetrf failed with info = " + std::to_string(info));
}

MatXc LuFactor::solve(const MatXc& B) const {
  if (B.rows() != lu_.rows()) throw DomainError("LuFactor::solve: size mismatch");
  MatXc X = B;
  const lapack_int n = lapack_int(lu_.rows());
  if (n == 0 || X.cols() == 0) return X;
  const lapack_int info = LAPACKE_zgetrs(LAPACK_COL_MAJOR, 'N', n, lapack_int(X.cols()), lu_.data(), n,
                                         piv_.data(), X.data(), n);
  if (info != 0) throw ConvergenceError("LuFactor::solve: zgetrs failed with info = " + std::to_string(info));
  return X;
}

std::vector<int> order_by_imag(const VecXc& v) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (v[a].imag() != v[b].imag()) return v[a].imag() < v[b].imag();
    return v[a].real() < v[b].real();
  });
  return idx;
}

double hausdorff(const VecXc& a, const VecXc& b) {
  auto directed = [](const VecXc& x, const VecXc& y) {
    double h = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < y.size(); ++j) best = std::min(best, std::abs(x[i] - y[j]));
      h = std::max(h, best);
    }
    return h;
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace nhm
