#pragma once

#include <vector>

#include "nhm/core.hpp"

namespace nhm {

struct EigResult {
  VecXc values;
  MatXc vectors;  // columns are unit-norm right eigenvectors
};

// General complex eigendecomposition (LAPACK zgeev, with balancing).
EigResult eig(const MatXc& A, bool want_vectors = true);

struct GenEigResult {
  VecXc alpha, beta;  // eigenvalue alpha / beta, beta = 0 for infinite ones
  MatXc vectors;
};

// Generalized problem A v = lambda B v (LAPACK zggev).
GenEigResult geneig(const MatXc& A, const MatXc& B);

// Dense LU factorization (LAPACK zgetrf), reusable across right-hand sides.
class LuFactor {
 public:
  explicit LuFactor(const MatXc& A);
  MatXc solve(const MatXc& B) const;
  Eigen::Index size() const { return lu_.rows(); }

 private:
  MatXc lu_;
  std::vector<int> piv_;
};

// Order of indices sorting values by ascending imaginary part (ties by real part).
std::vector<int> order_by_imag(const VecXc& values);

// Symmetric Hausdorff distance between two point sets in the complex plane.
double hausdorff(const VecXc& a, const VecXc& b);

}  // namespace nhm
