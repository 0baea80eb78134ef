#pragma once

// Dense linear algebra kernels. Everything here is a pure function of its
// inputs; results own their storage.

#include <Eigen/Dense>

#include <complex>
#include <string_view>

namespace kann {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Numerical thresholds shared by the kernels. The defaults are the values
/// every other module assumes; pass a modified copy to override.
struct Tolerances {
  /// Relative singular-value cutoff for pseudoinverse solves.
  double rcond = 1e-12;
  /// Eigenvector matrices above this condition number are flagged defective.
  double defective_condition = 1e10;
  /// Refuse to invert matrices above this condition number.
  double max_inverse_condition = 1e12;
  /// QR sweeps allowed per row in the real Schur reduction.
  int eig_iterations_per_row = 40;
};

struct SvdResult {
  RealMatrix left_vectors;    // rows x p
  RealVector singular_values; // p, descending
  RealMatrix right_vectors;   // cols x p
};

struct EigResult {
  ComplexVector values;
  ComplexMatrix vectors; // right eigenvectors in columns, unit 2-norm
  double condition = 0;  // 2-norm condition number of `vectors`
  bool defective = false;
};

/// Thin SVD, p = min(rows, cols).
SvdResult svd(const RealMatrix &m);

/// Eigendecomposition of a general real square matrix. Values are sorted by
/// modulus descending, then imaginary part descending, then real part
/// descending. Vectors are permuted alongside.
EigResult eig(const RealMatrix &a, const Tolerances &tol = {});

/// Minimum-norm least-squares solution C of X C = Y via the SVD pseudoinverse.
RealMatrix lstsq(const RealMatrix &x, const RealMatrix &y, const Tolerances &tol = {});

/// Inverse of a square complex matrix; throws ConditionError when the
/// condition estimate reaches `tol.max_inverse_condition`.
ComplexMatrix inverse(const ComplexMatrix &m, const Tolerances &tol = {});

/// Ratio of extreme singular values (infinity for singular input).
double condition_number(const ComplexMatrix &m);

/// True when `a` sorts before `b` in the eigenvalue order used by eig().
bool eigen_order_less(const Complex &a, const Complex &b);

/// Throws ValidationError naming the first non-finite entry.
void require_finite(const RealMatrix &m, std::string_view what);

} // namespace kann
