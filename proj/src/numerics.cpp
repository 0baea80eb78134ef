#include "kann/numerics.hpp"

#include "kann/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace kann {

void require_finite(const RealMatrix &m, std::string_view what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) {
        std::ostringstream msg;
        msg << what << ": non-finite value " << m(i, j) << " at (" << i << ", " << j << ")";
        throw ValidationError(msg.str());
      }
    }
  }
}

SvdResult svd(const RealMatrix &m) {
  if (m.rows() < 1 || m.cols() < 1)
    throw ArgumentError("svd: matrix must have at least one row and one column");
  require_finite(m, "svd");

  // BDCSVD delegates to one-sided Jacobi below 16 columns, which is the
  // common case for hidden-state stacks and is unconditionally convergent.
  Eigen::BDCSVD<RealMatrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success)
    throw ConvergenceError("svd: divide-and-conquer SVD did not converge within its "
                           "internal deflation iteration cap");
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

bool eigen_order_less(const Complex &a, const Complex &b) {
  const double ma = std::abs(a);
  const double mb = std::abs(b);
  if (ma != mb)
    return ma > mb;
  if (a.imag() != b.imag())
    return a.imag() > b.imag();
  return a.real() > b.real();
}

double condition_number(const ComplexMatrix &m) {
  if (m.size() == 0)
    return 1.0;
  Eigen::JacobiSVD<ComplexMatrix> solver(m);
  const auto &sv = solver.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (smin == 0.0 || !std::isfinite(smin))
    return std::numeric_limits<double>::infinity();
  return smax / smin;
}

EigResult eig(const RealMatrix &a, const Tolerances &tol) {
  if (a.rows() != a.cols())
    throw DimensionError("eig: matrix is " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", expected square");
  require_finite(a, "eig");

  const Eigen::Index n = a.rows();
  EigResult out;
  if (n == 0)
    return out;

  const Eigen::Index cap = tol.eig_iterations_per_row * n;
  Eigen::EigenSolver<RealMatrix> solver;
  solver.setMaxIterations(cap);
  solver.compute(a, true);
  if (solver.info() != Eigen::Success)
    throw ConvergenceError("eig: real Schur reduction did not converge within " +
                           std::to_string(cap) + " QR iterations");

  const ComplexVector values = solver.eigenvalues();
  const ComplexMatrix vectors = solver.eigenvectors();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) {
    return eigen_order_less(values(i), values(j));
  });

  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto src = order[static_cast<std::size_t>(j)];
    out.values(j) = values(src);
    out.vectors.col(j) = vectors.col(src);
  }
  out.condition = condition_number(out.vectors);
  out.defective = !(out.condition <= tol.defective_condition);
  return out;
}

RealMatrix lstsq(const RealMatrix &x, const RealMatrix &y, const Tolerances &tol) {
  if (x.rows() == 0 || x.cols() == 0 || y.cols() == 0)
    throw ArgumentError("lstsq: empty operand");
  if (x.rows() != y.rows())
    throw DimensionError("lstsq: X has " + std::to_string(x.rows()) + " rows but Y has " +
                         std::to_string(y.rows()));
  require_finite(y, "lstsq");

  const SvdResult f = svd(x);
  const double smax = f.singular_values(0);
  const double cutoff = tol.rcond * smax;

  RealVector inv_sv = RealVector::Zero(f.singular_values.size());
  for (Eigen::Index i = 0; i < inv_sv.size(); ++i) {
    const double s = f.singular_values(i);
    if (s > cutoff && s > 0.0)
      inv_sv(i) = 1.0 / s;
  }
  return f.right_vectors * inv_sv.asDiagonal() * (f.left_vectors.transpose() * y);
}

ComplexMatrix inverse(const ComplexMatrix &m, const Tolerances &tol) {
  if (m.rows() != m.cols())
    throw DimensionError("inverse: matrix is " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected square");
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if (!std::isfinite(m.data()[i].real()) || !std::isfinite(m.data()[i].imag()))
      throw ValidationError("inverse: non-finite entry");
  }
  const double cond = condition_number(m);
  if (!(cond < tol.max_inverse_condition)) {
    std::ostringstream msg;
    msg << "inverse: matrix is singular or ill-conditioned (condition estimate " << cond
        << ", limit " << tol.max_inverse_condition << ")";
    throw ConditionError(cond, msg.str());
  }
  return m.partialPivLu().inverse();
}

} // namespace kann
