#include "kann/spectral.hpp"

#include "kann/errors.hpp"
#include "kann/format.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace kann {
namespace {

constexpr double kNegligible = 1e-12;
constexpr double kImagTolerance = 1e-10;

void check_rank(const SpectralBasis &basis, const EigenSystem &eig, const char *who) {
  if (basis.rank() != eig.size())
    throw DimensionError(std::string(who) + ": basis rank " + std::to_string(basis.rank()) +
                         " does not match eigensystem size " + std::to_string(eig.size()));
}

bool is_real(const Complex &z) {
  return std::abs(z.imag()) <= 1e-14 * std::max(1.0, std::abs(z));
}

} // namespace

EigenSystem decompose(const RealMatrix &c, const Tolerances &tol) {
  EigResult er = eig(c, tol);

  EigenSystem out;
  out.lambdas = std::move(er.values);
  out.right = std::move(er.vectors);
  for (Eigen::Index j = 0; j < out.right.cols(); ++j) {
    auto col = out.right.col(j);
    const double norm = col.norm();
    if (norm > 0)
      col /= norm;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      const double mag = std::abs(col(i));
      if (mag > kNegligible) {
        col *= std::conj(col(i)) / mag;
        col(i) = Complex(col(i).real(), 0.0);
        break;
      }
    }
  }
  out.condition = condition_number(out.right);
  out.defective = er.defective || !(out.condition <= tol.defective_condition);
  try {
    out.left = inverse(out.right, tol);
  } catch (const ConditionError &) {
    out.left = out.right.completeOrthogonalDecomposition().pseudoInverse();
    out.defective = true;
  }
  return out;
}

EigenSystem decompose(const KoopmanOperator &op, const Tolerances &tol) {
  return decompose(op.matrix, tol);
}

ComplexMatrix eigen_coords(const RealMatrix &states, const SpectralBasis &basis,
                           const EigenSystem &eig) {
  check_rank(basis, eig, "eigen_coords");
  return project(states, basis).cast<Complex>() * eig.right;
}

double separability_residual(const HiddenStateTensor &h, const SpectralBasis &basis,
                             const EigenSystem &eig, bool include_padding) {
  check_rank(basis, eig, "separability_residual");
  const StatePairs pairs = flatten_valid(h, include_padding);
  const ComplexMatrix current = eigen_coords(pairs.current, basis, eig);
  const ComplexMatrix next = eigen_coords(pairs.next, basis, eig);
  const ComplexMatrix advanced = current * eig.lambdas.asDiagonal();

  double total = 0;
  for (Eigen::Index i = 0; i < next.rows(); ++i) {
    const double num = (next.row(i) - advanced.row(i)).norm();
    total += num / std::max(next.row(i).norm(), 1e-30);
  }
  return total / static_cast<double>(next.rows());
}

RealMatrix eigen_power_rollout(const RealMatrix &states, const SpectralBasis &basis,
                               const EigenSystem &eig, std::size_t power) {
  check_rank(basis, eig, "eigen_power_rollout");
  ComplexVector scale(eig.lambdas.size());
  for (Eigen::Index j = 0; j < scale.size(); ++j)
    scale(j) = std::pow(eig.lambdas(j), static_cast<double>(power));
  const ComplexMatrix coords = eigen_coords(states, basis, eig) * scale.asDiagonal();
  return lift((coords * eig.left).real(), basis);
}

// ---------------------------------------------------------------------------

std::string MemoryHorizon::to_string() const {
  switch (kind) {
  case Kind::Infinite:
    return "inf";
  case Kind::Unstable:
    return "unstable";
  case Kind::Finite:
    break;
  }
  return format_double(steps);
}

MemoryHorizon memory_horizon(const Complex &lambda, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ArgumentError("memory_horizon: epsilon must lie in (0, 1), got " + format_double(epsilon));
  const double modulus = std::abs(lambda);
  if (modulus <= 1e-300)
    return {MemoryHorizon::Kind::Finite, 0.0};
  if (std::abs(modulus - 1.0) <= kUnitCircleBand)
    return {MemoryHorizon::Kind::Infinite, 0.0};
  if (modulus > 1.0)
    return {MemoryHorizon::Kind::Unstable, 0.0};
  return {MemoryHorizon::Kind::Finite, std::log(epsilon) / std::log(modulus)};
}

// ---------------------------------------------------------------------------

std::optional<std::size_t> conjugate_partner(const EigenSystem &eig, std::size_t j) {
  if (j >= eig.size())
    throw ArgumentError("mode index " + std::to_string(j) + " out of range [0, " +
                        std::to_string(eig.size()) + ")");
  const Complex lambda = eig.lambdas(static_cast<Eigen::Index>(j));
  if (is_real(lambda))
    return std::nullopt;
  std::optional<std::size_t> best;
  double best_gap = 0;
  for (std::size_t m = 0; m < eig.size(); ++m) {
    if (m == j)
      continue;
    const double gap = std::abs(eig.lambdas(static_cast<Eigen::Index>(m)) - std::conj(lambda));
    if (!best || gap < best_gap) {
      best = m;
      best_gap = gap;
    }
  }
  if (!best || best_gap > 1e-8 * std::max(1.0, std::abs(lambda)))
    throw ValidationError("eigenvalue " + std::to_string(j) + " has no conjugate partner");
  return best;
}

ModeIndexSet conjugate_closure(const EigenSystem &eig, const ModeIndexSet &modes) {
  ModeIndexSet out;
  for (auto j : modes) {
    out.push_back(j);
    if (auto p = conjugate_partner(eig, j))
      out.push_back(*p);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool is_conjugate_closed(const EigenSystem &eig, const ModeIndexSet &modes) {
  ModeIndexSet sorted = modes;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  return conjugate_closure(eig, sorted) == sorted;
}

ModeIndexSet parse_modes(const std::string &text) {
  ModeIndexSet out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty())
      continue;
    if (item.find_first_not_of("0123456789") != std::string::npos)
      throw ArgumentError("invalid mode index '" + item + "'");
    out.push_back(static_cast<std::size_t>(std::stoull(item)));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string format_modes(const ModeIndexSet &modes) {
  std::string out;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (i)
      out += ',';
    out += std::to_string(modes[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------

double projection_magnitude(const RealVector &coeffs, const EigenSystem &eig, std::size_t j) {
  if (j >= eig.size())
    throw ArgumentError("projection_magnitude: index " + std::to_string(j) + " out of range [0, " +
                        std::to_string(eig.size()) + ")");
  if (static_cast<std::size_t>(coeffs.size()) != eig.size())
    throw DimensionError("projection_magnitude: coefficient vector has length " +
                         std::to_string(coeffs.size()) + ", expected " + std::to_string(eig.size()));
  return std::abs(coeffs.cast<Complex>().dot(eig.right.col(static_cast<Eigen::Index>(j))));
}

RealMatrix magnitude_series(const HiddenStateTensor &h, const SpectralBasis &basis,
                            const EigenSystem &eig, const ModeIndexSet &modes) {
  check_rank(basis, eig, "magnitude_series");
  for (auto j : modes)
    if (j >= eig.size())
      throw ArgumentError("magnitude_series: mode " + std::to_string(j) + " out of range");

  RealMatrix out = RealMatrix::Zero(static_cast<Eigen::Index>(h.samples()),
                                    static_cast<Eigen::Index>(h.steps()));
  if (modes.empty() || h.valid_count() == 0)
    return out;
  const ComplexMatrix coords = eigen_coords(h.valid_rows(), basis, eig);
  Eigen::Index row = 0;
  for (std::size_t s = 0; s < h.samples(); ++s) {
    for (std::size_t t = 0; t < h.valid_length(s); ++t, ++row) {
      double sum = 0;
      for (auto j : modes)
        sum += std::abs(coords(row, static_cast<Eigen::Index>(j)));
      out(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) = sum;
    }
  }
  return out;
}

RealMatrix subspace_projector(const SpectralBasis &basis, const EigenSystem &eig,
                              const ModeIndexSet &modes, ProjectorVariant variant) {
  check_rank(basis, eig, "subspace_projector");
  const ModeIndexSet closed = conjugate_closure(eig, modes);
  ModeIndexSet given = modes;
  std::sort(given.begin(), given.end());
  given.erase(std::unique(given.begin(), given.end()), given.end());
  if (closed != given)
    throw ModeClosureError(closed, "mode set {" + format_modes(given) +
                                       "} is not closed under conjugation; use {" +
                                       format_modes(closed) + "}");

  const auto r = static_cast<Eigen::Index>(eig.size());
  ComplexMatrix selected = ComplexMatrix::Zero(r, r);
  for (auto j : given) {
    const auto jj = static_cast<Eigen::Index>(j);
    selected += eig.right.col(jj) * eig.left.row(jj);
  }
  const double scale = std::max(1.0, selected.cwiseAbs().maxCoeff());
  const double imag = selected.imag().cwiseAbs().maxCoeff();
  if (imag > kImagTolerance * scale)
    throw ValidationError("subspace_projector: V_I U_I has imaginary part " + format_double(imag) +
                          " (eigenvector matrix condition " + format_double(eig.condition) + ")");

  const RealMatrix middle = variant == ProjectorVariant::Modulus ? RealMatrix(selected.cwiseAbs())
                                                                 : RealMatrix(selected.real());
  return basis.vectors * middle * basis.vectors.transpose();
}

RealMatrix apply_projector(const RealMatrix &states, const RealMatrix &projector,
                           const SpectralBasis &basis) {
  if (states.cols() != projector.rows() || projector.rows() != projector.cols())
    throw DimensionError("apply_projector: states have " + std::to_string(states.cols()) +
                         " columns, projector is " + std::to_string(projector.rows()) + "x" +
                         std::to_string(projector.cols()));
  if (!basis.mean)
    return states * projector;
  RealMatrix out = (states.rowwise() - basis.mean->transpose()) * projector;
  out.rowwise() += basis.mean->transpose();
  return out;
}

namespace {

ModeIndexSet take_closed(const EigenSystem &eig, const std::vector<std::size_t> &ranking,
                         std::size_t count) {
  if (count > eig.size())
    throw ArgumentError("dominant_modes: count " + std::to_string(count) + " exceeds rank " +
                        std::to_string(eig.size()));
  ModeIndexSet out;
  for (auto j : ranking) {
    if (out.size() >= count)
      break;
    if (std::find(out.begin(), out.end(), j) != out.end())
      continue;
    out.push_back(j);
    if (auto p = conjugate_partner(eig, j))
      if (std::find(out.begin(), out.end(), *p) == out.end())
        out.push_back(*p);
  }
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace

ModeIndexSet dominant_modes(const EigenSystem &eig, std::size_t count) {
  std::vector<std::size_t> ranking(eig.size());
  std::iota(ranking.begin(), ranking.end(), std::size_t{0});
  return take_closed(eig, ranking, count);
}

ModeIndexSet dominant_modes(const EigenSystem &eig, std::size_t count, const HiddenStateTensor &h,
                            const SpectralBasis &basis) {
  check_rank(basis, eig, "dominant_modes");
  if (h.valid_count() == 0)
    return dominant_modes(eig, count);
  const ComplexMatrix coords = eigen_coords(h.valid_rows(), basis, eig);
  const RealVector mean = coords.cwiseAbs().colwise().mean().transpose();

  std::vector<std::size_t> ranking(eig.size());
  std::iota(ranking.begin(), ranking.end(), std::size_t{0});
  std::stable_sort(ranking.begin(), ranking.end(), [&](std::size_t a, std::size_t b) {
    return mean(static_cast<Eigen::Index>(a)) > mean(static_cast<Eigen::Index>(b));
  });
  return take_closed(eig, ranking, count);
}

} // namespace kann
