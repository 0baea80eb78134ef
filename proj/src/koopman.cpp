#include "kann/koopman.hpp"

#include "kann/errors.hpp"

#include <cmath>

namespace kann {

std::string to_string(BasisMethod method) {
  return method == BasisMethod::Svd ? "svd" : "pca";
}

BasisMethod parse_basis_method(const std::string &text) {
  if (text == "svd")
    return BasisMethod::Svd;
  if (text == "pca" || text == "pca-centered")
    return BasisMethod::PcaCentered;
  throw ArgumentError("unknown basis method '" + text + "' (expected svd or pca)");
}

std::size_t energy_rank(const RealVector &singular_values, double energy) {
  if (!(energy > 0.0 && energy <= 1.0))
    throw ArgumentError("energy_rank: energy must lie in (0, 1]");
  const double total = singular_values.squaredNorm();
  if (total == 0.0 || singular_values.size() == 0)
    return 1;
  double acc = 0;
  for (Eigen::Index i = 0; i < singular_values.size(); ++i) {
    acc += singular_values(i) * singular_values(i);
    if (acc >= energy * total)
      return static_cast<std::size_t>(i + 1);
  }
  return static_cast<std::size_t>(singular_values.size());
}

namespace {

RealMatrix stacked_states(const HiddenStateTensor &h, bool include_padding) {
  return include_padding ? h.without_mask().valid_rows() : h.valid_rows();
}

struct CenteredStack {
  RealMatrix rows;
  std::optional<RealVector> mean;
};

CenteredStack prepare_stack(const HiddenStateTensor &h, BasisMethod method, bool include_padding) {
  CenteredStack out{stacked_states(h, include_padding), std::nullopt};
  if (out.rows.rows() == 0 || out.rows.cols() == 0)
    throw ValidationError("compute_basis: no valid states");
  if (method == BasisMethod::PcaCentered) {
    RealVector mean = out.rows.colwise().mean().transpose();
    out.rows.rowwise() -= mean.transpose();
    out.mean = std::move(mean);
  }
  return out;
}

void check_basis_dim(std::size_t cols, const SpectralBasis &basis, const char *who) {
  if (cols != basis.dim())
    throw DimensionError(std::string(who) + ": states have " + std::to_string(cols) +
                         " columns, basis expects " + std::to_string(basis.dim()));
}

} // namespace

RealVector state_spectrum(const HiddenStateTensor &h, BasisMethod method, bool include_padding) {
  return svd(prepare_stack(h, method, include_padding).rows).singular_values;
}

SpectralBasis compute_basis(const HiddenStateTensor &h, std::optional<std::size_t> rank,
                            BasisMethod method, bool include_padding) {
  CenteredStack stack = prepare_stack(h, method, include_padding);
  const auto max_rank = static_cast<std::size_t>(std::min(stack.rows.rows(), stack.rows.cols()));
  const SvdResult f = svd(stack.rows);

  const std::size_t r = rank ? *rank : energy_rank(f.singular_values);
  if (r < 1 || r > max_rank)
    throw ArgumentError("compute_basis: rank " + std::to_string(r) + " outside admissible range [1, " +
                        std::to_string(max_rank) + "]");

  SpectralBasis basis;
  basis.method = method;
  basis.mean = std::move(stack.mean);
  basis.vectors = f.right_vectors.leftCols(static_cast<Eigen::Index>(r));
  basis.singular_values = f.singular_values.head(static_cast<Eigen::Index>(r));
  for (Eigen::Index j = 0; j < basis.vectors.cols(); ++j) {
    Eigen::Index arg = 0;
    basis.vectors.col(j).cwiseAbs().maxCoeff(&arg);
    if (basis.vectors(arg, j) < 0)
      basis.vectors.col(j) *= -1.0;
  }
  return basis;
}

RealMatrix project(const RealMatrix &states, const SpectralBasis &basis) {
  check_basis_dim(static_cast<std::size_t>(states.cols()), basis, "project");
  if (basis.mean)
    return (states.rowwise() - basis.mean->transpose()) * basis.vectors;
  return states * basis.vectors;
}

RealMatrix lift(const RealMatrix &coeffs, const SpectralBasis &basis) {
  if (static_cast<std::size_t>(coeffs.cols()) != basis.rank())
    throw DimensionError("lift: coefficients have " + std::to_string(coeffs.cols()) +
                         " columns, basis rank is " + std::to_string(basis.rank()));
  RealMatrix out = coeffs * basis.vectors.transpose();
  if (basis.mean)
    out.rowwise() += basis.mean->transpose();
  return out;
}

KoopmanOperator fit_koopman(const HiddenStateTensor &h, const SpectralBasis &basis,
                            bool include_padding) {
  check_basis_dim(h.dim(), basis, "fit_koopman");
  const StatePairs pairs = flatten_valid(h, include_padding);
  const RealMatrix current = project(pairs.current, basis);
  const RealMatrix next = project(pairs.next, basis);

  KoopmanOperator op;
  op.matrix = lstsq(current, next);
  op.basis = basis;

  const double scale = pairs.next.norm();
  const double residual = (lift(current * op.matrix, basis) - pairs.next).norm();
  op.fit_residual = scale > 0.0 ? residual / scale : residual;
  return op;
}

RealMatrix predict_next(const RealMatrix &states, const KoopmanOperator &op) {
  return lift(project(states, op.basis) * op.matrix, op.basis);
}

std::vector<RealMatrix> rollout(const RealMatrix &states, const KoopmanOperator &op,
                                std::size_t steps) {
  if (steps < 1)
    throw ArgumentError("rollout: steps must be at least 1");
  std::vector<RealMatrix> out;
  out.reserve(steps);
  RealMatrix coeffs = project(states, op.basis);
  for (std::size_t i = 0; i < steps; ++i) {
    coeffs = coeffs * op.matrix;
    out.push_back(lift(coeffs, op.basis));
  }
  return out;
}

double relative_error(const HiddenStateTensor &predicted, const HiddenStateTensor &actual) {
  if (predicted.samples() != actual.samples() || predicted.steps() != actual.steps() ||
      predicted.dim() != actual.dim())
    throw DimensionError("relative_error: tensors have different shapes");
  double total = 0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < actual.samples(); ++s) {
    if (predicted.valid_length(s) != actual.valid_length(s))
      throw DimensionError("relative_error: masks differ for sample " + std::to_string(s));
    for (std::size_t t = 0; t < actual.valid_length(s); ++t) {
      const double denom = actual.state(s, t).squaredNorm();
      if (denom == 0.0)
        throw ValidationError("relative_error: actual state (" + std::to_string(s) + ", " +
                              std::to_string(t) + ") is the zero vector");
      total += (predicted.state(s, t) - actual.state(s, t)).squaredNorm() / denom;
      ++count;
    }
  }
  if (count == 0)
    throw ValidationError("relative_error: no valid states");
  return total / static_cast<double>(count);
}

PredictionPair predict_ahead(const HiddenStateTensor &h, const KoopmanOperator &op,
                             std::size_t steps, bool include_padding) {
  if (steps < 1)
    throw ArgumentError("predict_ahead: steps must be at least 1");
  if (h.steps() <= steps)
    throw ArgumentError("predict_ahead: sequences of length " + std::to_string(h.steps()) +
                        " admit no " + std::to_string(steps) + "-step targets");
  check_basis_dim(h.dim(), op.basis, "predict_ahead");

  const std::size_t n_out = h.steps() - steps;
  const std::size_t k = h.dim();
  std::vector<double> predicted(h.samples() * n_out * k, 0.0);
  std::vector<double> actual(h.samples() * n_out * k, 0.0);
  std::vector<std::uint8_t> mask(h.samples() * n_out, 0);
  const bool use_mask = h.has_mask() && !include_padding;

  for (std::size_t s = 0; s < h.samples(); ++s) {
    const std::size_t len = use_mask ? h.valid_length(s) : h.steps();
    if (len <= steps)
      continue;
    const std::size_t count = len - steps;
    RealMatrix start(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(k));
    for (std::size_t t = 0; t < count; ++t)
      start.row(static_cast<Eigen::Index>(t)) = h.state(s, t);
    const RealMatrix ahead = rollout(start, op, steps).back();
    for (std::size_t t = 0; t < count; ++t) {
      mask[s * n_out + t] = 1;
      for (std::size_t i = 0; i < k; ++i) {
        predicted[(s * n_out + t) * k + i] = ahead(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(i));
        actual[(s * n_out + t) * k + i] = h.at(s, t + steps, i);
      }
    }
  }

  if (!use_mask)
    return {HiddenStateTensor(h.samples(), n_out, k, std::move(predicted)),
            HiddenStateTensor(h.samples(), n_out, k, std::move(actual))};
  return {HiddenStateTensor(h.samples(), n_out, k, std::move(predicted), mask),
          HiddenStateTensor(h.samples(), n_out, k, std::move(actual), mask)};
}

} // namespace kann
