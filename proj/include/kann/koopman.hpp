#pragma once

// Spectral basis, least-squares operator fit, and prediction of hidden states.

#include "kann/numerics.hpp"
#include "kann/state_io.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kann {

enum class BasisMethod { Svd, PcaCentered };

std::string to_string(BasisMethod method);
BasisMethod parse_basis_method(const std::string &text);

/// Orthonormal k x r basis of state space. With PcaCentered the stored mean is
/// subtracted before projecting and added back after lifting.
struct SpectralBasis {
  RealMatrix vectors;         // k x r, columns orthonormal
  RealVector singular_values; // r, descending
  BasisMethod method = BasisMethod::Svd;
  std::optional<RealVector> mean;

  std::size_t rank() const { return static_cast<std::size_t>(vectors.cols()); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors.rows()); }
};

/// The r x r matrix acting on basis coefficients, row-vector convention:
/// coefficients of the next state = coefficients of the current state * matrix.
struct KoopmanOperator {
  RealMatrix matrix;
  SpectralBasis basis;
  /// ||X B C B^T - Y||_F / ||Y||_F over the fitted pairs.
  double fit_residual = 0;

  std::size_t rank() const { return static_cast<std::size_t>(matrix.rows()); }
};

/// Smallest rank whose leading singular values hold `energy` of the total
/// squared singular-value mass. Returns at least 1.
std::size_t energy_rank(const RealVector &singular_values, double energy = 0.999);

/// Singular values of the stacked valid states (mean-centred for PcaCentered).
RealVector state_spectrum(const HiddenStateTensor &h, BasisMethod method = BasisMethod::Svd,
                          bool include_padding = false);

/// Top-`rank` right singular vectors of the stacked valid states. Without a
/// rank the energy rule picks one. Each column's largest-magnitude entry is
/// made positive.
SpectralBasis compute_basis(const HiddenStateTensor &h, std::optional<std::size_t> rank,
                            BasisMethod method = BasisMethod::Svd, bool include_padding = false);

/// Coefficients of each state row: (states - mean) * B.
RealMatrix project(const RealMatrix &states, const SpectralBasis &basis);
/// States from coefficients: coeffs * B^T + mean.
RealMatrix lift(const RealMatrix &coeffs, const SpectralBasis &basis);

KoopmanOperator fit_koopman(const HiddenStateTensor &h, const SpectralBasis &basis,
                            bool include_padding = false);

RealMatrix predict_next(const RealMatrix &states, const KoopmanOperator &op);

/// Element i (0-based) is the prediction i + 1 steps ahead.
std::vector<RealMatrix> rollout(const RealMatrix &states, const KoopmanOperator &op,
                                std::size_t steps);

/// Mean over valid (s, t) of ||predicted - actual||^2 / ||actual||^2.
double relative_error(const HiddenStateTensor &predicted, const HiddenStateTensor &actual);

/// Predicted and actual states at horizon `steps`: for every valid t with
/// t + steps valid, predicted(s, t) is the rollout of h(s, t) and actual(s, t)
/// is h(s, t + steps). Both tensors are s x (n - steps) x k and share a mask.
struct PredictionPair {
  HiddenStateTensor predicted;
  HiddenStateTensor actual;
};

PredictionPair predict_ahead(const HiddenStateTensor &h, const KoopmanOperator &op,
                             std::size_t steps = 1, bool include_padding = false);

} // namespace kann
