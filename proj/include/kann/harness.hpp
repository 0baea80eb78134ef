#pragma once

// Synthetic sequence models with known dynamics, used as oracles for the
// analysis pipeline.

#include "kann/numerics.hpp"
#include "kann/state_io.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kann {

// ---------------------------------------------------------------------------
// Linear dynamics h_{t+1} = A h_t

struct LinearDynamics {
  RealMatrix transition; // A, k x k, acting on column states
  double spectral_radius = 0;

  std::size_t dim() const { return static_cast<std::size_t>(transition.rows()); }
};

inline constexpr double kMaxStableRadius = 1.05;

/// Wraps A, refusing spectral radius above 1.05 unless `force` is set.
LinearDynamics make_linear_dynamics(RealMatrix transition, bool force = false);

/// Gaussian matrix rescaled to the requested spectral radius.
LinearDynamics random_linear_dynamics(std::size_t k, double spectral_radius, std::uint64_t seed,
                                      bool force = false);

/// s trajectories of length n from seeded unit-norm initial states, with
/// h_{t+1} = A h_t + noise_rel * ||h_t|| * g_t, g_t a seeded random unit vector.
HiddenStateTensor gen_linear(const LinearDynamics &dyn, std::size_t samples, std::size_t steps,
                             double noise_rel, std::uint64_t seed);

/// Same recurrence from caller-supplied initial states (one row per sample).
HiddenStateTensor gen_linear(const LinearDynamics &dyn, const RealMatrix &initial,
                             std::size_t steps, double noise_rel, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Counter RNN: coordinate 0 integrates +1 / -1 sentiment tokens, the remaining
// coordinates decay and absorb neutral tokens.

struct Vocabulary {
  std::size_t positive = 2;
  std::size_t negative = 2;
  std::size_t neutral = 6;

  std::size_t size() const { return positive + negative + neutral; }
};

enum class TokenClass { Positive, Negative, Neutral };

struct CounterRnn {
  std::size_t k = 0;
  double decay = 0.5;
  Vocabulary vocab;
  RealMatrix input_weights; // k x m, column per token
  ReadoutHead readout;

  /// Token ids: [0, positive) positive, then negative, then neutral.
  TokenClass token_class(int token) const;
};

inline constexpr double kNeutralInputBound = 0.1;

CounterRnn build_counter_rnn(std::size_t k, double decay, const Vocabulary &vocab,
                             std::uint64_t seed);

using TokenBatch = std::vector<std::vector<int>>;

/// States h_1..h_n for each token sequence, starting from h_0 = 0.
HiddenStateTensor run_counter(const CounterRnn &rnn, const TokenBatch &tokens);

struct StreamOptions {
  double p_positive = 0.05;
  double p_negative = 0.05; // the rest is neutral, uniform over neutral tokens
};

struct TokenStreams {
  TokenBatch tokens;
  /// Readout category of the final state: 1 when the final count is >= 0.
  std::vector<int> labels;
};

/// Every stream opens with a neutral token, so the decaying coordinates are
/// non-zero from then on and no state is the zero vector.
TokenStreams sample_streams(const CounterRnn &rnn, std::size_t samples, std::size_t length,
                            const StreamOptions &options, std::uint64_t seed);

/// Streams made only of positive tokens.
TokenStreams positive_streams(const CounterRnn &rnn, std::size_t samples, std::size_t length,
                              std::uint64_t seed);

// ---------------------------------------------------------------------------
// Two labelled Gaussian clouds

struct LabelledStates {
  HiddenStateTensor states;
  std::vector<int> labels;
};

/// Labels alternate 0, 1, 0, ... Every state of a class-c sample is
/// centre_c + noise * N(0, I), with the centres +-separation/2 along a seeded
/// unit direction. separation = 0 gives one generator under two labels.
LabelledStates gen_clusters(std::size_t k, std::size_t samples, std::size_t steps,
                            double separation, double noise, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Recurrent cells h_t = F(h_{t-1}, x_t)

enum class CellKind { ElmanTanh, Gru };

std::string to_string(CellKind kind);
CellKind parse_cell_kind(const std::string &text);

/// Weights act on column vectors: W_* is k x m, U_* is k x k.
struct RecurrentCell {
  CellKind kind = CellKind::ElmanTanh;
  std::size_t inputs = 0; // m
  std::size_t hidden = 0; // k

  // Elman: h = tanh(U_h h + W_h x + b_h). GRU uses all three gate sets.
  RealMatrix w_update, u_update;
  RealVector b_update;
  RealMatrix w_reset, u_reset;
  RealVector b_reset;
  RealMatrix w_hidden, u_hidden;
  RealVector b_hidden;
};

/// Seeded Gaussian weights with standard deviation `scale` / sqrt(k).
RecurrentCell make_cell(CellKind kind, std::size_t inputs, std::size_t hidden, std::uint64_t seed,
                        double scale = 1.0);

/// Runs the cell over an s x n x m input tensor; h_0 is zero unless given.
HiddenStateTensor run_cell(const RecurrentCell &cell, const HiddenStateTensor &inputs,
                           const std::optional<RealMatrix> &initial = std::nullopt);

/// Seeded standard-normal input tensor.
HiddenStateTensor random_inputs(std::size_t samples, std::size_t steps, std::size_t inputs,
                                std::uint64_t seed);

/// H_last * D, the stand-in for a network decoder.
RealMatrix linear_decoder(const RealMatrix &states, const RealMatrix &decoder);

} // namespace kann
