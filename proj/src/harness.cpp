#include "kann/harness.hpp"

#include "kann/errors.hpp"
#include "kann/format.hpp"

#include <cmath>
#include <random>

namespace kann {
namespace {

RealMatrix gaussian(std::mt19937_64 &rng, Eigen::Index rows, Eigen::Index cols, double stddev) {
  std::normal_distribution<double> normal(0.0, stddev);
  RealMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = normal(rng);
  return m;
}

RealVector unit_vector(std::mt19937_64 &rng, Eigen::Index k) {
  RealVector v;
  do {
    v = gaussian(rng, k, 1, 1.0);
  } while (v.norm() == 0.0);
  return v / v.norm();
}

double spectral_radius(const RealMatrix &a) {
  if (a.size() == 0)
    return 0;
  return std::abs(eig(a).values(0));
}

RealVector logistic(const RealVector &x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

} // namespace

LinearDynamics make_linear_dynamics(RealMatrix transition, bool force) {
  if (transition.rows() != transition.cols() || transition.rows() == 0)
    throw DimensionError("linear dynamics: transition must be a non-empty square matrix");
  require_finite(transition, "linear dynamics");
  LinearDynamics dyn{std::move(transition), 0.0};
  dyn.spectral_radius = spectral_radius(dyn.transition);
  if (dyn.spectral_radius > kMaxStableRadius && !force)
    throw ArgumentError("linear dynamics: spectral radius " + format_double(dyn.spectral_radius) +
                        " exceeds " + format_double(kMaxStableRadius) + " (force to override)");
  return dyn;
}

LinearDynamics random_linear_dynamics(std::size_t k, double radius, std::uint64_t seed, bool force) {
  if (k == 0)
    throw ArgumentError("random_linear_dynamics: k must be positive");
  if (!(radius > 0.0))
    throw ArgumentError("random_linear_dynamics: spectral radius must be positive");
  if (radius > kMaxStableRadius && !force)
    throw ArgumentError("linear dynamics: spectral radius " + format_double(radius) + " exceeds " +
                        format_double(kMaxStableRadius) + " (force to override)");
  std::mt19937_64 rng(seed);
  const auto n = static_cast<Eigen::Index>(k);
  RealMatrix a = gaussian(rng, n, n, 1.0 / std::sqrt(static_cast<double>(k)));
  a *= radius / spectral_radius(a);
  return make_linear_dynamics(std::move(a), force);
}

HiddenStateTensor gen_linear(const LinearDynamics &dyn, const RealMatrix &initial,
                             std::size_t steps, double noise_rel, std::uint64_t seed) {
  if (steps < 2)
    throw ArgumentError("gen_linear: at least two steps required");
  if (!(noise_rel >= 0.0))
    throw ArgumentError("gen_linear: noise_rel must be non-negative");
  if (static_cast<std::size_t>(initial.cols()) != dyn.dim())
    throw DimensionError("gen_linear: initial states have " + std::to_string(initial.cols()) +
                         " columns, dynamics has dimension " + std::to_string(dyn.dim()));

  std::mt19937_64 rng(seed);
  const std::size_t samples = static_cast<std::size_t>(initial.rows());
  auto out = HiddenStateTensor::zeros(samples, steps, dyn.dim());
  for (std::size_t s = 0; s < samples; ++s) {
    RealVector h = initial.row(static_cast<Eigen::Index>(s)).transpose();
    for (std::size_t t = 0; t < steps; ++t) {
      out.state(s, t) = h.transpose();
      RealVector next = dyn.transition * h;
      if (noise_rel > 0.0)
        next += noise_rel * h.norm() * unit_vector(rng, h.size());
      h = std::move(next);
    }
  }
  return out;
}

HiddenStateTensor gen_linear(const LinearDynamics &dyn, std::size_t samples, std::size_t steps,
                             double noise_rel, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto k = static_cast<Eigen::Index>(dyn.dim());
  RealMatrix initial(static_cast<Eigen::Index>(samples), k);
  for (std::size_t s = 0; s < samples; ++s)
    initial.row(static_cast<Eigen::Index>(s)) = unit_vector(rng, k).transpose();
  return gen_linear(dyn, initial, steps, noise_rel, rng());
}

// ---------------------------------------------------------------------------

TokenClass CounterRnn::token_class(int token) const {
  if (token < 0 || static_cast<std::size_t>(token) >= vocab.size())
    throw ArgumentError("token " + std::to_string(token) + " outside vocabulary of size " +
                        std::to_string(vocab.size()));
  const auto t = static_cast<std::size_t>(token);
  if (t < vocab.positive)
    return TokenClass::Positive;
  if (t < vocab.positive + vocab.negative)
    return TokenClass::Negative;
  return TokenClass::Neutral;
}

CounterRnn build_counter_rnn(std::size_t k, double decay, const Vocabulary &vocab,
                             std::uint64_t seed) {
  if (k < 2)
    throw ArgumentError("build_counter_rnn: hidden size must be at least 2");
  if (!(decay > 0.0 && decay < 1.0))
    throw ArgumentError("build_counter_rnn: decay must lie in (0, 1)");
  if (vocab.positive == 0 || vocab.negative == 0 || vocab.neutral == 0)
    throw ArgumentError("build_counter_rnn: every vocabulary class needs at least one token");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> magnitude(0.5 * kNeutralInputBound,
                                                   0.95 * kNeutralInputBound);
  CounterRnn rnn;
  rnn.k = k;
  rnn.decay = decay;
  rnn.vocab = vocab;
  rnn.input_weights = RealMatrix::Zero(static_cast<Eigen::Index>(k),
                                       static_cast<Eigen::Index>(vocab.size()));
  for (std::size_t tok = 0; tok < vocab.size(); ++tok) {
    const auto col = static_cast<Eigen::Index>(tok);
    switch (rnn.token_class(static_cast<int>(tok))) {
    case TokenClass::Positive:
      rnn.input_weights(0, col) = 1.0;
      break;
    case TokenClass::Negative:
      rnn.input_weights(0, col) = -1.0;
      break;
    case TokenClass::Neutral:
      rnn.input_weights.col(col).tail(static_cast<Eigen::Index>(k - 1)) =
          magnitude(rng) * unit_vector(rng, static_cast<Eigen::Index>(k - 1));
      break;
    }
  }
  // Logit h_0 + 0.5: positive iff the (integer) count is non-negative, which
  // keeps a count of exactly zero away from the decision boundary.
  rnn.readout.kind = ReadoutKind::SigmoidBinary;
  rnn.readout.weights = RealMatrix::Zero(static_cast<Eigen::Index>(k), 1);
  rnn.readout.weights(0, 0) = 1.0;
  rnn.readout.bias = RealVector::Constant(1, 0.5);
  return rnn;
}

HiddenStateTensor run_counter(const CounterRnn &rnn, const TokenBatch &tokens) {
  const std::size_t samples = tokens.size();
  const std::size_t steps = samples ? tokens.front().size() : 0;
  auto out = HiddenStateTensor::zeros(samples, steps, rnn.k);
  for (std::size_t s = 0; s < samples; ++s) {
    if (tokens[s].size() != steps)
      throw DimensionError("run_counter: token sequences must share one length");
    RealVector h = RealVector::Zero(static_cast<Eigen::Index>(rnn.k));
    for (std::size_t t = 0; t < steps; ++t) {
      rnn.token_class(tokens[s][t]);
      h.tail(h.size() - 1) *= rnn.decay;
      h += rnn.input_weights.col(tokens[s][t]);
      out.state(s, t) = h.transpose();
    }
  }
  return out;
}

TokenStreams sample_streams(const CounterRnn &rnn, std::size_t samples, std::size_t length,
                            const StreamOptions &options, std::uint64_t seed) {
  if (options.p_positive < 0 || options.p_negative < 0 ||
      options.p_positive + options.p_negative > 1.0)
    throw ArgumentError("sample_streams: token probabilities must be non-negative and sum to at most 1");
  if (length < 1)
    throw ArgumentError("sample_streams: length must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pos(0, rnn.vocab.positive - 1);
  std::uniform_int_distribution<std::size_t> neg(0, rnn.vocab.negative - 1);
  std::uniform_int_distribution<std::size_t> neu(0, rnn.vocab.neutral - 1);

  TokenStreams out;
  out.tokens.assign(samples, std::vector<int>(length));
  out.labels.resize(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    long count = 0;
    for (std::size_t t = 0; t < length; ++t) {
      const double u = unit(rng);
      std::size_t token;
      if (t == 0) {
        token = rnn.vocab.positive + rnn.vocab.negative + neu(rng);
      } else if (u < options.p_positive) {
        token = pos(rng);
        ++count;
      } else if (u < options.p_positive + options.p_negative) {
        token = rnn.vocab.positive + neg(rng);
        --count;
      } else {
        token = rnn.vocab.positive + rnn.vocab.negative + neu(rng);
      }
      out.tokens[s][t] = static_cast<int>(token);
    }
    out.labels[s] = count >= 0 ? 1 : 0;
  }
  return out;
}

TokenStreams positive_streams(const CounterRnn &rnn, std::size_t samples, std::size_t length,
                              std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pos(0, rnn.vocab.positive - 1);
  TokenStreams out;
  out.tokens.assign(samples, std::vector<int>(length));
  out.labels.assign(samples, 1);
  for (auto &seq : out.tokens)
    for (auto &tok : seq)
      tok = static_cast<int>(pos(rng));
  return out;
}

// ---------------------------------------------------------------------------

LabelledStates gen_clusters(std::size_t k, std::size_t samples, std::size_t steps,
                            double separation, double noise, std::uint64_t seed) {
  if (k == 0 || steps == 0)
    throw ArgumentError("gen_clusters: k and steps must be positive");
  if (samples < 2)
    throw ArgumentError("gen_clusters: at least two samples needed for two classes");
  if (!(separation >= 0.0) || !(noise >= 0.0))
    throw ArgumentError("gen_clusters: separation and noise must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const RealVector direction = unit_vector(rng, static_cast<Eigen::Index>(k));

  LabelledStates out{HiddenStateTensor::zeros(samples, steps, k), std::vector<int>(samples)};
  for (std::size_t s = 0; s < samples; ++s) {
    const int label = static_cast<int>(s % 2);
    out.labels[s] = label;
    const RealVector centre = (label ? 0.5 : -0.5) * separation * direction;
    for (std::size_t t = 0; t < steps; ++t)
      for (std::size_t i = 0; i < k; ++i)
        out.states.at(s, t, i) = centre(static_cast<Eigen::Index>(i)) + noise * normal(rng);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(CellKind kind) { return kind == CellKind::ElmanTanh ? "elman" : "gru"; }

CellKind parse_cell_kind(const std::string &text) {
  if (text == "elman" || text == "elman-tanh")
    return CellKind::ElmanTanh;
  if (text == "gru")
    return CellKind::Gru;
  throw ArgumentError("unknown cell kind '" + text + "' (expected elman or gru)");
}

RecurrentCell make_cell(CellKind kind, std::size_t inputs, std::size_t hidden, std::uint64_t seed,
                        double scale) {
  if (inputs == 0 || hidden == 0)
    throw ArgumentError("make_cell: sizes must be positive");
  std::mt19937_64 rng(seed);
  const auto m = static_cast<Eigen::Index>(inputs);
  const auto k = static_cast<Eigen::Index>(hidden);
  const double sd = scale / std::sqrt(static_cast<double>(hidden));

  RecurrentCell cell;
  cell.kind = kind;
  cell.inputs = inputs;
  cell.hidden = hidden;
  cell.w_hidden = gaussian(rng, k, m, sd);
  cell.u_hidden = gaussian(rng, k, k, sd);
  cell.b_hidden = gaussian(rng, k, 1, sd);
  if (kind == CellKind::Gru) {
    cell.w_update = gaussian(rng, k, m, sd);
    cell.u_update = gaussian(rng, k, k, sd);
    cell.b_update = gaussian(rng, k, 1, sd);
    cell.w_reset = gaussian(rng, k, m, sd);
    cell.u_reset = gaussian(rng, k, k, sd);
    cell.b_reset = gaussian(rng, k, 1, sd);
  }
  return cell;
}

HiddenStateTensor run_cell(const RecurrentCell &cell, const HiddenStateTensor &inputs,
                           const std::optional<RealMatrix> &initial) {
  if (inputs.dim() != cell.inputs)
    throw DimensionError("run_cell: inputs have dimension " + std::to_string(inputs.dim()) +
                         ", cell expects " + std::to_string(cell.inputs));
  const auto k = static_cast<Eigen::Index>(cell.hidden);
  if (initial && (initial->rows() != static_cast<Eigen::Index>(inputs.samples()) || initial->cols() != k))
    throw DimensionError("run_cell: initial states must be samples x hidden");

  auto out = HiddenStateTensor::zeros(inputs.samples(), inputs.steps(), cell.hidden);
  for (std::size_t s = 0; s < inputs.samples(); ++s) {
    RealVector h = initial ? RealVector(initial->row(static_cast<Eigen::Index>(s)).transpose())
                           : RealVector::Zero(k);
    for (std::size_t t = 0; t < inputs.steps(); ++t) {
      const RealVector x = inputs.state(s, t).transpose();
      if (cell.kind == CellKind::ElmanTanh) {
        h = (cell.u_hidden * h + cell.w_hidden * x + cell.b_hidden).array().tanh();
      } else {
        const RealVector z = logistic(cell.w_update * x + cell.u_update * h + cell.b_update);
        const RealVector r = logistic(cell.w_reset * x + cell.u_reset * h + cell.b_reset);
        const RealVector candidate =
            (cell.w_hidden * x + cell.u_hidden * r.cwiseProduct(h) + cell.b_hidden).array().tanh();
        h = z.cwiseProduct(h) + (RealVector::Ones(k) - z).cwiseProduct(candidate);
      }
      out.state(s, t) = h.transpose();
    }
  }
  return out;
}

HiddenStateTensor random_inputs(std::size_t samples, std::size_t steps, std::size_t inputs,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto out = HiddenStateTensor::zeros(samples, steps, inputs);
  for (auto &v : out.data())
    v = normal(rng);
  return out;
}

RealMatrix linear_decoder(const RealMatrix &states, const RealMatrix &decoder) {
  if (states.cols() != decoder.rows())
    throw DimensionError("linear_decoder: states have " + std::to_string(states.cols()) +
                         " columns, decoder expects " + std::to_string(decoder.rows()));
  return states * decoder;
}

} // namespace kann
