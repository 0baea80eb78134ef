#pragma once

// Hidden-state tensors, readout heads, dataset manifests and the NPY subset
// the toolkit reads and writes.

#include "kann/numerics.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace kann {

/// s x n x k array of network states, stored C-order. An optional s x n mask
/// marks valid steps; valid steps of every sample form a prefix.
class HiddenStateTensor {
public:
  HiddenStateTensor() = default;
  HiddenStateTensor(std::size_t samples, std::size_t steps, std::size_t dim,
                    std::vector<double> data,
                    std::optional<std::vector<std::uint8_t>> mask = std::nullopt);

  /// Zero-filled tensor, convenient for generators.
  static HiddenStateTensor zeros(std::size_t samples, std::size_t steps, std::size_t dim);

  std::size_t samples() const noexcept { return samples_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  bool has_mask() const noexcept { return mask_.has_value(); }
  const std::optional<std::vector<std::uint8_t>> &mask() const noexcept { return mask_; }
  bool valid(std::size_t s, std::size_t t) const;
  std::size_t valid_length(std::size_t s) const;
  std::size_t valid_count() const;

  double &at(std::size_t s, std::size_t t, std::size_t i);
  double at(std::size_t s, std::size_t t, std::size_t i) const;

  Eigen::Map<const Eigen::RowVectorXd> state(std::size_t s, std::size_t t) const;
  Eigen::Map<Eigen::RowVectorXd> state(std::size_t s, std::size_t t);

  /// All samples at step t, one row per sample (padding included).
  RealMatrix time_slice(std::size_t t) const;
  /// All valid states stacked in (sample, step) order.
  RealMatrix valid_rows() const;

  /// Same data with the mask dropped (every step treated as valid).
  HiddenStateTensor without_mask() const;
  /// Same data with a new mask; validates the prefix rule.
  HiddenStateTensor with_mask(std::vector<std::uint8_t> mask) const;

  friend bool operator==(const HiddenStateTensor &, const HiddenStateTensor &) = default;

private:
  std::size_t samples_ = 0;
  std::size_t steps_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
  std::optional<std::vector<std::uint8_t>> mask_;
  std::vector<std::size_t> lengths_;
};

/// Stacked consecutive pairs: row i of `next` is the successor of row i of `current`.
struct StatePairs {
  RealMatrix current;
  RealMatrix next;
};

/// Builds the operands of the operator fit. Pairs that straddle the padding
/// boundary are skipped unless `include_padding` is set, in which case the mask
/// is ignored and every consecutive pair is used.
StatePairs flatten_valid(const HiddenStateTensor &t, bool include_padding = false);

// ---------------------------------------------------------------------------
// NPY

/// Raw contents of a version 1.0 NPY file, widened to double.
struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<double> data;
};

NpyArray read_npy(const std::filesystem::path &path);
/// Writes '<f8', C-order, version 1.0.
void write_npy(const std::filesystem::path &path, std::span<const std::size_t> shape,
               std::span<const double> data);

HiddenStateTensor load_tensor(const std::filesystem::path &path);
void save_tensor(const HiddenStateTensor &t, const std::filesystem::path &path);

RealMatrix load_matrix(const std::filesystem::path &path);
void save_matrix(const RealMatrix &m, const std::filesystem::path &path);

RealVector load_vector(const std::filesystem::path &path);
void save_vector(const RealVector &v, const std::filesystem::path &path);

/// s x n mask stored as a float matrix of zeros and ones.
std::vector<std::uint8_t> load_mask(const std::filesystem::path &path, std::size_t samples,
                                    std::size_t steps);
void save_mask(const HiddenStateTensor &t, const std::filesystem::path &path);

// ---------------------------------------------------------------------------
// Labels

std::vector<int> load_labels(const std::filesystem::path &path);
void save_labels(std::span<const int> labels, const std::filesystem::path &path);

// ---------------------------------------------------------------------------
// Readout

enum class ReadoutKind { ArgmaxClassifier, SigmoidBinary };

std::string to_string(ReadoutKind kind);
ReadoutKind parse_readout_kind(const std::string &text);

/// The network component mapping a state to logits.
struct ReadoutHead {
  RealMatrix weights; // k x c
  RealVector bias;    // c
  ReadoutKind kind = ReadoutKind::ArgmaxClassifier;

  std::size_t categories() const;
};

/// Checks the head invariants (c >= 1, matching bias, finite entries, a single
/// logit column for the sigmoid kind).
void validate(const ReadoutHead &head);

struct ReadoutOutput {
  RealMatrix logits;
  std::vector<int> categories;
};

/// logits = states * weights + bias. Argmax takes the lowest index on ties;
/// sigmoid-binary assigns 1 iff logistic(logit) > 0.5.
ReadoutOutput apply_readout(const ReadoutHead &head, const RealMatrix &states);

// ---------------------------------------------------------------------------
// Manifest

/// Paths are stored as written in the manifest (usually relative); resolve()
/// anchors them at the manifest's directory.
struct DatasetManifest {
  std::string name;
  std::string tensor_path;
  std::optional<std::string> labels_path;
  std::optional<std::string> mask_path;
  std::optional<std::string> readout_path;
  std::optional<std::string> readout_bias_path;
  std::optional<ReadoutKind> readout_kind;

  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string &p) const;

  friend bool operator==(const DatasetManifest &, const DatasetManifest &) = default;
};

/// Parses the JSON manifest and checks that every referenced file exists.
DatasetManifest load_manifest(const std::filesystem::path &path);
void save_manifest(const DatasetManifest &m, const std::filesystem::path &path);

/// Everything a manifest points to, loaded and cross-checked.
struct Dataset {
  DatasetManifest manifest;
  HiddenStateTensor states;
  std::optional<std::vector<int>> labels;
  std::optional<ReadoutHead> readout;
};

Dataset load_dataset(const std::filesystem::path &manifest_path);

} // namespace kann
