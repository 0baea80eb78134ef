#include "kann/state_io.hpp"

#include "kann/errors.hpp"

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace kann {

// ---------------------------------------------------------------------------
// HiddenStateTensor

HiddenStateTensor::HiddenStateTensor(std::size_t samples, std::size_t steps, std::size_t dim,
                                     std::vector<double> data,
                                     std::optional<std::vector<std::uint8_t>> mask)
    : samples_(samples), steps_(steps), dim_(dim), data_(std::move(data)) {
  if (data_.size() != samples_ * steps_ * dim_)
    throw DimensionError("tensor: " + std::to_string(data_.size()) + " values for shape (" +
                         std::to_string(samples_) + ", " + std::to_string(steps_) + ", " +
                         std::to_string(dim_) + ")");
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i]))
      throw ValidationError("tensor: non-finite value at index (" +
                            std::to_string(i / (steps_ * dim_)) + ", " +
                            std::to_string((i / dim_) % steps_) + ", " +
                            std::to_string(i % dim_) + ")");
  }
  lengths_.assign(samples_, steps_);
  if (mask) {
    if (mask->size() != samples_ * steps_)
      throw DimensionError("tensor: mask has " + std::to_string(mask->size()) +
                           " entries, expected " + std::to_string(samples_ * steps_));
    for (std::size_t s = 0; s < samples_; ++s) {
      std::size_t len = 0;
      while (len < steps_ && (*mask)[s * steps_ + len])
        ++len;
      for (std::size_t t = len; t < steps_; ++t) {
        if ((*mask)[s * steps_ + t])
          throw ValidationError("tensor: mask of sample " + std::to_string(s) +
                                " is not a prefix (valid step " + std::to_string(t) +
                                " follows padding)");
      }
      lengths_[s] = len;
    }
    mask_ = std::move(mask);
  }
}

HiddenStateTensor HiddenStateTensor::zeros(std::size_t samples, std::size_t steps,
                                           std::size_t dim) {
  return HiddenStateTensor(samples, steps, dim, std::vector<double>(samples * steps * dim, 0.0));
}

bool HiddenStateTensor::valid(std::size_t s, std::size_t t) const { return t < lengths_.at(s); }

std::size_t HiddenStateTensor::valid_length(std::size_t s) const { return lengths_.at(s); }

std::size_t HiddenStateTensor::valid_count() const {
  std::size_t total = 0;
  for (auto len : lengths_)
    total += len;
  return total;
}

double &HiddenStateTensor::at(std::size_t s, std::size_t t, std::size_t i) {
  return data_[(s * steps_ + t) * dim_ + i];
}

double HiddenStateTensor::at(std::size_t s, std::size_t t, std::size_t i) const {
  return data_[(s * steps_ + t) * dim_ + i];
}

Eigen::Map<const Eigen::RowVectorXd> HiddenStateTensor::state(std::size_t s, std::size_t t) const {
  return {data_.data() + (s * steps_ + t) * dim_, static_cast<Eigen::Index>(dim_)};
}

Eigen::Map<Eigen::RowVectorXd> HiddenStateTensor::state(std::size_t s, std::size_t t) {
  return {data_.data() + (s * steps_ + t) * dim_, static_cast<Eigen::Index>(dim_)};
}

RealMatrix HiddenStateTensor::time_slice(std::size_t t) const {
  if (t >= steps_)
    throw ArgumentError("time_slice: step " + std::to_string(t) + " out of range");
  RealMatrix out(samples_, dim_);
  for (std::size_t s = 0; s < samples_; ++s)
    out.row(static_cast<Eigen::Index>(s)) = state(s, t);
  return out;
}

RealMatrix HiddenStateTensor::valid_rows() const {
  RealMatrix out(static_cast<Eigen::Index>(valid_count()), static_cast<Eigen::Index>(dim_));
  Eigen::Index row = 0;
  for (std::size_t s = 0; s < samples_; ++s)
    for (std::size_t t = 0; t < lengths_[s]; ++t)
      out.row(row++) = state(s, t);
  return out;
}

HiddenStateTensor HiddenStateTensor::without_mask() const {
  return HiddenStateTensor(samples_, steps_, dim_, data_);
}

HiddenStateTensor HiddenStateTensor::with_mask(std::vector<std::uint8_t> mask) const {
  return HiddenStateTensor(samples_, steps_, dim_, data_, std::move(mask));
}

StatePairs flatten_valid(const HiddenStateTensor &t, bool include_padding) {
  const HiddenStateTensor &src = t;
  std::size_t rows = 0;
  for (std::size_t s = 0; s < src.samples(); ++s) {
    const std::size_t len = include_padding ? src.steps() : src.valid_length(s);
    if (len < 2)
      throw ValidationError("flatten_valid: sample " + std::to_string(s) + " has " +
                            std::to_string(len) + " valid step(s), at least 2 required");
    rows += len - 1;
  }

  const auto k = static_cast<Eigen::Index>(src.dim());
  StatePairs out{RealMatrix(static_cast<Eigen::Index>(rows), k),
                 RealMatrix(static_cast<Eigen::Index>(rows), k)};
  Eigen::Index row = 0;
  for (std::size_t s = 0; s < src.samples(); ++s) {
    const std::size_t len = include_padding ? src.steps() : src.valid_length(s);
    for (std::size_t i = 0; i + 1 < len; ++i, ++row) {
      out.current.row(row) = src.state(s, i);
      out.next.row(row) = src.state(s, i + 1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Labels

std::vector<int> load_labels(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open '" + path.string() + "': " + std::strerror(errno));
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    std::size_t used = 0;
    long value = -1;
    try {
      value = std::stol(line, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != line.size() || value < 0)
      throw ValidationError("'" + path.string() + "' line " + std::to_string(lineno) +
                            ": expected a non-negative integer, got '" + line + "'");
    labels.push_back(static_cast<int>(value));
  }
  return labels;
}

void save_labels(std::span<const int> labels, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw IoError("cannot write '" + path.string() + "': " + std::strerror(errno));
  for (int label : labels)
    out << label << '\n';
  if (!out)
    throw IoError("write to '" + path.string() + "' failed");
}

// ---------------------------------------------------------------------------
// Readout

std::string to_string(ReadoutKind kind) {
  return kind == ReadoutKind::ArgmaxClassifier ? "argmax-classifier" : "sigmoid-binary";
}

ReadoutKind parse_readout_kind(const std::string &text) {
  if (text == "argmax-classifier")
    return ReadoutKind::ArgmaxClassifier;
  if (text == "sigmoid-binary")
    return ReadoutKind::SigmoidBinary;
  throw ArgumentError("unknown readout kind '" + text +
                      "' (expected argmax-classifier or sigmoid-binary)");
}

std::size_t ReadoutHead::categories() const {
  return kind == ReadoutKind::SigmoidBinary ? 2 : static_cast<std::size_t>(weights.cols());
}

void validate(const ReadoutHead &head) {
  if (head.weights.cols() < 1)
    throw ValidationError("readout: at least one output column required");
  if (head.bias.size() != head.weights.cols())
    throw DimensionError("readout: bias has " + std::to_string(head.bias.size()) +
                         " entries for " + std::to_string(head.weights.cols()) + " outputs");
  if (head.kind == ReadoutKind::SigmoidBinary && head.weights.cols() != 1)
    throw DimensionError("readout: sigmoid-binary head must have exactly one logit column");
  require_finite(head.weights, "readout weights");
  require_finite(head.bias, "readout bias");
}

ReadoutOutput apply_readout(const ReadoutHead &head, const RealMatrix &states) {
  validate(head);
  if (states.cols() != head.weights.rows())
    throw DimensionError("apply_readout: states have " + std::to_string(states.cols()) +
                         " columns, head expects " + std::to_string(head.weights.rows()));
  ReadoutOutput out;
  out.logits = (states * head.weights).rowwise() + head.bias.transpose();
  out.categories.resize(static_cast<std::size_t>(states.rows()));
  for (Eigen::Index i = 0; i < out.logits.rows(); ++i) {
    if (head.kind == ReadoutKind::SigmoidBinary) {
      const double p = 1.0 / (1.0 + std::exp(-out.logits(i, 0)));
      out.categories[static_cast<std::size_t>(i)] = p > 0.5 ? 1 : 0;
    } else {
      Eigen::Index best = 0;
      for (Eigen::Index j = 1; j < out.logits.cols(); ++j)
        if (out.logits(i, j) > out.logits(i, best))
          best = j;
      out.categories[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Manifest

std::filesystem::path DatasetManifest::resolve(const std::string &p) const {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

DatasetManifest load_manifest(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open manifest '" + path.string() + "': " + std::strerror(errno));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError("manifest '" + path.string() + "': " + e.what());
  }
  if (!j.is_object())
    throw ValidationError("manifest '" + path.string() + "': top level must be an object");

  const auto required = [&](const char *key) {
    if (!j.contains(key) || !j[key].is_string())
      throw ValidationError("manifest '" + path.string() + "': missing string field '" + key + "'");
    return j[key].get<std::string>();
  };
  const auto optional = [&](const char *key) -> std::optional<std::string> {
    if (!j.contains(key) || j[key].is_null())
      return std::nullopt;
    if (!j[key].is_string())
      throw ValidationError("manifest '" + path.string() + "': field '" + key + "' must be a string");
    return j[key].get<std::string>();
  };

  DatasetManifest m;
  m.base_dir = path.parent_path();
  m.name = required("name");
  m.tensor_path = required("tensor_path");
  m.labels_path = optional("labels_path");
  m.mask_path = optional("mask_path");
  m.readout_path = optional("readout_path");
  m.readout_bias_path = optional("readout_bias_path");
  if (auto kind = optional("readout_kind"))
    m.readout_kind = parse_readout_kind(*kind);

  for (const auto &p : {std::optional<std::string>(m.tensor_path), m.labels_path, m.mask_path,
                        m.readout_path, m.readout_bias_path}) {
    if (p && !std::filesystem::exists(m.resolve(*p)))
      throw IoError("manifest '" + path.string() + "' references missing file '" +
                    m.resolve(*p).string() + "'");
  }
  return m;
}

void save_manifest(const DatasetManifest &m, const std::filesystem::path &path) {
  nlohmann::ordered_json j;
  j["name"] = m.name;
  j["tensor_path"] = m.tensor_path;
  if (m.labels_path)
    j["labels_path"] = *m.labels_path;
  if (m.mask_path)
    j["mask_path"] = *m.mask_path;
  if (m.readout_path)
    j["readout_path"] = *m.readout_path;
  if (m.readout_bias_path)
    j["readout_bias_path"] = *m.readout_bias_path;
  if (m.readout_kind)
    j["readout_kind"] = to_string(*m.readout_kind);
  std::ofstream out(path, std::ios::trunc);
  if (!out)
    throw IoError("cannot write manifest '" + path.string() + "': " + std::strerror(errno));
  out << j.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path &manifest_path) {
  Dataset d;
  d.manifest = load_manifest(manifest_path);
  const auto &m = d.manifest;
  d.states = load_tensor(m.resolve(m.tensor_path));
  if (m.mask_path)
    d.states = d.states.with_mask(
        load_mask(m.resolve(*m.mask_path), d.states.samples(), d.states.steps()));
  if (m.labels_path) {
    d.labels = load_labels(m.resolve(*m.labels_path));
    if (d.labels->size() != d.states.samples())
      throw ValidationError("labels file has " + std::to_string(d.labels->size()) +
                            " entries for " + std::to_string(d.states.samples()) + " samples");
  }
  if (m.readout_path) {
    ReadoutHead head;
    head.weights = load_matrix(m.resolve(*m.readout_path));
    head.bias = m.readout_bias_path ? load_vector(m.resolve(*m.readout_bias_path))
                                    : RealVector::Zero(head.weights.cols());
    head.kind = m.readout_kind.value_or(ReadoutKind::ArgmaxClassifier);
    validate(head);
    if (static_cast<std::size_t>(head.weights.rows()) != d.states.dim())
      throw DimensionError("readout weights have " + std::to_string(head.weights.rows()) +
                           " rows, states have dimension " + std::to_string(d.states.dim()));
    d.readout = std::move(head);
  }
  return d;
}

} // namespace kann
