#include "kann/metrics.hpp"

#include "kann/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace kann {

std::vector<double> silhouette_points(const RealMatrix &points, std::span<const int> labels) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (n == 0)
    throw ArgumentError("silhouette_points: no points");
  if (labels.size() != n)
    throw DimensionError("silhouette_points: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(n) + " points");

  // Dense cluster ids in order of first label value.
  std::map<int, std::size_t> ids;
  for (int l : labels)
    ids.emplace(l, 0);
  if (ids.size() < 2)
    throw ArgumentError("silhouette_points: at least two distinct labels required");
  std::size_t next_id = 0;
  for (auto &[label, id] : ids)
    id = next_id++;
  std::vector<std::size_t> cluster(n);
  std::vector<std::size_t> sizes(ids.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    cluster[i] = ids.at(labels[i]);
    ++sizes[cluster[i]];
  }

  std::vector<double> out(n, 0.0);
  std::vector<double> sums(ids.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t own = cluster[i];
    if (sizes[own] == 1)
      continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i)
        continue;
      sums[cluster[j]] += (points.row(static_cast<Eigen::Index>(i)) -
                           points.row(static_cast<Eigen::Index>(j)))
                              .norm();
    }
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sums.size(); ++c)
      if (c != own && sizes[c] > 0)
        b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    const double denom = std::max(a, b);
    out[i] = denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return out;
}

std::string to_string(Embedding e) {
  switch (e) {
  case Embedding::Raw:
    return "raw";
  case Embedding::PcaTop:
    return "pca";
  case Embedding::KoopmanTop:
    return "koopman";
  case Embedding::KoopmanModulus:
    return "koopman-modulus";
  }
  return "unknown";
}

namespace {

RealMatrix embed(const RealMatrix &coeffs, Embedding embedding, std::size_t d,
                 const EigenSystem *eig, const ModeIndexSet &modes) {
  switch (embedding) {
  case Embedding::Raw:
    return coeffs;
  case Embedding::PcaTop:
    return coeffs.leftCols(static_cast<Eigen::Index>(d));
  case Embedding::KoopmanTop:
  case Embedding::KoopmanModulus: {
    const ComplexMatrix coords = coeffs.cast<Complex>() * eig->right;
    const auto m = static_cast<Eigen::Index>(modes.size());
    if (embedding == Embedding::KoopmanModulus) {
      RealMatrix out(coeffs.rows(), m);
      for (Eigen::Index j = 0; j < m; ++j)
        out.col(j) = coords.col(static_cast<Eigen::Index>(modes[static_cast<std::size_t>(j)])).cwiseAbs();
      return out;
    }
    RealMatrix out(coeffs.rows(), 2 * m);
    for (Eigen::Index j = 0; j < m; ++j) {
      const auto src = static_cast<Eigen::Index>(modes[static_cast<std::size_t>(j)]);
      out.col(j) = coords.col(src).real();
      out.col(m + j) = coords.col(src).imag();
    }
    return out;
  }
  }
  return coeffs;
}

} // namespace

SilhouetteCurve silhouette_curve(const HiddenStateTensor &h, const SpectralBasis &basis,
                                 std::span<const int> labels, Embedding embedding, std::size_t d,
                                 const EigenSystem *eig) {
  if (labels.size() != h.samples())
    throw DimensionError("silhouette_curve: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(h.samples()) + " samples");
  if (std::set<int>(labels.begin(), labels.end()).size() < 2)
    throw ArgumentError("silhouette_curve: at least two classes required");
  if (embedding != Embedding::Raw && (d < 1 || d > basis.rank()))
    throw ArgumentError("silhouette_curve: embedding dimension " + std::to_string(d) +
                        " outside [1, " + std::to_string(basis.rank()) + "]");

  ModeIndexSet modes;
  if (embedding == Embedding::KoopmanTop || embedding == Embedding::KoopmanModulus) {
    if (eig == nullptr)
      throw ArgumentError("silhouette_curve: Koopman embedding requires an eigensystem");
    if (eig->size() != basis.rank())
      throw DimensionError("silhouette_curve: eigensystem size does not match basis rank");
    modes = dominant_modes(*eig, d, h, basis);
  }

  SilhouetteCurve curve;
  curve.per_point = RealMatrix::Zero(static_cast<Eigen::Index>(h.samples()),
                                     static_cast<Eigen::Index>(h.steps()));
  curve.values.assign(h.steps(), 0.0);

  double running = 0;
  std::size_t counted = 0;
  for (std::size_t t = 0; t < h.steps(); ++t) {
    std::vector<std::size_t> members;
    for (std::size_t s = 0; s < h.samples(); ++s)
      if (h.valid(s, t))
        members.push_back(s);

    if (!members.empty()) {
      RealMatrix states(static_cast<Eigen::Index>(members.size()), static_cast<Eigen::Index>(h.dim()));
      std::vector<int> slice_labels(members.size());
      for (std::size_t i = 0; i < members.size(); ++i) {
        states.row(static_cast<Eigen::Index>(i)) = h.state(members[i], t);
        slice_labels[i] = labels[members[i]];
      }
      const bool separable =
          std::set<int>(slice_labels.begin(), slice_labels.end()).size() >= 2;
      if (separable) {
        const RealMatrix points = embed(project(states, basis), embedding, d, eig, modes);
        const auto sil = silhouette_points(points, slice_labels);
        for (std::size_t i = 0; i < members.size(); ++i) {
          curve.per_point(static_cast<Eigen::Index>(members[i]), static_cast<Eigen::Index>(t)) = sil[i];
          running += sil[i];
        }
      }
      counted += members.size();
    }
    curve.values[t] = counted ? running / static_cast<double>(counted) : 0.0;
  }
  return curve;
}

AgreementReport agreement(std::span<const int> network, std::span<const int> surrogate,
                          std::size_t categories) {
  if (network.size() != surrogate.size())
    throw DimensionError("agreement: " + std::to_string(network.size()) + " network vs " +
                         std::to_string(surrogate.size()) + " surrogate categories");
  if (categories < 1)
    throw ArgumentError("agreement: at least one category required");
  AgreementReport out;
  out.total = network.size();
  out.confusion.assign(categories, std::vector<std::size_t>(categories, 0));
  for (std::size_t i = 0; i < network.size(); ++i) {
    const int a = network[i], b = surrogate[i];
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= categories ||
        static_cast<std::size_t>(b) >= categories)
      throw ArgumentError("agreement: category out of range [0, " + std::to_string(categories) +
                          ") at position " + std::to_string(i));
    ++out.confusion[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    if (a == b)
      ++out.matching;
  }
  return out;
}

} // namespace kann
