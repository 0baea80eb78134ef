#pragma once

// Latent-separation and surrogate-agreement metrics.

#include "kann/koopman.hpp"
#include "kann/spectral.hpp"

#include <span>
#include <string>
#include <vector>

namespace kann {

/// Per-point silhouette values. Singleton clusters and the a = b = 0 case score 0.
std::vector<double> silhouette_points(const RealMatrix &points, std::span<const int> labels);

enum class Embedding {
  Raw,            // basis coefficients
  PcaTop,         // first d basis coefficients
  KoopmanTop,     // (Re, Im) of eigen-coordinates on the top-d dominant modes
  KoopmanModulus, // |eigen-coordinate| on the same modes
};

std::string to_string(Embedding e);

struct SilhouetteCurve {
  std::vector<double> values; // length n, cumulative mean up to each step
  RealMatrix per_point;       // s x n, 0 on padded steps
};

/// Per-step silhouettes of embedded states compared within each time slice,
/// cumulatively averaged over time. The Koopman embeddings need `eig`.
SilhouetteCurve silhouette_curve(const HiddenStateTensor &h, const SpectralBasis &basis,
                                 std::span<const int> labels, Embedding embedding, std::size_t d,
                                 const EigenSystem *eig = nullptr);

struct AgreementReport {
  std::size_t total = 0;
  std::size_t matching = 0;
  std::vector<std::vector<std::size_t>> confusion; // [network][surrogate]

  double rate() const { return total ? static_cast<double>(matching) / static_cast<double>(total) : 1.0; }
  friend bool operator==(const AgreementReport &, const AgreementReport &) = default;
};

AgreementReport agreement(std::span<const int> network, std::span<const int> surrogate,
                          std::size_t categories);

} // namespace kann
