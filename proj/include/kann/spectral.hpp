#pragma once

// Analysis built on the eigendecomposition of a fitted operator.

#include "kann/koopman.hpp"
#include "kann/numerics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace kann {

/// Eigenvalues of C (eig() order), right eigenvectors V in columns and
/// U = V^{-1}, whose rows are the Koopman eigenvectors.
struct EigenSystem {
  ComplexVector lambdas;
  ComplexMatrix right; // V
  ComplexMatrix left;  // U
  double condition = 1;
  bool defective = false;

  std::size_t size() const { return static_cast<std::size_t>(lambdas.size()); }
};

/// Columns of V get unit norm and their first non-negligible component is
/// rotated onto the positive real axis. When V cannot be inverted within the
/// condition limit, U is the pseudoinverse and `defective` is set.
EigenSystem decompose(const RealMatrix &c, const Tolerances &tol = {});
EigenSystem decompose(const KoopmanOperator &op, const Tolerances &tol = {});

/// H * B * V for each state row.
ComplexMatrix eigen_coords(const RealMatrix &states, const SpectralBasis &basis,
                           const EigenSystem &eig);

/// Mean over valid consecutive pairs of the relative deviation from diagonal
/// evolution in eigen-coordinates.
double separability_residual(const HiddenStateTensor &h, const SpectralBasis &basis,
                             const EigenSystem &eig, bool include_padding = false);

/// Lifts eigen-coordinates advanced by Lambda^power back to state space.
RealMatrix eigen_power_rollout(const RealMatrix &states, const SpectralBasis &basis,
                               const EigenSystem &eig, std::size_t power);

// ---------------------------------------------------------------------------
// Memory horizon

struct MemoryHorizon {
  enum class Kind { Finite, Infinite, Unstable };
  Kind kind = Kind::Finite;
  double steps = 0; // meaningful for Finite only

  bool finite() const { return kind == Kind::Finite; }
  /// Number as text, "inf" or "unstable".
  std::string to_string() const;
};

inline constexpr double kDefaultEpsilon = 1e-2;
inline constexpr double kUnitCircleBand = 1e-12;

/// Steps until |lambda|^tau falls to epsilon.
MemoryHorizon memory_horizon(const Complex &lambda, double epsilon = kDefaultEpsilon);

// ---------------------------------------------------------------------------
// Mode sets

/// Ordered, duplicate-free eigen-indices.
using ModeIndexSet = std::vector<std::size_t>;

/// Index of the conjugate partner of mode j, or nullopt for a real eigenvalue.
std::optional<std::size_t> conjugate_partner(const EigenSystem &eig, std::size_t j);

/// Smallest conjugate-closed superset, sorted. Throws ArgumentError on a bad index.
ModeIndexSet conjugate_closure(const EigenSystem &eig, const ModeIndexSet &modes);

bool is_conjugate_closed(const EigenSystem &eig, const ModeIndexSet &modes);

/// Parses "0,3,4" into a sorted index set.
ModeIndexSet parse_modes(const std::string &text);
std::string format_modes(const ModeIndexSet &modes);

// ---------------------------------------------------------------------------
// Projection magnitudes and subspace reconstruction

/// |coeffs^T V_j|.
double projection_magnitude(const RealVector &coeffs, const EigenSystem &eig, std::size_t j);

/// s x n matrix of summed projection magnitudes; padded steps are 0.
RealMatrix magnitude_series(const HiddenStateTensor &h, const SpectralBasis &basis,
                            const EigenSystem &eig, const ModeIndexSet &modes);

enum class ProjectorVariant {
  Modulus,  // B |V_I U_I| B^T, elementwise modulus
  RealPart, // B Re(V_I U_I) B^T, the linear projector (not the modulus form)
};

/// k x k projector onto the span of the selected modes. `modes` must be
/// conjugate-closed (ModeClosureError otherwise).
RealMatrix subspace_projector(const SpectralBasis &basis, const EigenSystem &eig,
                              const ModeIndexSet &modes,
                              ProjectorVariant variant = ProjectorVariant::Modulus);

/// Applies a projector to state rows, subtracting and restoring the basis
/// mean for centred bases.
RealMatrix apply_projector(const RealMatrix &states, const RealMatrix &projector,
                           const SpectralBasis &basis);

/// Ranks modes by |lambda| (index order) and takes `count`, closing pairs.
ModeIndexSet dominant_modes(const EigenSystem &eig, std::size_t count);
/// Ranks modes by mean projection magnitude over the valid states of `h`.
ModeIndexSet dominant_modes(const EigenSystem &eig, std::size_t count,
                            const HiddenStateTensor &h, const SpectralBasis &basis);

} // namespace kann
