#pragma once

#include "ssvcqr/types.hpp"

#include <Eigen/SparseCore>
#include <optional>
#include <vector>

namespace ssvcqr {

// Compressed row storage with sorted column indices.
using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct SpectralSummary {
  double max_eigenvalue;
  double median_nonzero_eigenvalue;
};

/// Graph hyperparameters. sigma unset means auto: the median of the k-NN
/// edge distances.
struct GraphConfig {
  int k = 8;
  std::optional<double> sigma;
};

/**
 * Gaussian-kernel k-nearest-neighbor graph over sampling locations.
 *
 * An edge (i,l) is present when either node is among the other's k nearest
 * neighbors; its weight is exp(-||u_i - u_l||^2 / sigma^2). Coincident
 * locations are always connected with weight 1. The graph is immutable once
 * built and safe to share across solver workers.
 */
class SpatialGraph {
 public:
  int n() const { return static_cast<int>(degrees_.size()); }
  int k() const { return k_; }
  double sigma() const { return sigma_; }

  const SpMat& adjacency() const { return adjacency_; }
  const Vec& degrees() const { return degrees_; }

  /// Symmetric normalized Laplacian I - D^{-1/2} A D^{-1/2}.
  const SpMat& laplacian() const { return laplacian_; }

  /// Node -> connected-component id (ids are 0..num_components-1).
  const std::vector<int>& components() const { return components_; }
  int num_components() const { return num_components_; }

  Vec laplacian_apply(const Vec& v) const;

  /// Removes the degree-weighted mean of v on every component; the result
  /// r satisfies 1_C' D r = 0 and the map is idempotent.
  Vec project_centered(const Vec& v) const;

  /// Quadratic form v' L_sym v.
  double roughness(const Vec& v) const;

  /// Largest eigenvalue and median nonzero eigenvalue of L_sym. Dense and
  /// exact for n <= 2000; Lanczos Ritz estimates with m steps otherwise.
  SpectralSummary spectral_summary(int m = 64) const;

  friend SpatialGraph build_graph(const std::vector<Location>& locations,
                                  int k, std::optional<double> sigma);

 private:
  SpMat adjacency_;
  SpMat laplacian_;
  Vec degrees_;
  std::vector<int> components_;
  int num_components_ = 0;
  int k_ = 0;
  double sigma_ = 0.0;
};

/// Builds the graph. Throws std::invalid_argument for k < 1, k >= n, or
/// nonpositive sigma, and std::runtime_error when fewer than two distinct
/// locations are supplied.
SpatialGraph build_graph(const std::vector<Location>& locations, int k,
                         std::optional<double> sigma = std::nullopt);

inline SpatialGraph build_graph(const std::vector<Location>& locations,
                                const GraphConfig& cfg) {
  return build_graph(locations, cfg.k, cfg.sigma);
}

/// Free-function forms of the member operations.
inline Vec project_centered(const SpatialGraph& g, const Vec& v) {
  return g.project_centered(v);
}
inline const SpMat& normalized_laplacian(const SpatialGraph& g) {
  return g.laplacian();
}

}  // namespace ssvcqr
