#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace ssvcqr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A 2-D sampling location; coordinates are expected to be rescaled to [0,1].
struct Location {
  double u1 = 0.0;
  double u2 = 0.0;
};

/// Spatial regression dataset: response, global block Z, varying-candidate
/// block X, and one location per observation.
struct SpatialDataset {
  Vec y;                            // n responses
  Mat Z;                            // n x q global covariates
  Mat X;                            // n x p varying-candidate covariates
  std::vector<Location> locations;  // length n

  int n() const { return static_cast<int>(y.size()); }
  int q() const { return static_cast<int>(Z.cols()); }
  int p() const { return static_cast<int>(X.cols()); }

  // Throws std::invalid_argument on inconsistent row counts or non-finite
  // entries.
  void validate() const;
};

/// Model parameters: global coefficients plus one deviation field per
/// varying-candidate column. Each delta[j] is degree-weight centered on
/// every graph component.
struct ParameterState {
  Vec alpha;               // q
  Vec beta_g;              // p
  std::vector<Vec> delta;  // p vectors, each of length n

  static ParameterState zeros(int q, int p, int n);
};

/// Penalty configuration for the composite objective.
struct PenaltyConfig {
  double tau = 0.5;      // quantile level, strictly in (0,1)
  double lambda1 = 0.0;  // group-sparsity penalty
  double lambda2 = 0.0;  // Laplacian smoothness penalty
  Vec weights;           // p positive group weights
  double a = 0.01;       // adaptive-weight stabilizer
  double gamma = 1.0;    // adaptive-weight exponent, in (0,1]

  void validate(int p) const;
};

/// Result of a solver run. `state.delta` holds the exactly-sparse reported
/// deviations (the z-copies for ADMM), so inactive groups are bitwise zero.
struct FitResult {
  ParameterState state;
  std::vector<bool> selected;          // per group: delta_j != 0
  std::vector<double> objective_trace; // objective of reportable iterate
  double objective = 0.0;              // final unsmoothed objective
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string solver;
};

}  // namespace ssvcqr
