#pragma once

#include "ssvcqr/admm_solver.hpp"
#include "ssvcqr/spg_solver.hpp"
#include "ssvcqr/types.hpp"

#include <cstdint>
#include <vector>

namespace ssvcqr {

/// Spatially blocked cross-validation plan: contiguous spatial blocks, one
/// fold id per observation.
struct CvPlan {
  int K = 5;
  std::vector<int> fold;  // node -> fold id in [0, K)
  std::uint64_t seed = 0;
};

struct LambdaGrid {
  std::vector<double> lambda1_values;  // sorted ascending
  std::vector<double> lambda2_values;
  double lambda1_anchor = 0.0;
  double lambda2_anchor = 0.0;
};

struct CvEntry {
  double lambda1;
  double lambda2;
  int fold;
  double heldout_checkloss;  // mean check loss on the held-out fold
};

struct CvResult {
  double best_lambda1 = 0.0;
  double best_lambda2 = 0.0;
  std::vector<CvEntry> table;
  CvPlan plan;  // plan actually used (may differ from input after retries)
  int retries = 0;
};

/// Partitions the bounding box into a ceil(sqrt(K))^2 cell grid and merges
/// cells in boustrophedon order into K contiguous blocks of near-equal size.
CvPlan make_spatial_folds(const std::vector<Location>& locations, int K,
                          std::uint64_t seed);

/// Heuristic grid anchors: lambda2 at the median nonzero Laplacian
/// eigenvalue over n, lambda1 at the score scale sqrt(tau(1-tau)) *
/// mad_scale(y) * sqrt(max(log p, 1)/n). Nine log-spaced points per axis
/// spanning anchor * [1e-2, 1e2].
LambdaGrid lambda_anchors(const SpatialDataset& dataset,
                          const SpatialGraph& graph, double tau);

/// w_j = (||pilot delta_j|| + a)^(-gamma).
Vec adaptive_weights(const ParameterState& pilot_state, double a,
                     double gamma);

/// Index of the nearest training location for each query location.
std::vector<int> nearest_neighbor_indices(
    const std::vector<Location>& train_locations,
    const std::vector<Location>& query_locations);

/// Held-out prediction from a fitted state: parametric part evaluated
/// directly, deviation fields transferred by 1-nearest-training-neighbor.
Vec predict_transfer(const Mat& Z, const Mat& X,
                     const std::vector<Location>& query_locations,
                     const std::vector<Location>& train_locations,
                     const ParameterState& state);

/**
 * Spatially blocked cross-validation over the lambda grid.
 *
 * For each fold the graph and Laplacian are rebuilt from training locations
 * only, so no edge can touch a held-out index. Held-out deviations use 1-NN
 * transfer. A fold that would empty a component of the full graph rejects
 * the plan; a fresh plan is drawn (at most 5 retries). Ties in mean
 * held-out loss break toward larger lambda1, then larger lambda2.
 */
CvResult cross_validate(const SpatialDataset& dataset, const CvPlan& plan,
                        const LambdaGrid& grid, double tau, const Vec& weights,
                        const GraphConfig& graph_config,
                        const AdmmConfig& solver_config, int threads = 1);

enum class SolverKind { admm, spg };

struct TwoStageOptions {
  GraphConfig graph;
  double tau = 0.5;
  int cv_folds = 5;
  std::uint64_t seed = 0;
  bool use_cv = true;       // false: fit at the fixed lambdas below
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  SolverKind solver = SolverKind::admm;
  AdmmConfig admm;          // final fit
  AdmmConfig cv_admm;       // per-fold fits (looser defaults)
  SpgConfig spg;
  double weight_a_factor = 0.01;  // a = factor * mad_scale(y)
  double weight_gamma = 1.0;
  int threads = 1;
  const SpatialGraph* prebuilt_graph = nullptr;  // must match locations

  TwoStageOptions() {
    cv_admm.eps_abs = 1e-4;
    cv_admm.eps_rel = 1e-3;
    cv_admm.max_iter = 300;
    cv_admm.cg_tol = 1e-6;
    cv_admm.cg_max_iter = 200;
    cv_admm.record_trace = false;
  }
};

struct TwoStageResult {
  FitResult fit;
  PenaltyConfig penalty;   // penalty of the final fit (lambdas + weights)
  LambdaGrid grid;
  CvResult cv;             // empty table when use_cv is false
  Vec weights;
  SpatialGraph graph;
};

/// Stage 1: pilot at (0.01 * anchor1, anchor2) with unit weights to obtain
/// adaptive weights. Stage 2: blocked CV over the anchored grid with the
/// weights held fixed, then a final fit at the selected pair.
TwoStageResult two_stage_fit(const SpatialDataset& dataset,
                             const TwoStageOptions& options);

}  // namespace ssvcqr
