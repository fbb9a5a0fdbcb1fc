#pragma once

#include "ssvcqr/model_core.hpp"
#include "ssvcqr/spatial_graph.hpp"
#include "ssvcqr/types.hpp"

namespace ssvcqr {

struct SpgConfig {
  double h_init = -1.0;  // <= 0: 1.0 * mad_scale(y)
  double h_min = -1.0;   // <= 0: 1e-4 * mad_scale(y)
  double continuation_factor = 0.5;
  double step_init = 1.0;
  double backtrack_factor = 0.5;
  int max_iter = 20000;
  double objective_tol = 1e-9;  // relative decrease defining stagnation
  double kkt_tol = 1e-8;        // on the smoothed-problem optimality residual
  int stagnation_window = 50;
  bool record_trace = false;
};

struct SpgGradients {
  Vec alpha;
  Vec beta_g;
  std::vector<Vec> delta;
};

/// Gradient blocks of the smooth part G_h = sum M_h(r_i) + lambda2 * sum
/// delta_j' L delta_j at the given state.
SpgGradients smooth_gradient(const SpatialDataset& dataset,
                             const SpatialGraph& graph,
                             const ParameterState& state,
                             const PenaltyConfig& penalty, double h);

/// Value of G_h at the state.
double smooth_value(const SpatialDataset& dataset, const SpatialGraph& graph,
                    const ParameterState& state, const PenaltyConfig& penalty,
                    double h);

/// One proximal step: gradient step on (alpha, beta_G); group shrink with
/// threshold step*lambda1*w_j then centering projection on each delta_j.
ParameterState spg_step(const ParameterState& state, const SpgGradients& grads,
                        double step, const PenaltyConfig& penalty,
                        const SpatialGraph& graph);

/// FISTA with backtracking, function-value restart, and continuation
/// h -> h_min. The returned objective is the unsmoothed one.
FitResult fit_spg(const SpatialDataset& dataset, const SpatialGraph& graph,
                  const PenaltyConfig& penalty, const SpgConfig& config);

}  // namespace ssvcqr
