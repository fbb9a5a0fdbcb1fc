#pragma once

#include "ssvcqr/spatial_graph.hpp"
#include "ssvcqr/types.hpp"

namespace ssvcqr {

/// Conditional-quantile predictor Z*alpha + X*beta_G + sum_j X_(.j) o delta_j.
Vec predict_quantile(const SpatialDataset& dataset, const ParameterState& state);

/// y - predict_quantile.
Vec residuals(const SpatialDataset& dataset, const ParameterState& state);

/// Penalized objective: check loss + lambda1 * sum_j w_j ||delta_j|| +
/// lambda2 * sum_j delta_j' L delta_j.
double objective(const SpatialDataset& dataset, const SpatialGraph& graph,
                 const ParameterState& state, const PenaltyConfig& config);

}  // namespace ssvcqr
