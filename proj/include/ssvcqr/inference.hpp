#pragma once

#include "ssvcqr/spatial_graph.hpp"
#include "ssvcqr/types.hpp"

namespace ssvcqr {

/// Plug-in sandwich covariance for the parametric block (alpha, beta_G).
struct SandwichEstimate {
  Mat m_hat;            // n^-1 sum f_i(0) G_i G_i'
  Mat v_hat;            // tau(1-tau) n^-1 sum G_i G_i'
  Mat covariance;       // M^-1 V M^-1 / n
  Vec standard_errors;  // sqrt of the covariance diagonal
  double density_bandwidth = 0.0;
};

/// KKT residual at a fitted state: score norms of the parametric block plus
/// the distance of each group's stationarity vector to the scaled
/// subdifferential of the group norm.
double kkt_residual(const SpatialDataset& dataset, const SpatialGraph& graph,
                    const ParameterState& state, const PenaltyConfig& penalty);

/// Pooled Gaussian-kernel density of the residuals evaluated at zero,
/// broadcast to all observations. bandwidth <= 0 selects Silverman's rule.
Vec density_at_zero(const Vec& residuals, double bandwidth = 0.0);

SandwichEstimate sandwich(const SpatialDataset& dataset,
                          const ParameterState& state, double tau,
                          double bandwidth = 0.0);

/// 1 - CL(model)/CL(null), null predicting the sample tau-quantile.
double pseudo_r2(const Vec& heldout_y, const Vec& predictions, double tau);

struct MoransI {
  double statistic;
  double p_value;  // two-sided, normal approximation under randomization
};

MoransI morans_i(const Vec& residuals, const SpatialGraph& graph);

}  // namespace ssvcqr
