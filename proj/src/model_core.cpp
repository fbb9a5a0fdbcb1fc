#include "ssvcqr/model_core.hpp"

#include "ssvcqr/quantile_loss.hpp"

#include <cmath>
#include <stdexcept>

namespace ssvcqr {

void SpatialDataset::validate() const {
  const int nn = n();
  if (Z.rows() != nn || X.rows() != nn ||
      static_cast<int>(locations.size()) != nn)
    throw std::invalid_argument("SpatialDataset: inconsistent row counts");
  if (q() < 1) throw std::invalid_argument("SpatialDataset: q must be >= 1");
  if (!y.allFinite() || !Z.allFinite() || !X.allFinite())
    throw std::invalid_argument("SpatialDataset: non-finite entries");
  for (const auto& loc : locations)
    if (!std::isfinite(loc.u1) || !std::isfinite(loc.u2))
      throw std::invalid_argument("SpatialDataset: non-finite location");
}

ParameterState ParameterState::zeros(int q, int p, int n) {
  ParameterState s;
  s.alpha = Vec::Zero(q);
  s.beta_g = Vec::Zero(p);
  s.delta.assign(p, Vec::Zero(n));
  return s;
}

void PenaltyConfig::validate(int p) const {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("PenaltyConfig: tau must be in (0,1)");
  if (lambda1 < 0.0 || lambda2 < 0.0)
    throw std::invalid_argument("PenaltyConfig: negative penalty");
  if (weights.size() != p)
    throw std::invalid_argument("PenaltyConfig: weights length != p");
  for (Eigen::Index j = 0; j < weights.size(); ++j)
    if (!(weights[j] > 0.0) || !std::isfinite(weights[j]))
      throw std::invalid_argument("PenaltyConfig: weights must be positive");
}

Vec predict_quantile(const SpatialDataset& dataset,
                     const ParameterState& state) {
  const int p = dataset.p();
  if (state.alpha.size() != dataset.q() || state.beta_g.size() != p ||
      static_cast<int>(state.delta.size()) != p)
    throw std::invalid_argument("predict_quantile: dimension mismatch");
  Vec q = dataset.Z * state.alpha;
  if (p > 0) q += dataset.X * state.beta_g;
  for (int j = 0; j < p; ++j) {
    if (state.delta[j].size() != dataset.n())
      throw std::invalid_argument("predict_quantile: delta length mismatch");
    q += dataset.X.col(j).cwiseProduct(state.delta[j]);
  }
  return q;
}

Vec residuals(const SpatialDataset& dataset, const ParameterState& state) {
  return dataset.y - predict_quantile(dataset, state);
}

double objective(const SpatialDataset& dataset, const SpatialGraph& graph,
                 const ParameterState& state, const PenaltyConfig& config) {
  double obj = check_loss_sum(residuals(dataset, state), config.tau);
  for (int j = 0; j < dataset.p(); ++j) {
    obj += config.lambda1 * config.weights[j] * state.delta[j].norm();
    if (config.lambda2 > 0.0)
      obj += config.lambda2 * graph.roughness(state.delta[j]);
  }
  return obj;
}

}  // namespace ssvcqr
