#pragma once

#include "ssvcqr/quantile_loss.hpp"
#include "ssvcqr/rng.hpp"
#include "ssvcqr/spatial_graph.hpp"
#include "ssvcqr/types.hpp"

#include <cmath>
#include <vector>

namespace ssvcqr::testing {

/// Independent 1-D oracle for prox_check: coarse grid over the feasible
/// bracket followed by ternary refinement of rho_tau(s) + (s-v)^2/(2 gamma).
inline double prox_grid_oracle(double v, double gamma, double tau) {
  auto f = [&](double s) {
    return rho(s, tau) + (s - v) * (s - v) / (2.0 * gamma);
  };
  double lo = -std::abs(v) - gamma - 1.0;
  double hi = std::abs(v) + gamma + 1.0;
  double best = 0.0, best_val = f(0.0);
  const int grid = 2000;
  for (int i = 0; i <= grid; ++i) {
    const double s = lo + (hi - lo) * i / grid;
    const double val = f(s);
    if (val < best_val) {
      best_val = val;
      best = s;
    }
  }
  double a = best - (hi - lo) / grid;
  double b = best + (hi - lo) / grid;
  for (int it = 0; it < 200; ++it) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (f(m1) < f(m2))
      b = m2;
    else
      a = m1;
  }
  return 0.5 * (a + b);
}

/// Scalar line-search oracle for group_shrink along the ray through v.
inline Vec group_shrink_ray_oracle(const Vec& v, double kappa) {
  const double norm = v.norm();
  if (norm == 0.0) return Vec::Zero(v.size());
  auto f = [&](double t) {
    // z = t * v / ||v||; objective 0.5||z - v||^2 + kappa ||z||
    return 0.5 * (t - norm) * (t - norm) + kappa * std::abs(t);
  };
  double a = 0.0, b = norm + kappa + 1.0;
  for (int it = 0; it < 300; ++it) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (f(m1) < f(m2))
      b = m2;
    else
      a = m1;
  }
  return (0.5 * (a + b) / norm) * v;
}

inline std::vector<Location> random_locations(int n, CounterRng& rng) {
  std::vector<Location> locs(n);
  for (auto& loc : locs) loc = {rng.next_double(), rng.next_double()};
  return locs;
}

inline SpatialDataset random_dataset(int n, int q, int p, CounterRng& rng) {
  SpatialDataset d;
  d.locations = random_locations(n, rng);
  d.Z.resize(n, q);
  d.Z.col(0).setOnes();
  for (int j = 1; j < q; ++j)
    for (int i = 0; i < n; ++i) d.Z(i, j) = rng.normal();
  d.X.resize(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) d.X(i, j) = rng.normal();
  d.y.resize(n);
  for (int i = 0; i < n; ++i) d.y[i] = rng.normal();
  return d;
}

inline ParameterState random_state(int q, int p, int n, const SpatialGraph& g,
                                   CounterRng& rng, bool centered = true) {
  ParameterState s = ParameterState::zeros(q, p, n);
  for (int j = 0; j < q; ++j) s.alpha[j] = rng.normal();
  for (int j = 0; j < p; ++j) s.beta_g[j] = rng.normal();
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i < n; ++i) s.delta[j][i] = rng.normal();
    if (centered) s.delta[j] = g.project_centered(s.delta[j]);
  }
  return s;
}

}  // namespace ssvcqr::testing
