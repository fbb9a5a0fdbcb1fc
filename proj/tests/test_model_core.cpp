#include "ssvcqr/model_core.hpp"

#include "ssvcqr/quantile_loss.hpp"
#include "ssvcqr/rng.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace ssvcqr;
using ssvcqr::testing::random_dataset;
using ssvcqr::testing::random_state;

namespace {

// Scalar-loop oracle for the predictor.
Vec predict_oracle(const SpatialDataset& d, const ParameterState& s) {
  Vec out(d.n());
  for (int i = 0; i < d.n(); ++i) {
    double v = 0.0;
    for (int j = 0; j < d.q(); ++j) v += d.Z(i, j) * s.alpha[j];
    for (int j = 0; j < d.p(); ++j)
      v += d.X(i, j) * (s.beta_g[j] + s.delta[j][i]);
    out[i] = v;
  }
  return out;
}

}  // namespace

TEST_CASE("predict_quantile: zero state and constant model") {
  CounterRng rng(7);
  SpatialDataset d = random_dataset(30, 2, 3, rng);
  ParameterState zero = ParameterState::zeros(2, 3, 30);
  CHECK(predict_quantile(d, zero).norm() == 0.0);

  SpatialDataset intercept_only = random_dataset(20, 1, 1, rng);
  ParameterState s = ParameterState::zeros(1, 1, 20);
  s.alpha[0] = 4.25;
  CHECK((predict_quantile(intercept_only, s) - Vec::Constant(20, 4.25)).norm()
        == 0.0);
}

TEST_CASE("predict_quantile and residuals match a scalar-loop oracle") {
  CounterRng rng(17);
  SpatialDataset d = random_dataset(50, 2, 3, rng);
  const SpatialGraph g = build_graph(d.locations, 4, std::nullopt);
  const ParameterState s = random_state(2, 3, 50, g, rng);
  const Vec oracle = predict_oracle(d, s);
  CHECK((predict_quantile(d, s) - oracle).norm() <=
        1e-12 * (1.0 + oracle.norm()));
  CHECK((residuals(d, s) - (d.y - oracle)).norm() <=
        1e-12 * (1.0 + oracle.norm()));

  ParameterState zero = ParameterState::zeros(2, 3, 50);
  CHECK((residuals(d, zero) - d.y).norm() == 0.0);
}

TEST_CASE("objective: pinned reductions and scalar oracle") {
  CounterRng rng(27);
  SpatialDataset d = random_dataset(40, 2, 2, rng);
  const SpatialGraph g = build_graph(d.locations, 4, std::nullopt);
  const ParameterState s = random_state(2, 2, 40, g, rng);

  PenaltyConfig pen;
  pen.tau = 0.35;
  pen.weights = Vec::Ones(2);

  // Perfect fit with zero deltas gives exactly zero.
  SpatialDataset exact = d;
  ParameterState s0 = ParameterState::zeros(2, 2, 40);
  s0.alpha << 1.0, -2.0;
  s0.beta_g << 0.5, 0.25;
  exact.y = predict_quantile(exact, s0);
  PenaltyConfig pen_active = pen;
  pen_active.lambda1 = 0.7;
  pen_active.lambda2 = 0.3;
  CHECK(objective(exact, g, s0, pen_active) == 0.0);

  // lambda1 = lambda2 = 0 reduces to the plain check-loss sum.
  CHECK(objective(d, g, s, pen) ==
        doctest::Approx(check_loss_sum(residuals(d, s), pen.tau))
            .epsilon(1e-12));

  // Full objective against an independent scalar recomputation.
  pen.lambda1 = 0.6;
  pen.lambda2 = 0.2;
  pen.weights << 1.5, 0.5;
  double manual = 0.0;
  const Vec r = d.y - predict_oracle(d, s);
  for (int i = 0; i < d.n(); ++i) manual += rho(r[i], pen.tau);
  for (int j = 0; j < 2; ++j) {
    manual += pen.lambda1 * pen.weights[j] * s.delta[j].norm();
    manual += pen.lambda2 * s.delta[j].dot(g.laplacian_apply(s.delta[j]));
  }
  CHECK(objective(d, g, s, pen) == doctest::Approx(manual).epsilon(1e-10));
}

TEST_CASE("objective is convex along random segments") {
  CounterRng rng(37);
  SpatialDataset d = random_dataset(35, 2, 2, rng);
  const SpatialGraph g = build_graph(d.locations, 3, std::nullopt);
  PenaltyConfig pen;
  pen.tau = 0.6;
  pen.lambda1 = 0.4;
  pen.lambda2 = 0.15;
  pen.weights = Vec::Ones(2);
  for (int rep = 0; rep < 50; ++rep) {
    const ParameterState s1 = random_state(2, 2, 35, g, rng);
    const ParameterState s2 = random_state(2, 2, 35, g, rng);
    const double t = rng.next_double();
    ParameterState mix = s1;
    mix.alpha = t * s1.alpha + (1 - t) * s2.alpha;
    mix.beta_g = t * s1.beta_g + (1 - t) * s2.beta_g;
    for (int j = 0; j < 2; ++j)
      mix.delta[j] = t * s1.delta[j] + (1 - t) * s2.delta[j];
    CHECK(objective(d, g, mix, pen) <=
          t * objective(d, g, s1, pen) + (1 - t) * objective(d, g, s2, pen) +
              1e-9);
  }
}

TEST_CASE("identifiability: recentering delta and compensating beta_G") {
  CounterRng rng(47);
  SpatialDataset d = random_dataset(45, 2, 2, rng);
  const SpatialGraph g = build_graph(d.locations, 4, std::nullopt);
  REQUIRE(g.num_components() == 1);

  ParameterState s = random_state(2, 2, 45, g, rng, /*centered=*/false);
  const Vec before = predict_quantile(d, s);

  // Center delta_0 and move its removed degree-weighted mean into beta_G.
  const double mean =
      g.degrees().dot(s.delta[0]) / g.degrees().sum();
  s.delta[0] = g.project_centered(s.delta[0]);
  s.beta_g[0] += mean;
  const Vec after = predict_quantile(d, s);
  CHECK((before - after).norm() <= 1e-10 * (1.0 + before.norm()));
}

TEST_CASE("dataset validation rejects bad shapes and non-finite data") {
  CounterRng rng(57);
  SpatialDataset d = random_dataset(20, 2, 2, rng);
  CHECK_NOTHROW(d.validate());
  SpatialDataset bad = d;
  bad.y.resize(19);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = d;
  bad.X(3, 1) = std::nan("");
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  ParameterState s = ParameterState::zeros(2, 3, 20);
  CHECK_THROWS_AS(predict_quantile(d, s), std::invalid_argument);
}
