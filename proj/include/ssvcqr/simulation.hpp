#pragma once

#include "ssvcqr/rng.hpp"
#include "ssvcqr/spatial_graph.hpp"
#include "ssvcqr/tuning.hpp"
#include "ssvcqr/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ssvcqr {

enum class ErrorLaw { normal, ald, t3, contaminated, cauchy, hetero_t3 };

ErrorLaw parse_error_law(const std::string& name);
std::string error_law_name(ErrorLaw law);

/// Data-generating process on the unit square: Z = (1, N, N), four standard
/// normal X columns, two truly local deviation fields
///   delta_1(u) = a1 * (sin(2 pi u1) cos(2 pi u2) + c1 (u1 - 0.5))
///   delta_3(u) = a3 * ((u1 - 0.5)^2 + (u2 - 0.5)^2)
/// and noise whose tau-quantile is zero.
struct DgpConfig {
  int n = 500;
  double tau = 0.5;
  Vec alpha0 = (Vec(3) << 3.0, -1.0, 1.5).finished();
  Vec beta_g0 = (Vec(4) << 5.0, 0.0, 2.5, 0.0).finished();
  double a1 = 4.5;
  double c1 = 1.0;
  double a3 = 16.6;
  ErrorLaw law = ErrorLaw::normal;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  GraphConfig graph;
};

/// Generated sample together with the centered ground truth. true_state
/// re-splits the raw fields so each delta is degree-weight centered on the
/// shared graph and beta_g absorbs the removed means; the predictor is
/// unchanged by the re-split.
struct GeneratedData {
  SpatialDataset dataset;
  ParameterState true_state;
  SpatialGraph graph;
  std::vector<bool> true_local;
};

GeneratedData generate_dataset(const DgpConfig& config);

/// Test draw without the graph/centering bookkeeping (raw fields define the
/// predictor exactly).
SpatialDataset generate_test_set(const DgpConfig& config, int n_test,
                                 std::uint64_t stream);

/// One noise draw centered so its tau-quantile is zero. The hetero_t3 law
/// scales by sigma(u) = 0.5 + 0.5 u1 and ignores config sigma.
double sample_error(ErrorLaw law, double sigma, const Location& u, double tau,
                    CounterRng& rng);

/// tau-quantile of the un-centered law (what sample_error subtracts).
double error_quantile(ErrorLaw law, double sigma, double tau);

/// Declares group j local when sqrt(mean delta_j^2) > kappa (strict).
std::vector<bool> classify_local(const ParameterState& state, double kappa);

struct McMetrics {
  double pe_theta = 0.0;
  Vec mse_delta;  // per group
  double sensitivity = 1.0;
  double specificity = 1.0;
  double cl_test = 0.0;
};

/// PE, deviation MSEs, selection accuracy against true_local, and held-out
/// check loss with 1-NN deviation transfer to the test locations.
McMetrics compute_metrics(const ParameterState& fit_state,
                          const ParameterState& true_state,
                          const std::vector<bool>& true_local,
                          const std::vector<Location>& train_locations,
                          const SpatialDataset& test_data, double kappa,
                          double tau);

enum class McModel { ss_svcqr, global_qr };

struct McSummary {
  ErrorLaw law;
  int replicates = 0;
  int failures = 0;
  std::vector<McMetrics> rows;  // successful replicates, in order
  McMetrics mean;
  McMetrics sd;  // zero-filled when fewer than 2 successes
};

/// Runs R replicates: fresh dataset and test set per replicate (streams
/// derived from the master seed), CV-tuned fit (or the global-QR baseline),
/// metrics, and a mean/sd summary reduced in replicate order.
McSummary run_monte_carlo(const DgpConfig& config, int replicates,
                          const TwoStageOptions& options, McModel model,
                          double kappa = 0.1);

/// Global quantile regression baseline (deviations pinned at zero).
FitResult fit_global_qr_baseline(const SpatialDataset& dataset,
                                 const SpatialGraph& graph, double tau,
                                 const AdmmConfig& config);

}  // namespace ssvcqr
