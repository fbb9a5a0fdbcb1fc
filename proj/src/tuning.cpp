#include "ssvcqr/tuning.hpp"

#include "ssvcqr/quantile_loss.hpp"
#include "ssvcqr/rng.hpp"
#include "ssvcqr/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ssvcqr {

namespace {

struct FoldGeometry {
  int grid_dim;
  double min_x, min_y, cell_w, cell_h, jx, jy;
};

int cell_of(const Location& loc, const FoldGeometry& g) {
  int cx = static_cast<int>(std::floor((loc.u1 - g.min_x) / g.cell_w - g.jx));
  int cy = static_cast<int>(std::floor((loc.u2 - g.min_y) / g.cell_h - g.jy));
  cx = std::clamp(cx, 0, g.grid_dim - 1);
  cy = std::clamp(cy, 0, g.grid_dim - 1);
  return cy * g.grid_dim + cx;
}

// attempt 0 gives the canonical axis-aligned grid; retries jitter the cell
// boundaries deterministically from (seed, attempt) so a rejected plan is
// replaced by a genuinely different one.
CvPlan make_folds_attempt(const std::vector<Location>& locations, int K,
                          std::uint64_t seed, int attempt) {
  const int n = static_cast<int>(locations.size());
  if (K < 2 || K > n / 10)
    throw std::invalid_argument("make_spatial_folds: need 2 <= K <= n/10");

  double min_x = locations[0].u1, max_x = min_x;
  double min_y = locations[0].u2, max_y = min_y;
  for (const auto& loc : locations) {
    min_x = std::min(min_x, loc.u1);
    max_x = std::max(max_x, loc.u1);
    min_y = std::min(min_y, loc.u2);
    max_y = std::max(max_y, loc.u2);
  }
  if (max_x == min_x && max_y == min_y)
    throw std::runtime_error("make_spatial_folds: degenerate geometry");
  const double span_x = std::max(max_x - min_x, 1e-12);
  const double span_y = std::max(max_y - min_y, 1e-12);

  CounterRng rng(seed, 0xF01D5000ULL + static_cast<std::uint64_t>(attempt));

  int dim = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(K))));
  FoldGeometry geom{};
  std::vector<int> cell(n);
  for (;;) {
    geom.grid_dim = dim;
    geom.min_x = min_x;
    geom.min_y = min_y;
    geom.cell_w = span_x / dim * (1.0 + 1e-12);
    geom.cell_h = span_y / dim * (1.0 + 1e-12);
    geom.jx = attempt == 0 ? 0.0 : rng.uniform(-0.45, 0.45);
    geom.jy = attempt == 0 ? 0.0 : rng.uniform(-0.45, 0.45);
    for (int i = 0; i < n; ++i) cell[i] = cell_of(locations[i], geom);
    std::vector<char> nonempty(dim * dim, 0);
    for (int c : cell) nonempty[c] = 1;
    int filled = 0;
    for (char c : nonempty) filled += c;
    if (filled >= K || dim >= 64) break;
    dim *= 2;
  }

  // Boustrophedon order over cells keeps consecutive cells adjacent, so
  // greedily accumulated folds stay contiguous.
  std::vector<int> order;
  order.reserve(dim * dim);
  for (int col = 0; col < dim; ++col) {
    if (col % 2 == 0)
      for (int row = 0; row < dim; ++row) order.push_back(row * dim + col);
    else
      for (int row = dim - 1; row >= 0; --row) order.push_back(row * dim + col);
  }

  std::vector<int> cell_count(dim * dim, 0);
  for (int c : cell) ++cell_count[c];

  std::vector<int> cell_fold(dim * dim, -1);
  int fold_id = 0;
  int assigned = 0;
  int in_fold = 0;
  for (int c : order) {
    if (cell_count[c] == 0) {
      cell_fold[c] = fold_id;  // empty cells inherit the current fold
      continue;
    }
    const int remaining_folds = K - fold_id;
    const int remaining_points = n - assigned;
    const int target = (remaining_points + remaining_folds - 1) / remaining_folds;
    if (in_fold > 0 && in_fold + cell_count[c] > target &&
        fold_id + 1 < K) {
      ++fold_id;
      in_fold = 0;
    }
    cell_fold[c] = fold_id;
    in_fold += cell_count[c];
    assigned += cell_count[c];
  }

  CvPlan plan;
  plan.K = K;
  plan.seed = seed;
  plan.fold.resize(n);
  for (int i = 0; i < n; ++i) plan.fold[i] = cell_fold[cell[i]];

  // Every fold must be nonempty.
  std::vector<int> sizes(K, 0);
  for (int f : plan.fold) ++sizes[f];
  for (int k = 0; k < K; ++k)
    if (sizes[k] == 0)
      throw std::runtime_error("make_spatial_folds: produced an empty fold");
  return plan;
}

}  // namespace

CvPlan make_spatial_folds(const std::vector<Location>& locations, int K,
                          std::uint64_t seed) {
  return make_folds_attempt(locations, K, seed, 0);
}

LambdaGrid lambda_anchors(const SpatialDataset& dataset,
                          const SpatialGraph& graph, double tau) {
  const double n = dataset.n();
  const double p = std::max(dataset.p(), 1);
  const SpectralSummary spec = graph.spectral_summary();
  const double scale = mad_scale(dataset.y);
  if (scale == 0.0)
    throw std::runtime_error("lambda_anchors: degenerate response scale");

  LambdaGrid grid;
  grid.lambda2_anchor = spec.median_nonzero_eigenvalue / n;
  grid.lambda1_anchor = std::sqrt(tau * (1.0 - tau)) * scale *
                        std::sqrt(std::max(std::log(p), 1.0) / n);
  for (int i = 0; i < 9; ++i) {
    const double mult = std::pow(10.0, -2.0 + 0.5 * i);
    grid.lambda1_values.push_back(grid.lambda1_anchor * mult);
    grid.lambda2_values.push_back(grid.lambda2_anchor * mult);
  }
  return grid;
}

Vec adaptive_weights(const ParameterState& pilot_state, double a,
                     double gamma) {
  if (!(a > 0.0) || !(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("adaptive_weights: need a > 0, gamma in (0,1]");
  Vec w(pilot_state.delta.size());
  for (std::size_t j = 0; j < pilot_state.delta.size(); ++j)
    w[j] = std::pow(pilot_state.delta[j].norm() + a, -gamma);
  return w;
}

std::vector<int> nearest_neighbor_indices(
    const std::vector<Location>& train_locations,
    const std::vector<Location>& query_locations) {
  std::vector<int> nn(query_locations.size());
  for (std::size_t i = 0; i < query_locations.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t t = 0; t < train_locations.size(); ++t) {
      const double dx = query_locations[i].u1 - train_locations[t].u1;
      const double dy = query_locations[i].u2 - train_locations[t].u2;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best) {
        best = d2;
        arg = static_cast<int>(t);
      }
    }
    nn[i] = arg;
  }
  return nn;
}

Vec predict_transfer(const Mat& Z, const Mat& X,
                     const std::vector<Location>& query_locations,
                     const std::vector<Location>& train_locations,
                     const ParameterState& state) {
  const auto nn = nearest_neighbor_indices(train_locations, query_locations);
  Vec pred = Z * state.alpha;
  if (X.cols() > 0) pred += X * state.beta_g;
  for (int j = 0; j < X.cols(); ++j)
    for (Eigen::Index i = 0; i < pred.size(); ++i)
      pred[i] += X(i, j) * state.delta[j][nn[i]];
  return pred;
}

namespace {

SpatialDataset subset_dataset(const SpatialDataset& d,
                              const std::vector<int>& idx) {
  SpatialDataset out;
  const auto m = static_cast<Eigen::Index>(idx.size());
  out.y.resize(m);
  out.Z.resize(m, d.q());
  out.X.resize(m, d.p());
  out.locations.resize(idx.size());
  for (Eigen::Index i = 0; i < m; ++i) {
    out.y[i] = d.y[idx[i]];
    out.Z.row(i) = d.Z.row(idx[i]);
    out.X.row(i) = d.X.row(idx[i]);
    out.locations[i] = d.locations[idx[i]];
  }
  return out;
}

// A plan is usable when every component of the full graph keeps at least
// one training node under every fold.
bool plan_keeps_components(const CvPlan& plan, const SpatialGraph& full) {
  for (int k = 0; k < plan.K; ++k) {
    std::vector<char> seen(full.num_components(), 0);
    for (int i = 0; i < full.n(); ++i)
      if (plan.fold[i] != k) seen[full.components()[i]] = 1;
    for (char s : seen)
      if (!s) return false;
  }
  return true;
}

}  // namespace

CvResult cross_validate(const SpatialDataset& dataset, const CvPlan& plan_in,
                        const LambdaGrid& grid, double tau, const Vec& weights,
                        const GraphConfig& graph_config,
                        const AdmmConfig& solver_config, int threads) {
  if (grid.lambda1_values.empty() || grid.lambda2_values.empty())
    throw std::invalid_argument("cross_validate: empty grid");

  const SpatialGraph full = build_graph(dataset.locations, graph_config);
  CvPlan plan = plan_in;
  int retries = 0;
  while (!plan_keeps_components(plan, full)) {
    if (++retries > 5)
      throw std::runtime_error(
          "cross_validate: no usable fold plan after 5 retries");
    plan = make_folds_attempt(dataset.locations, plan_in.K, plan_in.seed,
                              retries);
  }

  const int K = plan.K;
  struct Fold {
    SpatialDataset train;
    SpatialGraph graph;
    std::vector<int> heldout;
    Mat z_test, x_test;
    Vec y_test;
    std::vector<Location> loc_test;
  };
  std::vector<Fold> folds(K);
  for (int k = 0; k < K; ++k) {
    std::vector<int> tr, te;
    for (int i = 0; i < dataset.n(); ++i)
      (plan.fold[i] == k ? te : tr).push_back(i);
    folds[k].train = subset_dataset(dataset, tr);
    folds[k].graph = build_graph(folds[k].train.locations, graph_config);
    folds[k].heldout = te;
    const SpatialDataset heldout = subset_dataset(dataset, te);
    folds[k].z_test = heldout.Z;
    folds[k].x_test = heldout.X;
    folds[k].y_test = heldout.y;
    folds[k].loc_test = heldout.locations;
  }

  const int n1 = static_cast<int>(grid.lambda1_values.size());
  const int n2 = static_cast<int>(grid.lambda2_values.size());
  const int tasks = n1 * n2 * K;

  CvResult result;
  result.plan = plan;
  result.retries = retries;
  result.table.resize(tasks);

  parallel_for(tasks, threads, [&](int t) {
    const int k = t % K;
    const int i2 = (t / K) % n2;
    const int i1 = t / (K * n2);
    PenaltyConfig pen;
    pen.tau = tau;
    pen.lambda1 = grid.lambda1_values[i1];
    pen.lambda2 = grid.lambda2_values[i2];
    pen.weights = weights;
    const Fold& fold = folds[k];
    const FitResult fit = fit_admm(fold.train, fold.graph, solver_config, pen);
    const Vec pred = predict_transfer(fold.z_test, fold.x_test, fold.loc_test,
                                      fold.train.locations, fit.state);
    result.table[t] = {pen.lambda1, pen.lambda2, k,
                       check_loss_sum(fold.y_test - pred, tau) /
                           static_cast<double>(fold.y_test.size())};
  });

  // Mean held-out loss per pair; ties break toward larger lambda1 then
  // larger lambda2, which the scan order below delivers with strict '<'.
  double best = std::numeric_limits<double>::infinity();
  for (int i1 = n1 - 1; i1 >= 0; --i1) {
    for (int i2 = n2 - 1; i2 >= 0; --i2) {
      double mean = 0.0;
      for (int k = 0; k < K; ++k)
        mean += result.table[(i1 * n2 + i2) * K + k].heldout_checkloss;
      mean /= K;
      if (mean < best) {
        best = mean;
        result.best_lambda1 = grid.lambda1_values[i1];
        result.best_lambda2 = grid.lambda2_values[i2];
      }
    }
  }
  return result;
}

TwoStageResult two_stage_fit(const SpatialDataset& dataset,
                             const TwoStageOptions& options) {
  TwoStageResult out;
  out.graph = options.prebuilt_graph
                  ? *options.prebuilt_graph
                  : build_graph(dataset.locations, options.graph);
  out.grid = lambda_anchors(dataset, out.graph, options.tau);

  // Stage 1: pilot with small lambda1, anchor lambda2, unit weights.
  PenaltyConfig pilot_pen;
  pilot_pen.tau = options.tau;
  pilot_pen.lambda1 = 0.01 * out.grid.lambda1_anchor;
  pilot_pen.lambda2 = out.grid.lambda2_anchor;
  pilot_pen.weights = Vec::Ones(dataset.p());
  const FitResult pilot =
      fit_admm(dataset, out.graph, options.cv_admm, pilot_pen);

  const double a = options.weight_a_factor * mad_scale(dataset.y);
  out.weights = dataset.p() > 0
                    ? adaptive_weights(pilot.state, a, options.weight_gamma)
                    : Vec();

  // Stage 2: blocked CV with the weights held fixed, then the final fit.
  PenaltyConfig pen;
  pen.tau = options.tau;
  pen.weights = out.weights;
  pen.a = a;
  pen.gamma = options.weight_gamma;
  if (options.use_cv) {
    const CvPlan plan =
        make_spatial_folds(dataset.locations, options.cv_folds, options.seed);
    out.cv = cross_validate(dataset, plan, out.grid, options.tau, out.weights,
                            options.graph, options.cv_admm, options.threads);
    pen.lambda1 = out.cv.best_lambda1;
    pen.lambda2 = out.cv.best_lambda2;
  } else {
    pen.lambda1 = options.lambda1;
    pen.lambda2 = options.lambda2;
  }
  out.penalty = pen;

  out.fit = options.solver == SolverKind::admm
                ? fit_admm(dataset, out.graph, options.admm, pen)
                : fit_spg(dataset, out.graph, pen, options.spg);
  return out;
}

}  // namespace ssvcqr
