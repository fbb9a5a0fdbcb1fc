// Command-line front end: fit / predict / cv / simulate over CSV files.

#include "ssvcqr/admm_solver.hpp"
#include "ssvcqr/csv.hpp"
#include "ssvcqr/inference.hpp"
#include "ssvcqr/model_core.hpp"
#include "ssvcqr/simulation.hpp"
#include "ssvcqr/spatial_graph.hpp"
#include "ssvcqr/spg_solver.hpp"
#include "ssvcqr/tuning.hpp"
#include "ssvcqr/util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using namespace ssvcqr;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNoConverge = 4;
constexpr int kSchemaVersion = 1;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split_cols(const std::string& spec) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : spec) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int default_threads() {
  if (const char* env = std::getenv("SSVCQR_THREADS")) {
    const int t = std::atoi(env);
    if (t >= 1) return t;
  }
  return 1;
}

struct CoordScale {
  double u1_min = 0.0, u1_span = 1.0;
  double u2_min = 0.0, u2_span = 1.0;
};

struct LoadedData {
  SpatialDataset dataset;  // X standardized when requested
  Vec x_means, x_scales;
  CoordScale coord_scale;
};

LoadedData load_dataset(const std::string& path, const std::string& response,
                        const std::vector<std::string>& global_cols,
                        const std::vector<std::string>& varying_cols,
                        const std::vector<std::string>& coord_cols,
                        bool standardize, bool rescale_coords,
                        const CoordScale* fixed_scale = nullptr,
                        bool need_response = true) {
  if (coord_cols.size() != 2)
    throw UsageError("exactly two coordinate columns are required");
  CsvTable table;
  try {
    table = read_csv(path);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }

  LoadedData out;
  const int n = table.rows();
  if (n < 2) throw DataError("need at least 2 rows in '" + path + "'");
  try {
    if (need_response) out.dataset.y = table.column(response);
    else out.dataset.y = Vec::Zero(n);
    out.dataset.Z.resize(n, static_cast<Eigen::Index>(global_cols.size()));
    for (std::size_t j = 0; j < global_cols.size(); ++j)
      out.dataset.Z.col(static_cast<Eigen::Index>(j)) =
          table.column(global_cols[j]);
    out.dataset.X.resize(n, static_cast<Eigen::Index>(varying_cols.size()));
    for (std::size_t j = 0; j < varying_cols.size(); ++j)
      out.dataset.X.col(static_cast<Eigen::Index>(j)) =
          table.column(varying_cols[j]);
    const Vec u1 = table.column(coord_cols[0]);
    const Vec u2 = table.column(coord_cols[1]);
    out.dataset.locations.resize(n);
    CoordScale cs;
    if (fixed_scale) {
      cs = *fixed_scale;
    } else if (rescale_coords) {
      cs.u1_min = u1.minCoeff();
      cs.u1_span = std::max(u1.maxCoeff() - cs.u1_min, 1e-300);
      cs.u2_min = u2.minCoeff();
      cs.u2_span = std::max(u2.maxCoeff() - cs.u2_min, 1e-300);
    }
    for (int i = 0; i < n; ++i)
      out.dataset.locations[i] = {(u1[i] - cs.u1_min) / cs.u1_span,
                                  (u2[i] - cs.u2_min) / cs.u2_span};
    out.coord_scale = cs;
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }

  const int p = out.dataset.p();
  out.x_means = Vec::Zero(p);
  out.x_scales = Vec::Ones(p);
  if (standardize && p > 0) {
    for (int j = 0; j < p; ++j) {
      const Vec col = out.dataset.X.col(j);
      out.x_means[j] = col.mean();
      const double sd = std::sqrt(
          (col.array() - out.x_means[j]).square().sum() / (n - 1.0));
      if (sd <= 0.0)
        throw DataError("varying column '" + varying_cols[j] +
                        "' is constant and cannot be standardized");
      out.x_scales[j] = sd;
      out.dataset.X.col(j) = (col.array() - out.x_means[j]) / sd;
    }
  }
  try {
    out.dataset.validate();
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  return out;
}

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vec json_to_vec(const json& arr) {
  Vec v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[i] = arr[i].get<double>();
  return v;
}

void write_site_csv(const std::string& path, const SpatialDataset& data,
                    const FitResult& fit) {
  std::vector<std::string> header = {"u1", "u2"};
  std::vector<Vec> cols;
  const int n = data.n();
  Vec u1(n), u2(n);
  for (int i = 0; i < n; ++i) {
    u1[i] = data.locations[i].u1;
    u2[i] = data.locations[i].u2;
  }
  cols.push_back(u1);
  cols.push_back(u2);
  for (int j = 0; j < data.p(); ++j) {
    header.push_back("delta_" + std::to_string(j + 1));
    cols.push_back(fit.state.delta[j]);
    header.push_back("total_" + std::to_string(j + 1));
    cols.push_back(
        (fit.state.delta[j].array() + fit.state.beta_g[j]).matrix());
  }
  header.push_back("residual");
  cols.push_back(residuals(data, fit.state));
  write_csv(path, header, cols);
}

struct FitArgs {
  std::string input, out_model, out_sites, out_cv_table, out_graph;
  std::string response;
  std::string global_cols, varying_cols, coords;
  double tau = 0.5;
  int k = 8;
  double sigma = 0.0;  // <= 0: auto
  double lambda1 = -1.0, lambda2 = -1.0;
  bool cv = false;
  int folds = 5;
  std::string solver = "admm";
  std::uint64_t seed = 0;
  int threads = default_threads();
  bool standardize = true;
  bool rescale_coords = true;
  bool cv_only = false;  // emit CV table and stop (cv subcommand default)
  bool refit = false;
};

int run_fit(const FitArgs& args) {
  if (!(args.tau > 0.0 && args.tau < 1.0))
    throw UsageError("--tau must lie strictly in (0,1)");
  if (args.k < 1) throw UsageError("--k must be positive");
  if (!(args.solver == "admm" || args.solver == "spg"))
    throw UsageError("--solver must be admm or spg");
  const auto global_cols = split_cols(args.global_cols);
  const auto varying_cols = split_cols(args.varying_cols);
  const auto coord_cols = split_cols(args.coords);
  if (global_cols.empty())
    throw UsageError("--global-cols must name at least one column "
                     "(include an explicit intercept column)");

  LoadedData loaded =
      load_dataset(args.input, args.response, global_cols, varying_cols,
                   coord_cols, args.standardize, args.rescale_coords);
  const SpatialDataset& data = loaded.dataset;
  if (data.n() < 2 * args.k)
    throw DataError("need n >= 2k observations for the graph");

  TwoStageOptions opts;
  opts.graph.k = args.k;
  if (args.sigma > 0.0) opts.graph.sigma = args.sigma;
  opts.tau = args.tau;
  opts.cv_folds = args.folds;
  opts.seed = args.seed;
  opts.threads = args.threads;
  opts.solver = args.solver == "admm" ? SolverKind::admm : SolverKind::spg;
  const bool fixed_lambda = args.lambda1 >= 0.0 && args.lambda2 >= 0.0;
  opts.use_cv = args.cv || !fixed_lambda;
  if (fixed_lambda) {
    opts.lambda1 = args.lambda1;
    opts.lambda2 = args.lambda2;
    opts.use_cv = args.cv;  // --cv overrides fixed lambdas
  }

  if (args.cv_only && !args.refit) {
    // CV table only.
    const SpatialGraph graph = build_graph(data.locations, opts.graph);
    const LambdaGrid grid = lambda_anchors(data, graph, args.tau);
    PenaltyConfig pilot_pen;
    pilot_pen.tau = args.tau;
    pilot_pen.lambda1 = 0.01 * grid.lambda1_anchor;
    pilot_pen.lambda2 = grid.lambda2_anchor;
    pilot_pen.weights = Vec::Ones(data.p());
    const FitResult pilot = fit_admm(data, graph, opts.cv_admm, pilot_pen);
    const Vec weights = adaptive_weights(
        pilot.state, opts.weight_a_factor * mad_scale(data.y),
        opts.weight_gamma);
    const CvPlan plan = make_spatial_folds(data.locations, args.folds, args.seed);
    const CvResult cv = cross_validate(data, plan, grid, args.tau, weights,
                                       opts.graph, opts.cv_admm, args.threads);
    if (!args.out_cv_table.empty()) {
      std::vector<Vec> cols(4);
      const auto m = static_cast<Eigen::Index>(cv.table.size());
      for (auto& c : cols) c.resize(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        cols[0][i] = cv.table[i].lambda1;
        cols[1][i] = cv.table[i].lambda2;
        cols[2][i] = cv.table[i].fold;
        cols[3][i] = cv.table[i].heldout_checkloss;
      }
      write_csv(args.out_cv_table,
                {"lambda1", "lambda2", "fold", "heldout_checkloss"}, cols);
    }
    std::cout << "selected lambda1=" << format_double(cv.best_lambda1)
              << " lambda2=" << format_double(cv.best_lambda2) << "\n";
    return kExitOk;
  }

  const TwoStageResult result = two_stage_fit(data, opts);
  const FitResult& fit = result.fit;

  if (!args.out_cv_table.empty() && !result.cv.table.empty()) {
    std::vector<Vec> cols(4);
    const auto m = static_cast<Eigen::Index>(result.cv.table.size());
    for (auto& c : cols) c.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      cols[0][i] = result.cv.table[i].lambda1;
      cols[1][i] = result.cv.table[i].lambda2;
      cols[2][i] = result.cv.table[i].fold;
      cols[3][i] = result.cv.table[i].heldout_checkloss;
    }
    write_csv(args.out_cv_table,
              {"lambda1", "lambda2", "fold", "heldout_checkloss"}, cols);
  }

  if (!args.out_graph.empty()) {
    const SpMat& A = result.graph.adjacency();
    std::vector<double> ii, jj, ww;
    for (int i = 0; i < A.outerSize(); ++i)
      for (SpMat::InnerIterator it(A, i); it; ++it)
        if (it.col() > i) {
          ii.push_back(i);
          jj.push_back(static_cast<double>(it.col()));
          ww.push_back(it.value());
        }
    const auto m = static_cast<Eigen::Index>(ii.size());
    std::vector<Vec> cols = {Eigen::Map<Vec>(ii.data(), m),
                             Eigen::Map<Vec>(jj.data(), m),
                             Eigen::Map<Vec>(ww.data(), m)};
    write_csv(args.out_graph, {"i", "j", "weight"}, cols);
  }

  const Vec resid = residuals(data, fit.state);
  const MoransI moran = morans_i(resid, result.graph);
  const SandwichEstimate se = sandwich(data, fit.state, args.tau);

  json model;
  model["schema_version"] = kSchemaVersion;
  model["tau"] = args.tau;
  model["graph"] = {{"k", args.k}, {"sigma", result.graph.sigma()}};
  model["lambda1"] = result.penalty.lambda1;
  model["lambda2"] = result.penalty.lambda2;
  model["weights"] = vec_to_json(result.penalty.weights);
  model["columns"] = {{"response", args.response},
                      {"global", global_cols},
                      {"varying", varying_cols},
                      {"coords", coord_cols}};
  model["standardize"] = args.standardize;
  model["x_means"] = vec_to_json(loaded.x_means);
  model["x_scales"] = vec_to_json(loaded.x_scales);
  model["coord_scale"] = {{"u1_min", loaded.coord_scale.u1_min},
                          {"u1_span", loaded.coord_scale.u1_span},
                          {"u2_min", loaded.coord_scale.u2_min},
                          {"u2_span", loaded.coord_scale.u2_span}};
  model["alpha"] = vec_to_json(fit.state.alpha);
  model["beta_g"] = vec_to_json(fit.state.beta_g);
  model["standard_errors"] = vec_to_json(se.standard_errors);
  json deltas = json::array();
  for (const auto& d : fit.state.delta) deltas.push_back(vec_to_json(d));
  model["delta"] = deltas;
  json sel = json::array();
  for (bool s : fit.selected) sel.push_back(s);
  model["selected_local"] = sel;
  json locs1 = json::array(), locs2 = json::array();
  for (const auto& loc : data.locations) {
    locs1.push_back(loc.u1);
    locs2.push_back(loc.u2);
  }
  model["train_u1"] = locs1;
  model["train_u2"] = locs2;
  model["objective"] = fit.objective;
  model["kkt_residual"] = fit.kkt_residual;
  model["morans_i"] = {{"statistic", moran.statistic},
                       {"p_value", moran.p_value}};
  model["iterations"] = fit.iterations;
  model["converged"] = fit.converged;
  model["solver"] = fit.solver;
  model["seed"] = args.seed;

  if (!args.out_model.empty()) {
    std::ofstream out(args.out_model);
    if (!out) throw DataError("cannot write '" + args.out_model + "'");
    out << model.dump(2) << "\n";
  } else {
    std::cout << model.dump(2) << "\n";
  }
  if (!args.out_sites.empty()) write_site_csv(args.out_sites, data, fit);

  return fit.converged ? kExitOk : kExitNoConverge;
}

int run_predict(const std::string& model_path, const std::string& input,
                const std::string& out_path) {
  json model;
  {
    std::ifstream in(model_path);
    if (!in) throw DataError("cannot open model '" + model_path + "'");
    try {
      in >> model;
    } catch (const std::exception& e) {
      throw DataError(std::string("invalid model json: ") + e.what());
    }
  }
  if (!model.contains("schema_version") ||
      model["schema_version"].get<int>() != kSchemaVersion)
    throw DataError("model schema version mismatch");

  const auto& cols = model["columns"];
  const std::vector<std::string> global_cols = cols["global"];
  const std::vector<std::string> varying_cols = cols["varying"];
  const std::vector<std::string> coord_cols = cols["coords"];
  const std::string response = cols["response"];

  CoordScale cs;
  cs.u1_min = model["coord_scale"]["u1_min"];
  cs.u1_span = model["coord_scale"]["u1_span"];
  cs.u2_min = model["coord_scale"]["u2_min"];
  cs.u2_span = model["coord_scale"]["u2_span"];

  CsvTable probe;
  try {
    probe = read_csv(input);
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
  const bool has_response = probe.column_index(response) >= 0;

  LoadedData loaded =
      load_dataset(input, response, global_cols, varying_cols, coord_cols,
                   /*standardize=*/false, /*rescale_coords=*/false, &cs,
                   has_response);
  // Apply the training standardization.
  const Vec means = json_to_vec(model["x_means"]);
  const Vec scales = json_to_vec(model["x_scales"]);
  for (Eigen::Index j = 0; j < loaded.dataset.X.cols(); ++j)
    loaded.dataset.X.col(j) =
        (loaded.dataset.X.col(j).array() - means[j]) / scales[j];

  ParameterState state;
  state.alpha = json_to_vec(model["alpha"]);
  state.beta_g = json_to_vec(model["beta_g"]);
  for (const auto& d : model["delta"]) state.delta.push_back(json_to_vec(d));

  const Vec tu1 = json_to_vec(model["train_u1"]);
  const Vec tu2 = json_to_vec(model["train_u2"]);
  std::vector<Location> train_locs(tu1.size());
  for (Eigen::Index i = 0; i < tu1.size(); ++i)
    train_locs[i] = {tu1[i], tu2[i]};

  const Vec pred =
      predict_transfer(loaded.dataset.Z, loaded.dataset.X,
                       loaded.dataset.locations, train_locs, state);

  std::vector<std::string> header = {"u1", "u2", "prediction"};
  const int n = loaded.dataset.n();
  Vec u1(n), u2(n);
  for (int i = 0; i < n; ++i) {
    u1[i] = loaded.dataset.locations[i].u1;
    u2[i] = loaded.dataset.locations[i].u2;
  }
  std::vector<Vec> out_cols = {u1, u2, pred};
  if (has_response) {
    header.push_back("residual");
    out_cols.push_back(loaded.dataset.y - pred);
    const double r2 = pseudo_r2(loaded.dataset.y, pred,
                                model["tau"].get<double>());
    std::cout << "pseudo_r2=" << format_double(r2) << "\n";
  }
  write_csv(out_path, header, out_cols);
  return kExitOk;
}

struct SimArgs {
  std::string law = "normal";
  int n = 500;
  int replicates = 1;
  double tau = 0.5;
  std::uint64_t seed = 0;
  double kappa = 0.1;
  std::string model = "ss";  // ss | qr
  int k = 8;
  double sigma = 0.0;
  int folds = 5;
  int threads = default_threads();
  std::string out_summary, out_scenario1, out_dump;
};

int run_simulate(const SimArgs& args) {
  if (!(args.tau > 0.0 && args.tau < 1.0))
    throw UsageError("--tau must lie strictly in (0,1)");
  DgpConfig cfg;
  cfg.n = args.n;
  cfg.tau = args.tau;
  cfg.law = parse_error_law(args.law);  // invalid name -> usage error
  cfg.seed = args.seed;
  cfg.graph.k = args.k;
  if (args.sigma > 0.0) cfg.graph.sigma = args.sigma;

  TwoStageOptions opts;
  opts.graph = cfg.graph;
  opts.tau = args.tau;
  opts.cv_folds = args.folds;
  opts.threads = args.threads;

  if (!args.out_dump.empty() || !args.out_scenario1.empty()) {
    DgpConfig rep = cfg;
    rep.seed = CounterRng(cfg.seed).substream(0x9EB1ull).substream(0).next_u64();
    const GeneratedData gen = generate_dataset(rep);
    if (!args.out_dump.empty()) {
      const int n = gen.dataset.n();
      Vec u1(n), u2(n);
      for (int i = 0; i < n; ++i) {
        u1[i] = gen.dataset.locations[i].u1;
        u2[i] = gen.dataset.locations[i].u2;
      }
      std::vector<std::string> header = {"y", "z1", "z2", "z3",
                                         "x1", "x2", "x3", "x4", "u1", "u2"};
      std::vector<Vec> cols = {gen.dataset.y,      gen.dataset.Z.col(0),
                               gen.dataset.Z.col(1), gen.dataset.Z.col(2),
                               gen.dataset.X.col(0), gen.dataset.X.col(1),
                               gen.dataset.X.col(2), gen.dataset.X.col(3),
                               u1, u2};
      write_csv(args.out_dump, header, cols);
    }
    if (!args.out_scenario1.empty()) {
      TwoStageOptions fit_opts = opts;
      fit_opts.seed = rep.seed;
      fit_opts.prebuilt_graph = &gen.graph;
      const TwoStageResult fitted = two_stage_fit(gen.dataset, fit_opts);
      const int n = gen.dataset.n();
      Vec u1(n), u2(n);
      for (int i = 0; i < n; ++i) {
        u1[i] = gen.dataset.locations[i].u1;
        u2[i] = gen.dataset.locations[i].u2;
      }
      std::vector<std::string> header = {"u1", "u2"};
      std::vector<Vec> cols = {u1, u2};
      for (int j = 0; j < 4; ++j) {
        const std::string tag = std::to_string(j + 1);
        header.push_back("true_delta_" + tag);
        cols.push_back(gen.true_state.delta[j]);
        header.push_back("est_delta_" + tag);
        cols.push_back(fitted.fit.state.delta[j]);
        header.push_back("error_" + tag);
        cols.push_back(fitted.fit.state.delta[j] - gen.true_state.delta[j]);
        header.push_back("total_" + tag);
        cols.push_back((fitted.fit.state.delta[j].array() +
                        fitted.fit.state.beta_g[j])
                           .matrix());
      }
      write_csv(args.out_scenario1, header, cols);
    }
  }

  const McModel model =
      args.model == "qr" ? McModel::global_qr : McModel::ss_svcqr;
  const McSummary summary =
      run_monte_carlo(cfg, args.replicates, opts, model, args.kappa);

  std::ostream* os = &std::cout;
  std::ofstream file;
  if (!args.out_summary.empty()) {
    file.open(args.out_summary);
    if (!file) throw DataError("cannot write '" + args.out_summary + "'");
    os = &file;
  }
  *os << "error_law,pe_mean,pe_sd,mse_x1_mean,mse_x1_sd,mse_x2_mean,mse_x2_sd,"
         "mse_x3_mean,mse_x3_sd,mse_x4_mean,mse_x4_sd,sens_mean,sens_sd,"
         "spec_mean,spec_sd,cl_mean,cl_sd,replicates,failures\n";
  const bool sds = summary.rows.size() >= 2;
  auto cell = [&](double v) { return sds ? format_double(v) : std::string(); };
  *os << error_law_name(summary.law) << ','
      << format_double(summary.mean.pe_theta) << ',' << cell(summary.sd.pe_theta);
  for (int j = 0; j < 4; ++j)
    *os << ',' << format_double(summary.mean.mse_delta[j]) << ','
        << cell(summary.sd.mse_delta[j]);
  *os << ',' << format_double(summary.mean.sensitivity) << ','
      << cell(summary.sd.sensitivity) << ','
      << format_double(summary.mean.specificity) << ','
      << cell(summary.sd.specificity) << ','
      << format_double(summary.mean.cl_test) << ',' << cell(summary.sd.cl_test)
      << ',' << summary.replicates << ',' << summary.failures << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-smooth spatially varying coefficient quantile "
               "regression"};
  app.require_subcommand(1);

  FitArgs fit_args;
  auto add_fit_flags = [&](CLI::App* cmd) {
    cmd->add_option("--input", fit_args.input, "input CSV")->required();
    cmd->add_option("--response", fit_args.response, "response column")
        ->required();
    cmd->add_option("--global-cols", fit_args.global_cols,
                    "comma-separated global covariate columns")
        ->required();
    cmd->add_option("--varying-cols", fit_args.varying_cols,
                    "comma-separated varying-candidate columns");
    cmd->add_option("--coords", fit_args.coords,
                    "two coordinate columns, comma separated")
        ->required();
    cmd->add_option("--tau", fit_args.tau, "quantile level");
    cmd->add_option("--k", fit_args.k, "k-NN neighbor count");
    cmd->add_option("--sigma", fit_args.sigma, "kernel bandwidth (0 = auto)");
    cmd->add_option("--lambda1", fit_args.lambda1, "group penalty");
    cmd->add_option("--lambda2", fit_args.lambda2, "smoothness penalty");
    cmd->add_flag("--cv", fit_args.cv, "select lambdas by blocked CV");
    cmd->add_option("--folds", fit_args.folds, "CV fold count");
    cmd->add_option("--solver", fit_args.solver, "admm or spg");
    cmd->add_option("--seed", fit_args.seed, "RNG seed");
    cmd->add_option("--threads", fit_args.threads, "worker threads");
    cmd->add_flag("!--no-standardize", fit_args.standardize,
                  "skip X standardization");
    cmd->add_flag("!--no-rescale-coords", fit_args.rescale_coords,
                  "skip coordinate rescaling to [0,1]");
    cmd->add_option("--out", fit_args.out_model, "model JSON path");
    cmd->add_option("--out-sites", fit_args.out_sites, "per-site CSV path");
    cmd->add_option("--cv-table", fit_args.out_cv_table, "CV table CSV path");
    cmd->add_option("--graph-out", fit_args.out_graph, "edge-list CSV path");
  };

  CLI::App* fit_cmd = app.add_subcommand("fit", "fit the model");
  add_fit_flags(fit_cmd);

  CLI::App* cv_cmd =
      app.add_subcommand("cv", "cross-validate the penalty grid");
  add_fit_flags(cv_cmd);
  cv_cmd->add_flag("--refit", fit_args.refit, "fit at the selected pair");

  std::string predict_model, predict_input, predict_out;
  CLI::App* predict_cmd = app.add_subcommand("predict", "predict new sites");
  predict_cmd->add_option("--model", predict_model, "model JSON")->required();
  predict_cmd->add_option("--input", predict_input, "new-data CSV")
      ->required();
  predict_cmd->add_option("--out", predict_out, "output CSV")->required();

  SimArgs sim_args;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo harness");
  sim_cmd->add_option("--error-law", sim_args.law,
                      "normal|ald|t3|contaminated|cauchy|hetero_t3");
  sim_cmd->add_option("--n", sim_args.n, "sample size");
  sim_cmd->add_option("--replicates", sim_args.replicates, "replicate count");
  sim_cmd->add_option("--tau", sim_args.tau, "quantile level");
  sim_cmd->add_option("--seed", sim_args.seed, "master seed");
  sim_cmd->add_option("--kappa", sim_args.kappa, "local-declaration threshold");
  sim_cmd->add_option("--model", sim_args.model, "ss or qr");
  sim_cmd->add_option("--k", sim_args.k, "k-NN neighbor count");
  sim_cmd->add_option("--sigma", sim_args.sigma, "kernel bandwidth (0 = auto)");
  sim_cmd->add_option("--folds", sim_args.folds, "CV fold count");
  sim_cmd->add_option("--threads", sim_args.threads, "worker threads");
  sim_cmd->add_option("--out", sim_args.out_summary, "summary CSV path");
  sim_cmd->add_option("--scenario1", sim_args.out_scenario1,
                      "per-site recovery CSV path");
  sim_cmd->add_option("--dump-data", sim_args.out_dump,
                      "write replicate-0 dataset CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit_args);
    if (cv_cmd->parsed()) {
      fit_args.cv = true;
      fit_args.cv_only = true;
      return run_fit(fit_args);
    }
    if (predict_cmd->parsed())
      return run_predict(predict_model, predict_input, predict_out);
    if (sim_cmd->parsed()) return run_simulate(sim_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
