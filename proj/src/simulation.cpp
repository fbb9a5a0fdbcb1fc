#include "ssvcqr/simulation.hpp"

#include "ssvcqr/model_core.hpp"
#include "ssvcqr/quantile_loss.hpp"
#include "ssvcqr/util.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace ssvcqr {

namespace {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }
double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

double t3_cdf(double x) {
  const double s = x / std::sqrt(3.0);
  return 0.5 + (s / (1.0 + s * s) + std::atan(s)) / M_PI;
}
double t3_pdf(double x) {
  const double b = 1.0 + x * x / 3.0;
  return 2.0 / (M_PI * std::sqrt(3.0) * b * b);
}

// Bisection with Newton polish; cdf must be increasing on [lo, hi].
double invert_cdf(const std::function<double(double)>& cdf,
                  const std::function<double(double)>& pdf, double target,
                  double lo, double hi) {
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < target ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 4; ++i) {
    const double d = pdf(x);
    if (d <= 0.0) break;
    x -= (cdf(x) - target) / d;
  }
  return x;
}

double raw_field_1(const DgpConfig& c, const Location& u) {
  return c.a1 * (std::sin(2.0 * M_PI * u.u1) * std::cos(2.0 * M_PI * u.u2) +
                 c.c1 * (u.u1 - 0.5));
}
double raw_field_3(const DgpConfig& c, const Location& u) {
  return c.a3 * ((u.u1 - 0.5) * (u.u1 - 0.5) + (u.u2 - 0.5) * (u.u2 - 0.5));
}

// Raw conditional-quantile predictor; the centering re-split leaves it
// unchanged, so the response never depends on the graph.
double raw_predictor(const DgpConfig& c, const Vec& z, const Vec& x,
                     const Location& u) {
  double q = c.alpha0.dot(z);
  q += x[0] * (c.beta_g0[0] + raw_field_1(c, u));
  q += x[1] * c.beta_g0[1];
  q += x[2] * (c.beta_g0[2] + raw_field_3(c, u));
  q += x[3] * c.beta_g0[3];
  return q;
}

void draw_covariates(int n, CounterRng& rng_loc, CounterRng& rng_cov,
                     std::vector<Location>* locs, Mat* Z, Mat* X) {
  locs->resize(n);
  for (int i = 0; i < n; ++i)
    (*locs)[i] = {rng_loc.next_double(), rng_loc.next_double()};
  Z->resize(n, 3);
  X->resize(n, 4);
  for (int i = 0; i < n; ++i) {
    (*Z)(i, 0) = 1.0;
    (*Z)(i, 1) = rng_cov.normal();
    (*Z)(i, 2) = rng_cov.normal();
    for (int j = 0; j < 4; ++j) (*X)(i, j) = rng_cov.normal();
  }
}

}  // namespace

ErrorLaw parse_error_law(const std::string& name) {
  if (name == "normal") return ErrorLaw::normal;
  if (name == "ald") return ErrorLaw::ald;
  if (name == "t3") return ErrorLaw::t3;
  if (name == "contaminated" || name == "contam") return ErrorLaw::contaminated;
  if (name == "cauchy") return ErrorLaw::cauchy;
  if (name == "hetero_t3" || name == "hetero") return ErrorLaw::hetero_t3;
  throw std::invalid_argument("unknown error law: " + name);
}

std::string error_law_name(ErrorLaw law) {
  switch (law) {
    case ErrorLaw::normal: return "normal";
    case ErrorLaw::ald: return "ald";
    case ErrorLaw::t3: return "t3";
    case ErrorLaw::contaminated: return "contaminated";
    case ErrorLaw::cauchy: return "cauchy";
    case ErrorLaw::hetero_t3: return "hetero_t3";
  }
  return "unknown";
}

double error_quantile(ErrorLaw law, double sigma, double tau) {
  if (tau == 0.5) return 0.0;  // every implemented law is median centered
  switch (law) {
    case ErrorLaw::normal:
      return sigma * invert_cdf(normal_cdf, normal_pdf, tau, -40.0, 40.0);
    case ErrorLaw::ald:
      return 0.0;  // ALD(tau) has P(X <= 0) = tau by construction
    case ErrorLaw::t3:
    case ErrorLaw::hetero_t3:
      return (law == ErrorLaw::t3 ? sigma : 1.0) *
             invert_cdf(t3_cdf, t3_pdf, tau, -1e6, 1e6);
    case ErrorLaw::contaminated: {
      auto cdf = [sigma](double x) {
        return 0.9 * normal_cdf(x / sigma) + 0.1 * normal_cdf(x / (5.0 * sigma));
      };
      auto pdf = [sigma](double x) {
        return 0.9 * normal_pdf(x / sigma) / sigma +
               0.1 * normal_pdf(x / (5.0 * sigma)) / (5.0 * sigma);
      };
      return invert_cdf(cdf, pdf, tau, -200.0 * sigma, 200.0 * sigma);
    }
    case ErrorLaw::cauchy:
      return sigma * std::tan(M_PI * (tau - 0.5));
  }
  return 0.0;
}

double sample_error(ErrorLaw law, double sigma, const Location& u, double tau,
                    CounterRng& rng) {
  switch (law) {
    case ErrorLaw::normal:
      return sigma * rng.normal() - error_quantile(law, sigma, tau);
    case ErrorLaw::ald: {
      const double e1 = rng.exponential();
      const double e2 = rng.exponential();
      return sigma * (e1 / tau - e2 / (1.0 - tau));
    }
    case ErrorLaw::t3:
      return sigma * rng.student_t3() - error_quantile(law, sigma, tau);
    case ErrorLaw::contaminated: {
      const bool wide = rng.next_double() < 0.1;
      const double draw = (wide ? 5.0 * sigma : sigma) * rng.normal();
      return draw - error_quantile(law, sigma, tau);
    }
    case ErrorLaw::cauchy:
      return sigma * rng.cauchy() - error_quantile(law, sigma, tau);
    case ErrorLaw::hetero_t3: {
      const double scale_u = 0.5 + 0.5 * u.u1;
      return scale_u * (rng.student_t3() - error_quantile(law, 1.0, tau));
    }
  }
  return 0.0;
}

GeneratedData generate_dataset(const DgpConfig& config) {
  if (config.n < 50)
    throw std::invalid_argument("generate_dataset: need n >= 50");
  CounterRng root(config.seed);
  CounterRng rng_loc = root.substream(0);
  CounterRng rng_cov = root.substream(1);
  CounterRng rng_eps = root.substream(2);

  GeneratedData out;
  draw_covariates(config.n, rng_loc, rng_cov, &out.dataset.locations,
                  &out.dataset.Z, &out.dataset.X);
  out.dataset.y.resize(config.n);
  for (int i = 0; i < config.n; ++i) {
    const double q = raw_predictor(config, out.dataset.Z.row(i),
                                   out.dataset.X.row(i),
                                   out.dataset.locations[i]);
    out.dataset.y[i] =
        q + sample_error(config.law, config.sigma, out.dataset.locations[i],
                         config.tau, rng_eps);
  }

  // Center the true fields on the same graph the fitter will use; the
  // removed degree-weighted means move into beta_g.
  out.graph = build_graph(out.dataset.locations, config.graph);
  out.true_state = ParameterState::zeros(3, 4, config.n);
  out.true_state.alpha = config.alpha0;
  out.true_state.beta_g = config.beta_g0;
  Vec raw1(config.n), raw3(config.n);
  for (int i = 0; i < config.n; ++i) {
    raw1[i] = raw_field_1(config, out.dataset.locations[i]);
    raw3[i] = raw_field_3(config, out.dataset.locations[i]);
  }
  const double wsum = out.graph.degrees().sum();
  const double m1 = out.graph.degrees().dot(raw1) / wsum;
  const double m3 = out.graph.degrees().dot(raw3) / wsum;
  out.true_state.beta_g[0] += m1;
  out.true_state.beta_g[2] += m3;
  out.true_state.delta[0] = out.graph.project_centered(raw1);
  out.true_state.delta[2] = out.graph.project_centered(raw3);

  out.true_local.resize(4);
  for (int j = 0; j < 4; ++j) {
    const double rms = std::sqrt(out.true_state.delta[j].squaredNorm() /
                                 static_cast<double>(config.n));
    out.true_local[j] = rms > 1e-12;
  }
  return out;
}

SpatialDataset generate_test_set(const DgpConfig& config, int n_test,
                                 std::uint64_t stream) {
  CounterRng root = CounterRng(config.seed).substream(0x7E57ull + stream);
  CounterRng rng_loc = root.substream(0);
  CounterRng rng_cov = root.substream(1);
  CounterRng rng_eps = root.substream(2);

  SpatialDataset test;
  draw_covariates(n_test, rng_loc, rng_cov, &test.locations, &test.Z,
                  &test.X);
  test.y.resize(n_test);
  for (int i = 0; i < n_test; ++i) {
    const double q = raw_predictor(config, test.Z.row(i), test.X.row(i),
                                   test.locations[i]);
    test.y[i] = q + sample_error(config.law, config.sigma, test.locations[i],
                                 config.tau, rng_eps);
  }
  return test;
}

std::vector<bool> classify_local(const ParameterState& state, double kappa) {
  std::vector<bool> local(state.delta.size());
  for (std::size_t j = 0; j < state.delta.size(); ++j) {
    const double rms = std::sqrt(state.delta[j].squaredNorm() /
                                 static_cast<double>(state.delta[j].size()));
    local[j] = rms > kappa;
  }
  return local;
}

McMetrics compute_metrics(const ParameterState& fit_state,
                          const ParameterState& true_state,
                          const std::vector<bool>& true_local,
                          const std::vector<Location>& train_locations,
                          const SpatialDataset& test_data, double kappa,
                          double tau) {
  McMetrics m;
  m.pe_theta = (fit_state.alpha - true_state.alpha).norm() +
               (fit_state.beta_g - true_state.beta_g).norm();
  const auto p = static_cast<int>(fit_state.delta.size());
  m.mse_delta.resize(p);
  for (int j = 0; j < p; ++j)
    m.mse_delta[j] = (fit_state.delta[j] - true_state.delta[j]).squaredNorm() /
                     static_cast<double>(fit_state.delta[j].size());

  const std::vector<bool> declared = classify_local(fit_state, kappa);
  int tp = 0, tn = 0, fp = 0, fn = 0;
  for (int j = 0; j < p; ++j) {
    if (true_local[j])
      (declared[j] ? tp : fn)++;
    else
      (declared[j] ? fp : tn)++;
  }
  m.sensitivity = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 1.0;
  m.specificity = tn + fp > 0 ? static_cast<double>(tn) / (tn + fp) : 1.0;

  const Vec pred = predict_transfer(test_data.Z, test_data.X,
                                    test_data.locations, train_locations,
                                    fit_state);
  m.cl_test = check_loss_sum(test_data.y - pred, tau) /
              static_cast<double>(test_data.y.size());
  return m;
}

FitResult fit_global_qr_baseline(const SpatialDataset& dataset,
                                 const SpatialGraph& graph, double tau,
                                 const AdmmConfig& config) {
  return fit_global_qr(dataset, graph, tau, config);
}

McSummary run_monte_carlo(const DgpConfig& config, int replicates,
                          const TwoStageOptions& options, McModel model,
                          double kappa) {
  if (replicates < 1)
    throw std::invalid_argument("run_monte_carlo: need R >= 1");

  McSummary summary;
  summary.law = config.law;
  summary.replicates = replicates;

  std::vector<McMetrics> slots(replicates);
  std::vector<char> ok(replicates, 0);

  const int outer_threads = options.threads;
  parallel_for(replicates, outer_threads, [&](int r) {
    try {
      DgpConfig rep = config;
      rep.seed = CounterRng(config.seed).substream(0x9EB1ull).substream(r)
                     .next_u64();
      const GeneratedData gen = generate_dataset(rep);
      const SpatialDataset test =
          generate_test_set(rep, std::max(rep.n / 4, 25), 1);

      ParameterState fitted;
      if (model == McModel::ss_svcqr) {
        TwoStageOptions opts = options;
        opts.tau = rep.tau;
        opts.graph = rep.graph;
        opts.seed = rep.seed;
        opts.prebuilt_graph = &gen.graph;
        if (outer_threads > 1) opts.threads = 1;
        fitted = two_stage_fit(gen.dataset, opts).fit.state;
      } else {
        fitted = fit_global_qr_baseline(gen.dataset, gen.graph, rep.tau,
                                        options.admm)
                     .state;
      }
      slots[r] = compute_metrics(fitted, gen.true_state, gen.true_local,
                                 gen.dataset.locations, test, kappa, rep.tau);
      ok[r] = 1;
    } catch (const std::exception&) {
      ok[r] = 0;
    }
  });

  const int p = 4;
  McMetrics mean, sd;
  mean.mse_delta = Vec::Zero(p);
  sd.mse_delta = Vec::Zero(p);
  mean.pe_theta = mean.sensitivity = mean.specificity = mean.cl_test = 0.0;
  int good = 0;
  for (int r = 0; r < replicates; ++r) {
    if (!ok[r]) {
      ++summary.failures;
      continue;
    }
    summary.rows.push_back(slots[r]);
    mean.pe_theta += slots[r].pe_theta;
    mean.mse_delta += slots[r].mse_delta;
    mean.sensitivity += slots[r].sensitivity;
    mean.specificity += slots[r].specificity;
    mean.cl_test += slots[r].cl_test;
    ++good;
  }
  if (good == 0) throw std::runtime_error("run_monte_carlo: all replicates failed");
  mean.pe_theta /= good;
  mean.mse_delta /= good;
  mean.sensitivity /= good;
  mean.specificity /= good;
  mean.cl_test /= good;

  sd.pe_theta = sd.sensitivity = sd.specificity = sd.cl_test = 0.0;
  if (good >= 2) {
    for (const auto& row : summary.rows) {
      sd.pe_theta += std::pow(row.pe_theta - mean.pe_theta, 2);
      sd.mse_delta += (row.mse_delta - mean.mse_delta).array().square().matrix();
      sd.sensitivity += std::pow(row.sensitivity - mean.sensitivity, 2);
      sd.specificity += std::pow(row.specificity - mean.specificity, 2);
      sd.cl_test += std::pow(row.cl_test - mean.cl_test, 2);
    }
    const double denom = good - 1.0;
    sd.pe_theta = std::sqrt(sd.pe_theta / denom);
    sd.mse_delta = (sd.mse_delta / denom).cwiseSqrt();
    sd.sensitivity = std::sqrt(sd.sensitivity / denom);
    sd.specificity = std::sqrt(sd.specificity / denom);
    sd.cl_test = std::sqrt(sd.cl_test / denom);
  }
  summary.mean = mean;
  summary.sd = sd;
  return summary;
}

}  // namespace ssvcqr
