#include "ssvcqr/spg_solver.hpp"

#include "ssvcqr/admm_solver.hpp"
#include "ssvcqr/inference.hpp"
#include "ssvcqr/quantile_loss.hpp"
#include "ssvcqr/util.hpp"

#include <cmath>
#include <stdexcept>

namespace ssvcqr {

namespace {

double group_penalty(const ParameterState& s, const PenaltyConfig& pen) {
  double r = 0.0;
  for (std::size_t j = 0; j < s.delta.size(); ++j)
    r += pen.lambda1 * pen.weights[j] * s.delta[j].norm();
  return r;
}

double dot_states(const SpgGradients& g, const ParameterState& a,
                  const ParameterState& b) {
  double d = g.alpha.dot(a.alpha - b.alpha);
  if (g.beta_g.size() > 0) d += g.beta_g.dot(a.beta_g - b.beta_g);
  for (std::size_t j = 0; j < g.delta.size(); ++j)
    d += g.delta[j].dot(a.delta[j] - b.delta[j]);
  return d;
}

double sq_dist_states(const ParameterState& a, const ParameterState& b) {
  double d = (a.alpha - b.alpha).squaredNorm() +
             (a.beta_g - b.beta_g).squaredNorm();
  for (std::size_t j = 0; j < a.delta.size(); ++j)
    d += (a.delta[j] - b.delta[j]).squaredNorm();
  return d;
}

// Optimality residual of the smoothed composite problem: gradient norms of
// the parametric block plus group-subdifferential distances.
double smoothed_kkt(const SpgGradients& g, const ParameterState& x,
                    const PenaltyConfig& pen) {
  double total = g.alpha.norm() + g.beta_g.norm();
  for (std::size_t j = 0; j < g.delta.size(); ++j) {
    const double thr = pen.lambda1 * pen.weights[j];
    const double dn = x.delta[j].norm();
    if (dn > 0.0)
      total += (g.delta[j] + (thr / dn) * x.delta[j]).norm();
    else
      total += std::max(g.delta[j].norm() - thr, 0.0);
  }
  return total;
}

}  // namespace

SpgGradients smooth_gradient(const SpatialDataset& dataset,
                             const SpatialGraph& graph,
                             const ParameterState& state,
                             const PenaltyConfig& penalty, double h) {
  if (h <= 0.0) throw std::invalid_argument("smooth_gradient: h must be > 0");
  const Vec r = residuals(dataset, state);
  // g = (r - prox_{h rho}(r)) / h, the Moreau-envelope score.
  const Vec g = (r - prox_check_vec(r, h, penalty.tau)) / h;

  SpgGradients out;
  out.alpha = -(dataset.Z.transpose() * g);
  out.beta_g = Vec::Zero(dataset.p());
  if (dataset.p() > 0) out.beta_g = -(dataset.X.transpose() * g);
  out.delta.resize(dataset.p());
  for (int j = 0; j < dataset.p(); ++j) {
    out.delta[j] = -dataset.X.col(j).cwiseProduct(g);
    if (penalty.lambda2 > 0.0)
      out.delta[j] += 2.0 * penalty.lambda2 * (graph.laplacian() * state.delta[j]);
  }
  return out;
}

double smooth_value(const SpatialDataset& dataset, const SpatialGraph& graph,
                    const ParameterState& state, const PenaltyConfig& penalty,
                    double h) {
  const Vec r = residuals(dataset, state);
  const MoreauParams mp{h, penalty.tau};
  double val = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i)
    val += moreau_value_grad(r[i], mp).value;
  for (int j = 0; j < dataset.p(); ++j)
    if (penalty.lambda2 > 0.0)
      val += penalty.lambda2 * graph.roughness(state.delta[j]);
  return val;
}

ParameterState spg_step(const ParameterState& state, const SpgGradients& grads,
                        double step, const PenaltyConfig& penalty,
                        const SpatialGraph& graph) {
  if (step <= 0.0) throw std::invalid_argument("spg_step: step must be > 0");
  ParameterState out = state;
  out.alpha -= step * grads.alpha;
  out.beta_g -= step * grads.beta_g;
  for (std::size_t j = 0; j < out.delta.size(); ++j) {
    Vec moved = state.delta[j] - step * grads.delta[j];
    moved = group_shrink(moved, step * penalty.lambda1 * penalty.weights[j]);
    if ((moved.array() != 0.0).any()) moved = graph.project_centered(moved);
    out.delta[j] = std::move(moved);
  }
  return out;
}

FitResult fit_spg(const SpatialDataset& dataset, const SpatialGraph& graph,
                  const PenaltyConfig& penalty, const SpgConfig& config) {
  dataset.validate();
  penalty.validate(dataset.p());

  const double scale = std::max(mad_scale(dataset.y), 1e-12);
  double h = config.h_init > 0.0 ? config.h_init : scale;
  const double h_min =
      config.h_min > 0.0 ? config.h_min : 1e-4 * scale;
  if (h < h_min) h = h_min;

  // Initialize the parametric block at the global QR solution.
  AdmmConfig pilot_cfg;
  pilot_cfg.max_iter = 500;
  pilot_cfg.record_trace = false;
  FitResult pilot = fit_global_qr(dataset, graph, penalty.tau, pilot_cfg);

  ParameterState x = ParameterState::zeros(dataset.q(), dataset.p(), dataset.n());
  x.alpha = pilot.state.alpha;
  x.beta_g = pilot.state.beta_g;
  ParameterState x_prev = x;

  FitResult result;
  result.solver = "spg";

  double fx = smooth_value(dataset, graph, x, penalty, h) +
              group_penalty(x, penalty);
  double t_mom = 1.0;
  double step = config.step_init;
  int stagnant = 0;
  bool converged = false;
  const double root_n = std::sqrt(static_cast<double>(dataset.n()));

  int iter = 0;
  for (; iter < config.max_iter; ++iter) {
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
    const double omega = (t_mom - 1.0) / t_next;

    bool accepted = false;
    ParameterState x_new;
    double f_new = fx;

    // First pass uses the accelerated point; on a function-value restart the
    // momentum is dropped and the plain proximal step from x is taken.
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      ParameterState y = x;
      if (attempt == 0 && omega > 0.0) {
        y.alpha += omega * (x.alpha - x_prev.alpha);
        y.beta_g += omega * (x.beta_g - x_prev.beta_g);
        for (std::size_t j = 0; j < y.delta.size(); ++j)
          y.delta[j] += omega * (x.delta[j] - x_prev.delta[j]);
      } else if (attempt > 0) {
        t_mom = 1.0;  // restart resets the momentum to cold start
      }
      const SpgGradients grad = smooth_gradient(dataset, graph, y, penalty, h);
      const double gy = smooth_value(dataset, graph, y, penalty, h);

      step = std::min(step / config.backtrack_factor, 1e6);
      while (step > 1e-18) {
        ParameterState cand = spg_step(y, grad, step, penalty, graph);
        const double g_cand = smooth_value(dataset, graph, cand, penalty, h);
        const double quad = gy + dot_states(grad, cand, y) +
                            sq_dist_states(cand, y) / (2.0 * step);
        if (g_cand <= quad + 1e-12 * (1.0 + std::abs(quad))) {
          const double f_cand = g_cand + group_penalty(cand, penalty);
          if (f_cand <= fx + 1e-12 * (1.0 + std::abs(fx))) {
            x_new = std::move(cand);
            f_new = f_cand;
            accepted = true;
          }
          break;  // sufficient decrease holds; restart if F increased
        }
        step *= config.backtrack_factor;
      }
      if (!accepted && attempt == 0 && omega <= 0.0) break;
    }

    if (accepted) {
      x_prev = x;
      x = std::move(x_new);
      const double rel_dec = (fx - f_new) / std::max(1.0, std::abs(fx));
      fx = f_new;
      stagnant = rel_dec < config.objective_tol ? stagnant + 1 : 0;
      t_mom = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
    } else {
      ++stagnant;
    }

    if (config.record_trace)
      result.objective_trace.push_back(objective(dataset, graph, x, penalty));

    if (stagnant >= config.stagnation_window) {
      if (h > h_min) {
        h = std::max(h * config.continuation_factor, h_min);
        step *= config.continuation_factor;
        fx = smooth_value(dataset, graph, x, penalty, h) +
             group_penalty(x, penalty);
        x_prev = x;  // drop momentum across the continuation step
        t_mom = 1.0;
        stagnant = 0;
      } else {
        converged = true;
        ++iter;
        break;
      }
    }
    if (h <= h_min && (iter % 25) == 24) {
      const SpgGradients grad = smooth_gradient(dataset, graph, x, penalty, h);
      if (smoothed_kkt(grad, x, penalty) <= config.kkt_tol * root_n) {
        converged = true;
        ++iter;
        break;
      }
    }
  }

  result.iterations = iter;
  result.converged = converged;
  result.state = x;
  result.selected.resize(dataset.p());
  for (int j = 0; j < dataset.p(); ++j)
    result.selected[j] = (x.delta[j].array() != 0.0).any();
  result.objective = objective(dataset, graph, x, penalty);
  result.kkt_residual = kkt_residual(dataset, graph, x, penalty);
  return result;
}

}  // namespace ssvcqr
