#pragma once

#include "ssvcqr/model_core.hpp"
#include "ssvcqr/spatial_graph.hpp"
#include "ssvcqr/types.hpp"

#include <Eigen/Cholesky>

namespace ssvcqr {

struct AdmmConfig {
  double rho_s = 1.0;
  double rho_z = 1.0;
  double eps_abs = 1e-5;
  double eps_rel = 1e-4;
  int max_iter = 2000;
  double over_relax = 1.6;  // 1.0 disables; applied to the s-consensus term
  bool adaptive_rho = true;
  double cg_tol = 1e-8;
  int cg_max_iter = 500;
  bool record_trace = true;
};

struct StopInfo {
  bool converged = false;
  double eps_pri = 0.0;
  double eps_dual = 0.0;
  double pri_s = 0.0;   // ||r_s||
  double pri_z = 0.0;   // (sum_j ||r_{z,j}||^2)^{1/2}
  double dual_s = 0.0;  // ||rho_s (s - s_prev)||
  double dual_z = 0.0;  // (sum_j ||rho_z (z_j - z_prev_j)||^2)^{1/2}
};

/// Jacobi-preconditioned conjugate gradients for the SPD system
/// (2*lambda2*L_sym + diag(d)) x = b, warm-started from *x.
/// Returns the iteration count, negated when the relative-residual
/// tolerance was not reached within max_iter (best iterate kept).
int pcg_solve(const SpatialGraph& graph, double lambda2, const Vec& diag,
              const Vec& b, Vec* x, double tol, int max_iter);

/**
 * ADMM for the penalized check-loss objective with splitting s = r(theta)
 * and z_j = delta_j, scaled duals (u, v_j), and penalties (rho_s, rho_z).
 *
 * Sweep order: parametric solve, check-loss prox on s, Gauss-Seidel pass
 * over the delta_j linear systems (PCG + centering projection), group
 * shrink on z_j, dual ascent, residual stopping.
 */
class AdmmSolver {
 public:
  AdmmSolver(const SpatialDataset& dataset, const SpatialGraph& graph,
             const AdmmConfig& config, const PenaltyConfig& penalty,
             bool freeze_delta = false);

  /// Least-squares start for (alpha, beta_G); s = current residual, u = 0.
  void init_least_squares();

  /// Warm start at given parametric coefficients.
  void init_at(const Vec& alpha, const Vec& beta_g);

  void update_parametric();
  void update_s();
  void update_delta(int j);
  void update_z_and_duals();
  StopInfo check_stop() const;

  /// One full sweep; returns the stopping diagnostics after the sweep.
  StopInfo sweep();

  FitResult run();

  const ParameterState& state() const { return state_; }
  const Vec& s() const { return s_; }
  const Vec& u() const { return u_; }
  const std::vector<Vec>& z() const { return z_; }
  const std::vector<Vec>& v() const { return v_; }
  double rho_s() const { return rho_s_; }
  double rho_z() const { return rho_z_; }
  int cg_failures() const { return cg_failures_; }

  /// State with delta_j replaced by the exactly-sparse copies z_j.
  ParameterState reportable_state() const;

 private:
  Vec design_residual() const;  // y - G*theta - sum_j X_(.j) o delta_j

  const SpatialDataset& data_;
  const SpatialGraph& graph_;
  AdmmConfig cfg_;
  PenaltyConfig pen_;
  bool freeze_delta_;

  Mat design_;  // [Z X]
  Eigen::LLT<Mat> gram_llt_;

  ParameterState state_;
  Vec fitted_;      // design_ * theta
  Vec xdelta_sum_;  // sum_j X_(.j) o delta_j
  Vec s_, u_;
  std::vector<Vec> z_, v_;
  Vec s_prev_;
  std::vector<Vec> z_prev_;

  double rho_s_;
  double rho_z_;
  int cg_failures_ = 0;
};

/// Full fit: global-QR pilot initialization, ADMM iteration, KKT residual.
FitResult fit_admm(const SpatialDataset& dataset, const SpatialGraph& graph,
                   const AdmmConfig& config, const PenaltyConfig& penalty);

/// Purely global quantile regression on [Z X]: all deviation fields are
/// pinned at zero (the lambda1 -> infinity limit of the main problem).
FitResult fit_global_qr(const SpatialDataset& dataset,
                        const SpatialGraph& graph, double tau,
                        const AdmmConfig& config);

}  // namespace ssvcqr
