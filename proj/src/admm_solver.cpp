#include "ssvcqr/admm_solver.hpp"

#include "ssvcqr/inference.hpp"
#include "ssvcqr/quantile_loss.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace ssvcqr {

int pcg_solve(const SpatialGraph& graph, double lambda2, const Vec& diag,
              const Vec& b, Vec* x, double tol, int max_iter) {
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x->setZero();
    return 0;
  }
  auto apply = [&](const Vec& v) -> Vec {
    Vec out = diag.cwiseProduct(v);
    if (lambda2 > 0.0) out += 2.0 * lambda2 * (graph.laplacian() * v);
    return out;
  };
  // Jacobi preconditioner; diag(L_sym) = 1 on every node.
  Vec precond_inv = (diag.array() + 2.0 * lambda2).inverse().matrix();

  Vec r = b - apply(*x);
  Vec zv = precond_inv.cwiseProduct(r);
  Vec p = zv;
  double rz = r.dot(zv);
  int it = 0;
  while (it < max_iter && r.norm() > tol * bnorm) {
    const Vec ap = apply(p);
    const double alpha = rz / p.dot(ap);
    *x += alpha * p;
    r -= alpha * ap;
    zv = precond_inv.cwiseProduct(r);
    const double rz_new = r.dot(zv);
    p = zv + (rz_new / rz) * p;
    rz = rz_new;
    ++it;
  }
  return r.norm() <= tol * bnorm ? it : -it;
}

AdmmSolver::AdmmSolver(const SpatialDataset& dataset,
                       const SpatialGraph& graph, const AdmmConfig& config,
                       const PenaltyConfig& penalty, bool freeze_delta)
    : data_(dataset),
      graph_(graph),
      cfg_(config),
      pen_(penalty),
      freeze_delta_(freeze_delta),
      rho_s_(config.rho_s),
      rho_z_(config.rho_z) {
  dataset.validate();
  penalty.validate(dataset.p());
  const int n = dataset.n();
  const int q = dataset.q();
  const int p = dataset.p();

  design_.resize(n, q + p);
  design_.leftCols(q) = dataset.Z;
  if (p > 0) design_.rightCols(p) = dataset.X;
  Mat gram = design_.transpose() * design_;
  gram_llt_.compute(gram);
  if (gram_llt_.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Mat> es(gram, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    throw std::runtime_error(
        "update_parametric: singular Gram matrix, condition number " +
        std::to_string(hi / std::max(lo, 0.0)));
  }

  state_ = ParameterState::zeros(q, p, n);
  fitted_ = Vec::Zero(n);
  xdelta_sum_ = Vec::Zero(n);
  s_ = Vec::Zero(n);
  u_ = Vec::Zero(n);
  z_.assign(p, Vec::Zero(n));
  v_.assign(p, Vec::Zero(n));
  s_prev_ = s_;
  z_prev_ = z_;
}

Vec AdmmSolver::design_residual() const {
  return data_.y - fitted_ - xdelta_sum_;
}

void AdmmSolver::init_least_squares() {
  Vec theta = gram_llt_.solve(design_.transpose() * data_.y);
  init_at(theta.head(data_.q()), theta.tail(data_.p()));
}

void AdmmSolver::init_at(const Vec& alpha, const Vec& beta_g) {
  state_.alpha = alpha;
  state_.beta_g = beta_g;
  Vec theta(alpha.size() + beta_g.size());
  theta << alpha, beta_g;
  fitted_ = design_ * theta;
  s_ = design_residual();
  u_.setZero();
  s_prev_ = s_;
}

void AdmmSolver::update_parametric() {
  const Vec rhs_vec = data_.y - xdelta_sum_ - s_ + u_;
  Vec theta = gram_llt_.solve(design_.transpose() * rhs_vec);
  state_.alpha = theta.head(data_.q());
  state_.beta_g = theta.tail(data_.p());
  fitted_ = design_ * theta;
}

void AdmmSolver::update_s() {
  const Vec c = design_residual();
  // Over-relaxation mixes the consensus target with the previous s.
  const Vec c_hat = cfg_.over_relax * c + (1.0 - cfg_.over_relax) * s_;
  s_ = prox_check_vec(c_hat + u_, 1.0 / rho_s_, pen_.tau);
}

void AdmmSolver::update_delta(int j) {
  const Vec xj = data_.X.col(j);
  const Vec w = data_.y - fitted_ -
                (xdelta_sum_ - xj.cwiseProduct(state_.delta[j])) - s_ + u_;
  const Vec rhs = rho_s_ * xj.cwiseProduct(w) + rho_z_ * (z_[j] - v_[j]);
  const Vec diag = (rho_s_ * xj.array().square() + rho_z_).matrix();

  Vec sol = state_.delta[j];  // warm start
  const int info =
      pcg_solve(graph_, pen_.lambda2, diag, rhs, &sol, cfg_.cg_tol,
                cfg_.cg_max_iter);
  if (info < 0 && cg_failures_++ == 0)
    std::cerr << "ssvcqr: CG did not reach tolerance; keeping best iterate "
                 "(check cg_tol/cg_max_iter)\n";
  sol = graph_.project_centered(sol);
  xdelta_sum_ += xj.cwiseProduct(sol - state_.delta[j]);
  state_.delta[j] = sol;
}

void AdmmSolver::update_z_and_duals() {
  for (int j = 0; j < data_.p(); ++j) {
    z_[j] = group_shrink(state_.delta[j] + v_[j],
                         pen_.lambda1 * pen_.weights[j] / rho_z_);
    v_[j] += state_.delta[j] - z_[j];
  }
  u_ += design_residual() - s_;
}

StopInfo AdmmSolver::check_stop() const {
  const int n = data_.n();
  StopInfo info;
  const Vec r_s = design_residual() - s_;
  info.pri_s = r_s.norm();
  double pz2 = 0.0, dz2 = 0.0;
  for (int j = 0; j < data_.p(); ++j) {
    pz2 += (state_.delta[j] - z_[j]).squaredNorm();
    dz2 += (rho_z_ * (z_[j] - z_prev_[j])).squaredNorm();
  }
  info.pri_z = std::sqrt(pz2);
  info.dual_s = (rho_s_ * (s_ - s_prev_)).norm();
  info.dual_z = std::sqrt(dz2);

  const double root_n = std::sqrt(static_cast<double>(n));
  info.eps_pri = root_n * cfg_.eps_abs +
                 cfg_.eps_rel * std::max(s_.norm(), design_residual().norm());
  info.eps_dual = root_n * cfg_.eps_abs +
                  cfg_.eps_rel * std::max(info.dual_s, info.dual_z);
  info.converged = info.pri_s <= info.eps_pri && info.pri_z <= info.eps_pri &&
                   info.dual_s <= info.eps_dual && info.dual_z <= info.eps_dual;
  return info;
}

StopInfo AdmmSolver::sweep() {
  s_prev_ = s_;
  z_prev_ = z_;
  update_parametric();
  update_s();
  if (!freeze_delta_) {
    for (int j = 0; j < data_.p(); ++j) update_delta(j);
    update_z_and_duals();
  } else {
    u_ += design_residual() - s_;
  }
  StopInfo info = check_stop();

  if (cfg_.adaptive_rho) {
    // Keep primal and dual residuals within a factor 10 of each other;
    // scaled duals are rescaled whenever a penalty changes.
    if (info.pri_s > 10.0 * info.dual_s && rho_s_ < 1e6) {
      rho_s_ *= 2.0;
      u_ *= 0.5;
    } else if (info.dual_s > 10.0 * info.pri_s && rho_s_ > 1e-6) {
      rho_s_ *= 0.5;
      u_ *= 2.0;
    }
    if (!freeze_delta_ && data_.p() > 0) {
      if (info.pri_z > 10.0 * info.dual_z && rho_z_ < 1e6) {
        rho_z_ *= 2.0;
        for (auto& vj : v_) vj *= 0.5;
      } else if (info.dual_z > 10.0 * info.pri_z && rho_z_ > 1e-6) {
        rho_z_ *= 0.5;
        for (auto& vj : v_) vj *= 2.0;
      }
    }
  }
  return info;
}

ParameterState AdmmSolver::reportable_state() const {
  ParameterState out = state_;
  if (!freeze_delta_)
    for (int j = 0; j < data_.p(); ++j) out.delta[j] = z_[j];
  else
    for (auto& dj : out.delta) dj.setZero();
  return out;
}

FitResult AdmmSolver::run() {
  FitResult result;
  result.solver = freeze_delta_ ? "global_qr" : "admm";
  int it = 0;
  for (; it < cfg_.max_iter; ++it) {
    const StopInfo info = sweep();
    if (cfg_.record_trace) {
      result.objective_trace.push_back(
          objective(data_, graph_, reportable_state(), pen_));
    }
    if (info.converged && it > 0) {
      result.converged = true;
      ++it;
      break;
    }
  }
  result.iterations = it;
  result.state = reportable_state();
  result.selected.resize(data_.p());
  for (int j = 0; j < data_.p(); ++j)
    result.selected[j] =
        !freeze_delta_ && (result.state.delta[j].array() != 0.0).any();
  result.objective = objective(data_, graph_, result.state, pen_);
  result.kkt_residual = kkt_residual(data_, graph_, result.state, pen_);
  return result;
}

FitResult fit_admm(const SpatialDataset& dataset, const SpatialGraph& graph,
                   const AdmmConfig& config, const PenaltyConfig& penalty) {
  // Pilot: global QR on [Z X] provides (alpha, beta_G); deviations start
  // at zero.
  AdmmConfig pilot_cfg = config;
  pilot_cfg.record_trace = false;
  pilot_cfg.max_iter = std::min(config.max_iter, 500);
  AdmmSolver pilot(dataset, graph, pilot_cfg, penalty, /*freeze_delta=*/true);
  pilot.init_least_squares();
  for (int it = 0; it < pilot_cfg.max_iter; ++it)
    if (pilot.sweep().converged && it > 0) break;

  AdmmSolver solver(dataset, graph, config, penalty);
  solver.init_at(pilot.state().alpha, pilot.state().beta_g);
  return solver.run();
}

FitResult fit_global_qr(const SpatialDataset& dataset,
                        const SpatialGraph& graph, double tau,
                        const AdmmConfig& config) {
  PenaltyConfig pen;
  pen.tau = tau;
  pen.lambda1 = 0.0;
  pen.lambda2 = 0.0;
  pen.weights = Vec::Ones(dataset.p());
  AdmmSolver solver(dataset, graph, config, pen, /*freeze_delta=*/true);
  solver.init_least_squares();
  return solver.run();
}

}  // namespace ssvcqr
