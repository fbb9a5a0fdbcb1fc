#pragma once

#include "ssvcqr/types.hpp"

namespace ssvcqr {

/// Moreau-envelope parameters for the smoothed check loss.
struct MoreauParams {
  double h;    // smoothing bandwidth, > 0
  double tau;  // quantile level in (0,1)
};

struct ValueGrad {
  double value;
  double grad;
};

/// Check loss rho_tau(r) = r * (tau - 1{r < 0}).
double rho(double r, double tau);

/// Subgradient representative psi_tau(r) = tau - 1{r < 0}; psi(0) = tau.
double psi(double r, double tau);

/// Proximal map of gamma * rho_tau: asymmetric soft-threshold with dead
/// zone [-gamma(1-tau), gamma*tau].
double prox_check(double v, double gamma, double tau);

/// Moreau envelope M_h(r) and its gradient (r - prox_{h rho}(r)) / h.
/// The gradient lies in [tau-1, tau] and is 1/h-Lipschitz in r.
ValueGrad moreau_value_grad(double r, const MoreauParams& params);

/// Group soft-threshold: (1 - kappa/||v||)_+ v, exactly zero when
/// ||v|| <= kappa.
Vec group_shrink(const Vec& v, double kappa);

/// Sum of rho_tau over a residual vector.
double check_loss_sum(const Vec& r, double tau);

/// Elementwise prox_check.
Vec prox_check_vec(const Vec& v, double gamma, double tau);

}  // namespace ssvcqr
