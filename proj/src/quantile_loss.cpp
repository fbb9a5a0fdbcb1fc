#include "ssvcqr/quantile_loss.hpp"

#include <cmath>

namespace ssvcqr {

double rho(double r, double tau) {
  return r * (tau - (r < 0.0 ? 1.0 : 0.0));
}

double psi(double r, double tau) {
  return tau - (r < 0.0 ? 1.0 : 0.0);
}

double prox_check(double v, double gamma, double tau) {
  const double hi = gamma * tau;
  const double lo = -gamma * (1.0 - tau);
  if (v > hi) return v - hi;
  if (v < lo) return v - lo;
  return 0.0;
}

ValueGrad moreau_value_grad(double r, const MoreauParams& params) {
  const double s = prox_check(r, params.h, params.tau);
  const double d = r - s;
  return {rho(s, params.tau) + d * d / (2.0 * params.h), d / params.h};
}

Vec group_shrink(const Vec& v, double kappa) {
  const double norm = v.norm();
  if (norm <= kappa) return Vec::Zero(v.size());
  if (kappa <= 0.0) return v;
  return (1.0 - kappa / norm) * v;
}

double check_loss_sum(const Vec& r, double tau) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) total += rho(r[i], tau);
  return total;
}

Vec prox_check_vec(const Vec& v, double gamma, double tau) {
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    out[i] = prox_check(v[i], gamma, tau);
  return out;
}

}  // namespace ssvcqr
