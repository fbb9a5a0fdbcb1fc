#include "ssvcqr/inference.hpp"

#include "ssvcqr/model_core.hpp"
#include "ssvcqr/quantile_loss.hpp"
#include "ssvcqr/util.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ssvcqr {

double kkt_residual(const SpatialDataset& dataset, const SpatialGraph& graph,
                    const ParameterState& state,
                    const PenaltyConfig& penalty) {
  const Vec r = residuals(dataset, state);
  Vec score(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i)
    score[i] = psi(r[i], penalty.tau);

  double total = (dataset.Z.transpose() * score).norm();
  if (dataset.p() > 0) total += (dataset.X.transpose() * score).norm();
  for (int j = 0; j < dataset.p(); ++j) {
    const double thr = penalty.lambda1 * penalty.weights[j];
    Vec v = dataset.X.col(j).cwiseProduct(score);
    if (penalty.lambda2 > 0.0)
      v += 2.0 * penalty.lambda2 * (graph.laplacian() * state.delta[j]);
    const double dn = state.delta[j].norm();
    if (dn > 0.0)
      total += (v - (thr / dn) * state.delta[j]).norm();
    else
      total += std::max(v.norm() - thr, 0.0);
  }
  return total;
}

namespace {

// Silverman: 0.9 min(sd, IQR/1.34) n^{-1/5}
double silverman_bandwidth(const Vec& residuals) {
  const Eigen::Index n = residuals.size();
  const double mean = residuals.mean();
  const double sd =
      std::sqrt((residuals.array() - mean).square().sum() / (n - 1.0));
  Vec sorted = residuals;
  std::sort(sorted.data(), sorted.data() + n);
  const double q1 = sorted[static_cast<Eigen::Index>(0.25 * (n - 1))];
  const double q3 = sorted[static_cast<Eigen::Index>(0.75 * (n - 1))];
  double spread = std::min(sd, (q3 - q1) / 1.34);
  if (spread <= 0.0) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

}  // namespace

Vec density_at_zero(const Vec& residuals, double bandwidth) {
  const Eigen::Index n = residuals.size();
  if (n < 10) throw std::invalid_argument("density_at_zero: need n >= 10");
  const double mean = residuals.mean();
  const double sd =
      std::sqrt((residuals.array() - mean).square().sum() / (n - 1.0));
  if (sd == 0.0)
    throw std::runtime_error("density_at_zero: zero-variance residuals");

  const double b = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(residuals);

  const double inv = 1.0 / (std::sqrt(2.0 * M_PI) * b);
  double f0 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = residuals[i] / b;
    f0 += inv * std::exp(-0.5 * t * t);
  }
  f0 /= static_cast<double>(n);
  return Vec::Constant(n, f0);
}

SandwichEstimate sandwich(const SpatialDataset& dataset,
                          const ParameterState& state, double tau,
                          double bandwidth) {
  const int n = dataset.n();
  const int q = dataset.q();
  const int p = dataset.p();
  Mat G(n, q + p);
  G.leftCols(q) = dataset.Z;
  if (p > 0) G.rightCols(p) = dataset.X;

  const Vec r = residuals(dataset, state);
  if (bandwidth <= 0.0) bandwidth = silverman_bandwidth(r);
  const Vec f0 = density_at_zero(r, bandwidth);

  SandwichEstimate est;
  est.m_hat = (G.transpose() * f0.asDiagonal() * G) / n;
  est.v_hat = tau * (1.0 - tau) * (G.transpose() * G) / n;
  est.m_hat = 0.5 * (est.m_hat + est.m_hat.transpose());
  est.v_hat = 0.5 * (est.v_hat + est.v_hat.transpose());

  Eigen::SelfAdjointEigenSolver<Mat> es(est.m_hat);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig <= 0.0)
    throw std::runtime_error("sandwich: M_hat singular, eigenvalue " +
                             std::to_string(min_eig));
  const Mat m_inv = est.m_hat.llt().solve(Mat::Identity(q + p, q + p));
  est.covariance = m_inv * est.v_hat * m_inv / n;
  est.standard_errors = est.covariance.diagonal().cwiseSqrt();
  est.density_bandwidth = bandwidth;
  return est;
}

double pseudo_r2(const Vec& heldout_y, const Vec& predictions, double tau) {
  if (heldout_y.size() == 0 || heldout_y.size() != predictions.size())
    throw std::invalid_argument("pseudo_r2: empty or mismatched inputs");
  const double q0 = sample_quantile(heldout_y, tau);
  const double cl_null =
      check_loss_sum((heldout_y.array() - q0).matrix(), tau);
  if (cl_null == 0.0)
    throw std::runtime_error("pseudo_r2: null model has zero loss");
  const double cl_model = check_loss_sum(heldout_y - predictions, tau);
  return 1.0 - cl_model / cl_null;
}

MoransI morans_i(const Vec& residual_vec, const SpatialGraph& graph) {
  const int n = graph.n();
  if (residual_vec.size() != n)
    throw std::invalid_argument("morans_i: size mismatch");
  const Vec r = residual_vec.array() - residual_vec.mean();
  const double denom = r.squaredNorm();
  if (denom == 0.0)
    throw std::runtime_error("morans_i: constant residuals");

  const SpMat& A = graph.adjacency();
  const double s0 = graph.degrees().sum();  // sum of all weights
  const double num = r.dot(A * r);
  const double stat = (n / s0) * (num / denom);

  // Randomization moments (symmetric weights): S1 = 2 sum a^2,
  // S2 = sum (2 d_i)^2, b2 = n m4 / m2^2.
  double s1 = 0.0;
  for (int i = 0; i < A.outerSize(); ++i)
    for (SpMat::InnerIterator it(A, i); it; ++it)
      s1 += 2.0 * it.value() * it.value();
  const double s2 = (2.0 * graph.degrees().array()).square().sum();
  const double nn = n;
  const double m2 = denom / nn;
  const double m4 = r.array().pow(4).sum() / nn;
  const double b2 = m4 / (m2 * m2);
  const double e_i = -1.0 / (nn - 1.0);
  const double var =
      (nn * ((nn * nn - 3.0 * nn + 3.0) * s1 - nn * s2 + 3.0 * s0 * s0) -
       b2 * ((nn * nn - nn) * s1 - 2.0 * nn * s2 + 6.0 * s0 * s0)) /
          ((nn - 1.0) * (nn - 2.0) * (nn - 3.0) * s0 * s0) -
      e_i * e_i;
  const double z = (stat - e_i) / std::sqrt(std::max(var, 1e-300));
  return {stat, std::erfc(std::abs(z) / std::sqrt(2.0))};
}

}  // namespace ssvcqr
