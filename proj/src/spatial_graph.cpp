#include "ssvcqr/spatial_graph.hpp"

#include "ssvcqr/rng.hpp"
#include "ssvcqr/util.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <vector>

namespace ssvcqr {

namespace {

double sq_dist(const Location& a, const Location& b) {
  const double dx = a.u1 - b.u1;
  const double dy = a.u2 - b.u2;
  return dx * dx + dy * dy;
}

std::vector<int> label_components(const SpMat& adj, int n, int* count) {
  std::vector<int> comp(n, -1);
  int next = 0;
  std::queue<int> frontier;
  for (int start = 0; start < n; ++start) {
    if (comp[start] >= 0) continue;
    comp[start] = next;
    frontier.push(start);
    while (!frontier.empty()) {
      const int i = frontier.front();
      frontier.pop();
      for (SpMat::InnerIterator it(adj, i); it; ++it) {
        const int j = static_cast<int>(it.col());
        if (comp[j] < 0) {
          comp[j] = next;
          frontier.push(j);
        }
      }
    }
    ++next;
  }
  *count = next;
  return comp;
}

}  // namespace

SpatialGraph build_graph(const std::vector<Location>& locations, int k,
                         std::optional<double> sigma) {
  const int n = static_cast<int>(locations.size());
  if (k < 1) throw std::invalid_argument("build_graph: k must be positive");
  if (n < 2 || k >= n)
    throw std::invalid_argument("build_graph: need n >= 2 and k < n");
  if (sigma && *sigma <= 0.0)
    throw std::invalid_argument("build_graph: sigma must be positive");
  for (const auto& loc : locations) {
    if (!std::isfinite(loc.u1) || !std::isfinite(loc.u2))
      throw std::invalid_argument("build_graph: non-finite location");
  }

  bool any_distinct = false;
  for (int i = 1; i < n && !any_distinct; ++i)
    any_distinct = sq_dist(locations[i], locations[0]) > 0.0;
  if (!any_distinct)
    throw std::runtime_error("build_graph: fewer than 2 distinct locations");

  // k nearest neighbors per node, ties broken by node index.
  std::vector<std::vector<int>> knn(n);
  std::vector<std::pair<double, int>> cand;
  cand.reserve(n - 1);
  for (int i = 0; i < n; ++i) {
    cand.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.emplace_back(sq_dist(locations[i], locations[j]), j);
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    knn[i].reserve(k);
    for (int m = 0; m < k; ++m) knn[i].push_back(cand[m].second);
  }

  // Union rule: edge when either endpoint lists the other.
  std::vector<std::vector<int>> nbrs(n);
  for (int i = 0; i < n; ++i) {
    for (int j : knn[i]) {
      nbrs[i].push_back(j);
      nbrs[j].push_back(i);
    }
  }
  // Coincident points get a direct edge regardless of neighbor rank.
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (sq_dist(locations[i], locations[j]) == 0.0) {
        nbrs[i].push_back(j);
        nbrs[j].push_back(i);
      }
    }
  }
  for (auto& v : nbrs) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  double sig;
  if (sigma) {
    sig = *sigma;
  } else {
    // Auto bandwidth: median of the positive k-NN edge distances.
    std::vector<double> dists;
    for (int i = 0; i < n; ++i) {
      for (int j : knn[i]) {
        const double d2 = sq_dist(locations[i], locations[j]);
        if (d2 > 0.0) dists.push_back(std::sqrt(d2));
      }
    }
    if (dists.empty())
      throw std::runtime_error("build_graph: cannot infer sigma");
    Vec dv = Eigen::Map<Vec>(dists.data(), static_cast<Eigen::Index>(dists.size()));
    sig = median(dv);
  }

  SpatialGraph g;
  g.k_ = k;
  g.sigma_ = sig;

  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < n; ++i) {
    for (int j : nbrs[i]) {
      const double d2 = sq_dist(locations[i], locations[j]);
      const double w = d2 == 0.0 ? 1.0 : std::exp(-d2 / (sig * sig));
      trips.emplace_back(i, j, w);
    }
  }
  g.adjacency_.resize(n, n);
  g.adjacency_.setFromTriplets(trips.begin(), trips.end());
  g.adjacency_.makeCompressed();

  g.degrees_ = g.adjacency_ * Vec::Ones(n);

  // L_sym = I - D^{-1/2} A D^{-1/2}
  Vec dinv_sqrt = g.degrees_.array().rsqrt().matrix();
  std::vector<Eigen::Triplet<double>> ltrips;
  ltrips.reserve(trips.size() + n);
  for (int i = 0; i < n; ++i) ltrips.emplace_back(i, i, 1.0);
  for (int i = 0; i < n; ++i) {
    for (SpMat::InnerIterator it(g.adjacency_, i); it; ++it) {
      const int j = static_cast<int>(it.col());
      ltrips.emplace_back(i, j, -it.value() * dinv_sqrt[i] * dinv_sqrt[j]);
    }
  }
  g.laplacian_.resize(n, n);
  g.laplacian_.setFromTriplets(ltrips.begin(), ltrips.end());
  g.laplacian_.makeCompressed();

  g.components_ = label_components(g.adjacency_, n, &g.num_components_);
  return g;
}

Vec SpatialGraph::laplacian_apply(const Vec& v) const {
  return laplacian_ * v;
}

Vec SpatialGraph::project_centered(const Vec& v) const {
  if (v.size() != degrees_.size())
    throw std::invalid_argument("project_centered: size mismatch");
  Vec num = Vec::Zero(num_components_);
  Vec den = Vec::Zero(num_components_);
  for (int i = 0; i < n(); ++i) {
    num[components_[i]] += degrees_[i] * v[i];
    den[components_[i]] += degrees_[i];
  }
  Vec out(v.size());
  for (int i = 0; i < n(); ++i)
    out[i] = v[i] - num[components_[i]] / den[components_[i]];
  return out;
}

double SpatialGraph::roughness(const Vec& v) const {
  return v.dot(laplacian_ * v);
}

SpectralSummary SpatialGraph::spectral_summary(int m) const {
  Vec eigs;
  if (n() <= 2000) {
    Mat dense(laplacian_);
    Eigen::SelfAdjointEigenSolver<Mat> es(dense, Eigen::EigenvaluesOnly);
    eigs = es.eigenvalues();
  } else {
    // Lanczos with full reorthogonalization from a seeded start vector;
    // Ritz values of the tridiagonal stand in for the spectrum.
    m = std::min(std::max(m, 8), n());
    CounterRng rng(0x5EC7BA1ULL);
    Vec q = Vec::NullaryExpr(n(), [&](Eigen::Index) { return rng.normal(); });
    q.normalize();
    Mat basis(n(), m);
    Vec alpha(m), beta(m);
    Vec prev = Vec::Zero(n());
    double beta_prev = 0.0;
    int steps = 0;
    for (int j = 0; j < m; ++j) {
      basis.col(j) = q;
      Vec w = laplacian_ * q - beta_prev * prev;
      alpha[j] = q.dot(w);
      w -= alpha[j] * q;
      w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
      const double b = w.norm();
      steps = j + 1;
      if (b < 1e-12) break;
      beta[j] = b;
      prev = q;
      q = w / b;
      beta_prev = b;
    }
    Mat tri = Mat::Zero(steps, steps);
    for (int j = 0; j < steps; ++j) {
      tri(j, j) = alpha[j];
      if (j + 1 < steps) tri(j, j + 1) = tri(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(tri, Eigen::EigenvaluesOnly);
    eigs = es.eigenvalues();
  }

  std::vector<double> nonzero;
  nonzero.reserve(eigs.size());
  for (Eigen::Index i = 0; i < eigs.size(); ++i)
    if (eigs[i] > 1e-8) nonzero.push_back(eigs[i]);
  SpectralSummary s;
  s.max_eigenvalue = eigs.maxCoeff();
  if (nonzero.empty()) {
    s.median_nonzero_eigenvalue = 0.0;
  } else {
    Vec nz = Eigen::Map<Vec>(nonzero.data(),
                             static_cast<Eigen::Index>(nonzero.size()));
    s.median_nonzero_eigenvalue = median(nz);
  }
  return s;
}

}  // namespace ssvcqr
