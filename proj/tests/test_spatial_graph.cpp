#include "ssvcqr/spatial_graph.hpp"

#include "ssvcqr/rng.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>

using namespace ssvcqr;
using ssvcqr::testing::random_locations;

namespace {

Vec dense_eigenvalues(const SpatialGraph& g) {
  Mat dense(g.laplacian());
  Eigen::SelfAdjointEigenSolver<Mat> es(dense, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace

TEST_CASE("build_graph: two nodes, single kernel edge") {
  const double d = 0.37;
  std::vector<Location> locs = {{0.0, 0.0}, {d, 0.0}};
  const SpatialGraph g = build_graph(locs, 1, d);
  CHECK(g.n() == 2);
  CHECK(g.num_components() == 1);
  CHECK(Mat(g.adjacency())(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(Mat(g.adjacency())(1, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(Mat(g.adjacency())(0, 0) == 0.0);
}

TEST_CASE("build_graph: three collinear nodes form a path under k=1") {
  // Brute-force ranks: middle node is nearest to both ends, so the union
  // rule yields exactly the two path edges.
  std::vector<Location> locs = {{0.0, 0.0}, {0.5, 0.0}, {1.0, 0.0}};
  const SpatialGraph g = build_graph(locs, 1, 0.5);
  Mat a(g.adjacency());
  CHECK(a(0, 1) > 0.0);
  CHECK(a(1, 2) > 0.0);
  CHECK(a(0, 2) == 0.0);
  CHECK(g.num_components() == 1);
}

TEST_CASE("build_graph: coincident pair connected with weight 1") {
  std::vector<Location> locs = {{0.2, 0.2}, {0.2, 0.2}, {0.9, 0.9}};
  const SpatialGraph g = build_graph(locs, 1, std::optional<double>(0.5));
  CHECK(Mat(g.adjacency())(0, 1) == 1.0);
}

TEST_CASE("build_graph: parameter and degeneracy errors") {
  std::vector<Location> locs = {{0.0, 0.0}, {1.0, 1.0}, {0.5, 0.2}};
  CHECK_THROWS_AS(build_graph(locs, 0, std::nullopt), std::invalid_argument);
  CHECK_THROWS_AS(build_graph(locs, 3, std::nullopt), std::invalid_argument);
  CHECK_THROWS_AS(build_graph(locs, 1, -0.3), std::invalid_argument);
  std::vector<Location> same = {{0.1, 0.1}, {0.1, 0.1}, {0.1, 0.1}};
  CHECK_THROWS_AS(build_graph(same, 1, 0.5), std::runtime_error);
}

TEST_CASE("normalized_laplacian: two-node graph has eigenvalues {0, 2}") {
  std::vector<Location> locs = {{0.0, 0.0}, {0.3, 0.0}};
  const SpatialGraph g = build_graph(locs, 1, 1.7);
  Mat l(g.laplacian());
  CHECK(l(0, 0) == doctest::Approx(1.0));
  CHECK(l(0, 1) == doctest::Approx(-1.0));
  const Vec eigs = dense_eigenvalues(g);
  CHECK(eigs[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eigs[1] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("normalized_laplacian: 3-node unit path spectrum {0, 1, 2}") {
  // Unit weights forced by sigma -> infinity approximation: use equal
  // spacing and huge sigma so kernel weights are 1 up to 1e-12.
  std::vector<Location> locs = {{0.0, 0.0}, {1e-5, 0.0}, {2e-5, 0.0}};
  const SpatialGraph g = build_graph(locs, 1, 1.0);
  const Vec eigs = dense_eigenvalues(g);
  CHECK(eigs[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(eigs[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(eigs[2] == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("laplacian null space: L D^{1/2} 1_C vanishes per component") {
  CounterRng rng(101);
  // Two clusters far apart with small k stay disconnected.
  std::vector<Location> locs;
  for (int i = 0; i < 15; ++i)
    locs.push_back({rng.uniform(0.0, 0.1), rng.uniform(0.0, 0.1)});
  for (int i = 0; i < 15; ++i)
    locs.push_back({rng.uniform(5.0, 5.1), rng.uniform(5.0, 5.1)});
  const SpatialGraph g = build_graph(locs, 2, std::nullopt);
  REQUIRE(g.num_components() == 2);
  for (int c = 0; c < g.num_components(); ++c) {
    Vec v = Vec::Zero(g.n());
    for (int i = 0; i < g.n(); ++i)
      if (g.components()[i] == c) v[i] = std::sqrt(g.degrees()[i]);
    CHECK(g.laplacian_apply(v).norm() <= 1e-10 * v.norm());
  }
}

TEST_CASE("project_centered: pinned behaviors") {
  CounterRng rng(202);
  const auto locs = random_locations(40, rng);
  const SpatialGraph g = build_graph(locs, 4, std::nullopt);

  // Constant vector on a connected graph projects to zero.
  REQUIRE(g.num_components() == 1);
  CHECK(g.project_centered(Vec::Constant(40, 3.7)).norm() <= 1e-12);

  // Already-centered vectors are unchanged; idempotence.
  Vec v(40);
  for (int i = 0; i < 40; ++i) v[i] = rng.normal();
  const Vec c1 = g.project_centered(v);
  const Vec c2 = g.project_centered(c1);
  CHECK((c2 - c1).norm() <= 1e-12 * std::max(1.0, c1.norm()));
  CHECK(std::abs(g.degrees().dot(c1)) <= 1e-12 * g.degrees().norm() * v.norm());
}

TEST_CASE("project_centered: per-component weighted means vanish") {
  CounterRng rng(303);
  std::vector<Location> locs;
  for (int i = 0; i < 20; ++i)
    locs.push_back({rng.uniform(0.0, 0.1), rng.uniform(0.0, 0.1)});
  for (int i = 0; i < 25; ++i)
    locs.push_back({rng.uniform(9.0, 9.1), rng.uniform(9.0, 9.1)});
  const SpatialGraph g = build_graph(locs, 2, std::nullopt);
  REQUIRE(g.num_components() == 2);
  Vec v(g.n());
  for (int i = 0; i < g.n(); ++i) v[i] = rng.normal();
  const Vec c = g.project_centered(v);
  for (int comp = 0; comp < 2; ++comp) {
    double mean = 0.0;
    for (int i = 0; i < g.n(); ++i)
      if (g.components()[i] == comp) mean += g.degrees()[i] * c[i];
    CHECK(std::abs(mean) <= 1e-12 * g.degrees().sum() * v.norm());
  }
}

TEST_CASE("spectral_summary: pinned spectra") {
  std::vector<Location> two = {{0.0, 0.0}, {0.4, 0.0}};
  const auto s2 = build_graph(two, 1, 1.0).spectral_summary();
  CHECK(s2.max_eigenvalue == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(s2.median_nonzero_eigenvalue == doctest::Approx(2.0).epsilon(1e-10));

  // 3-node near-unit path: nonzero eigenvalues {1, 2}, median 1.5.
  std::vector<Location> path = {{0.0, 0.0}, {1e-5, 0.0}, {2e-5, 0.0}};
  const auto s3 = build_graph(path, 1, 1.0).spectral_summary();
  CHECK(s3.median_nonzero_eigenvalue == doctest::Approx(1.5).epsilon(1e-5));

  // Complete graph on 4 nodes with near-unit weights: all nonzero 4/3.
  std::vector<Location> k4 = {{0.0, 0.0}, {1e-5, 0.0}, {0.0, 1e-5},
                              {1e-5, 1e-5}};
  const auto s4 = build_graph(k4, 3, 1.0).spectral_summary();
  CHECK(s4.max_eigenvalue == doctest::Approx(4.0 / 3.0).epsilon(1e-5));
  CHECK(s4.median_nonzero_eigenvalue ==
        doctest::Approx(4.0 / 3.0).epsilon(1e-5));
}

TEST_CASE("graph suite: spectrum bounds, roughness identity, Poincare") {
  CounterRng rng(404);
  for (int rep = 0; rep < 25; ++rep) {
    const int n = 10 + static_cast<int>(rng.next_u64() % 80);
    const int k = 1 + static_cast<int>(rng.next_u64() % 5);
    const auto locs = random_locations(n, rng);
    const SpatialGraph g = build_graph(locs, k, std::nullopt);

    // Exact symmetry of the adjacency.
    SpMat diff = SpMat(g.adjacency().transpose()) - g.adjacency();
    CHECK(Mat(diff).cwiseAbs().maxCoeff() == 0.0);

    const Vec eigs = dense_eigenvalues(g);
    CHECK(eigs.minCoeff() >= -1e-10);
    CHECK(eigs.maxCoeff() <= 2.0 + 1e-10);

    // Roughness identity over ordered pairs with the 1/2 factor.
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal();
    double by_edges = 0.0;
    const SpMat& a = g.adjacency();
    for (int i = 0; i < a.outerSize(); ++i)
      for (SpMat::InnerIterator it(a, i); it; ++it) {
        const int l = static_cast<int>(it.col());
        const double t = v[i] / std::sqrt(g.degrees()[i]) -
                         v[l] / std::sqrt(g.degrees()[l]);
        by_edges += 0.5 * it.value() * t * t;
      }
    CHECK(g.roughness(v) ==
          doctest::Approx(by_edges).epsilon(1e-10));

    // Strict positivity on centered nonzero vectors (connected case).
    if (g.num_components() == 1) {
      const Vec c = g.project_centered(v);
      if (c.norm() > 1e-8) CHECK(g.roughness(c) > 0.0);
    }
  }
}

TEST_CASE("sigma auto uses the median k-NN distance") {
  // Two nodes at distance d: auto sigma = d, weight exp(-1).
  std::vector<Location> locs = {{0.0, 0.0}, {0.25, 0.0}};
  const SpatialGraph g = build_graph(locs, 1, std::nullopt);
  CHECK(g.sigma() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(Mat(g.adjacency())(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}
