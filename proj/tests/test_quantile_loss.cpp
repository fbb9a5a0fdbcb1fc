#include "ssvcqr/quantile_loss.hpp"

#include "ssvcqr/rng.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace ssvcqr;
using ssvcqr::testing::group_shrink_ray_oracle;
using ssvcqr::testing::prox_grid_oracle;

TEST_CASE("rho: pinned values") {
  CHECK(rho(0.0, 0.5) == 0.0);
  CHECK(rho(2.0, 0.5) == doctest::Approx(1.0));
  CHECK(rho(-2.0, 0.5) == doctest::Approx(1.0));
  // definition r (tau - 1{r<0}) = (-1)(0.3 - 1)
  CHECK(rho(-1.0, 0.3) == doctest::Approx(0.7));
}

TEST_CASE("rho: nonnegative, zero only at zero") {
  CounterRng rng(11);
  for (int i = 0; i < 500; ++i) {
    const double r = rng.uniform(-5, 5);
    const double tau = rng.uniform(0.05, 0.95);
    CHECK(rho(r, tau) >= 0.0);
    if (r != 0.0) CHECK(rho(r, tau) > 0.0);
  }
}

TEST_CASE("psi: branch values and kink convention") {
  CHECK(psi(1.5, 0.3) == doctest::Approx(0.3));
  CHECK(psi(-1.5, 0.3) == doctest::Approx(-0.7));
  CHECK(psi(0.0, 0.3) == doctest::Approx(0.3));  // 1{r<0} = 0 at r = 0
}

TEST_CASE("prox_check: dead zone and shifts") {
  CHECK(prox_check(0.4, 1.0, 0.5) == 0.0);
  CHECK(prox_check(2.0, 1.0, 0.5) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(prox_check(-1.0, 1.0, 0.3) == doctest::Approx(-0.3).epsilon(1e-12));
}

TEST_CASE("prox_check: matches grid+refine oracle") {
  CounterRng rng(22);
  for (int i = 0; i < 300; ++i) {
    const double v = rng.uniform(-4, 4);
    const double gamma = rng.uniform(0.05, 3.0);
    const double tau = rng.uniform(0.05, 0.95);
    CHECK(std::abs(prox_check(v, gamma, tau) -
                   prox_grid_oracle(v, gamma, tau)) <= 1e-8);
  }
}

TEST_CASE("prox_check: 1-Lipschitz and monotone") {
  CounterRng rng(33);
  const double tau = 0.35, gamma = 0.7;
  double prev_v = -10.0, prev_p = prox_check(prev_v, gamma, tau);
  for (int i = 0; i < 2000; ++i) {
    const double v = prev_v + rng.uniform(0.0, 0.02);
    const double p = prox_check(v, gamma, tau);
    CHECK(p >= prev_p - 1e-15);                 // monotone
    CHECK(std::abs(p - prev_p) <= (v - prev_v) + 1e-15);  // 1-Lipschitz
    prev_v = v;
    prev_p = p;
  }
}

TEST_CASE("moreau: pinned values and gradient range") {
  const MoreauParams mp{0.5, 0.4};
  auto at_zero = moreau_value_grad(0.0, mp);
  CHECK(at_zero.value == 0.0);
  CHECK(at_zero.grad == 0.0);
  // r >> h tau: prox shifts by h tau, gradient = tau
  auto big = moreau_value_grad(10.0, mp);
  CHECK(big.grad == doctest::Approx(0.4).epsilon(1e-12));
  CounterRng rng(44);
  for (int i = 0; i < 500; ++i) {
    auto vg = moreau_value_grad(rng.uniform(-6, 6),
                                {rng.uniform(0.01, 2.0), rng.uniform(0.1, 0.9)});
    CHECK(vg.grad <= 0.9 + 1e-12);
    CHECK(vg.grad >= -0.9 - 1e-12);
  }
}

TEST_CASE("moreau: gradient matches central finite differences") {
  CounterRng rng(55);
  for (int i = 0; i < 300; ++i) {
    const double r = rng.uniform(-5, 5);
    const MoreauParams mp{rng.uniform(0.05, 2.0), rng.uniform(0.1, 0.9)};
    const double eps = 1e-6 * std::max(1.0, std::abs(r));
    const double fd = (moreau_value_grad(r + eps, mp).value -
                       moreau_value_grad(r - eps, mp).value) /
                      (2.0 * eps);
    const double g = moreau_value_grad(r, mp).grad;
    if (std::abs(g) < 1e-4)
      CHECK(std::abs(g - fd) <= 1e-8 + 1e-5 * std::abs(fd));
    else
      CHECK(g == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("moreau: envelope below rho and converging as h drops") {
  CounterRng rng(66);
  for (int i = 0; i < 400; ++i) {
    const double r = rng.uniform(-4, 4);
    const double tau = rng.uniform(0.1, 0.9);
    const double h = rng.uniform(0.01, 2.0);
    CHECK(moreau_value_grad(r, {h, tau}).value <= rho(r, tau) + 1e-14);
    CHECK(std::abs(moreau_value_grad(r, {1e-6, tau}).value - rho(r, tau)) <=
          1e-5);
  }
}

TEST_CASE("subgradient inequality rho(r-t) - rho(r) + t psi(r) >= 0") {
  CounterRng rng(77);
  for (int i = 0; i < 2000; ++i) {
    const double r = rng.uniform(-5, 5);
    const double t = rng.uniform(-5, 5);
    const double tau = rng.uniform(0.05, 0.95);
    CHECK(rho(r - t, tau) - rho(r, tau) + t * psi(r, tau) >= -1e-12);
  }
}

TEST_CASE("group_shrink: pinned values") {
  Vec v(2);
  v << 3.0, 4.0;
  const Vec z = group_shrink(v, 2.5);
  CHECK(z[0] == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(z[1] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(group_shrink(v, 5.0).isZero(0.0));  // ||v|| = 5 <= kappa
  CHECK(group_shrink(v, 0.0) == v);
}

TEST_CASE("group_shrink: minimizer oracle on the ray") {
  CounterRng rng(88);
  for (int i = 0; i < 100; ++i) {
    Vec v(5);
    for (int j = 0; j < 5; ++j) v[j] = rng.uniform(-2, 2);
    const double kappa = rng.uniform(0.0, 3.0);
    const Vec z = group_shrink(v, kappa);
    const Vec oracle = group_shrink_ray_oracle(v, kappa);
    CHECK((z - oracle).norm() <= 1e-6 * (1.0 + oracle.norm()));
  }
}
