#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "crn/softplus.hpp"

using namespace crn;

namespace {

const std::vector<double> kEpsilons = {0.05, 0.1, 1.0};

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i <= n; ++i) g.push_back(lo + (hi - lo) * i / n);
  return g;
}

}  // namespace

TEST_CASE("pinned values") {
  CHECK(g_eps(0.0, {0.1}) == doctest::Approx(0.1 * std::log(2.0)).epsilon(1e-12));
  CHECK(std::abs(g_eps(1000.0, {0.1}) - 1000.0) < 1e-12);
  CHECK(g_eps(-2.0, {0.0}) == 0.0);
  CHECK(g_eps(3.5, {0.0}) == 3.5);

  // e^{-50}(1 - e^{-50}) rounds to e^{-50} itself in double precision
  const double gp = g_eps_prime(-5.0, {0.1});
  CHECK(gp > 0.0);
  CHECK(gp <= std::exp(-50.0));

  // ln G at x = 0 (closed forms)
  CHECK(ln_g_eps(0.0, {0.1}) == doctest::Approx(std::log(0.1) + std::log(std::log(2.0))));
  CHECK(ln_g_eps_prime(0.0, {0.1}) == doctest::Approx(1.0 / (2.0 * std::log(2.0) * 0.1)));
  CHECK(ln_g_eps_double_prime(0.0, {0.1}) ==
        doctest::Approx((1.0 - 1.0 / std::log(2.0)) / (4.0 * std::log(2.0) * 0.01)));
}

TEST_CASE("softplus bracket: max(x,0) < G <= max(x,0) + eps ln 2") {
  for (double eps : kEpsilons) {
    for (double u : grid(-30.0, 30.0, 600)) {
      const double x = u * eps;
      const double g = g_eps(x, {eps});
      CHECK(g > std::max(x, 0.0));
      CHECK(g <= std::max(x, 0.0) + eps * std::log(2.0));
    }
  }
}

TEST_CASE("derivative ranges") {
  for (double eps : kEpsilons) {
    for (double x : grid(-3.0, 3.0, 121)) {
      const double p = g_eps_prime(x, {eps});
      CHECK(p > 0.0);
      if (std::abs(x) / eps <= 30.0)
        CHECK(p < 1.0);  // strict only while 1 - p is representable
      else
        CHECK(p <= 1.0);
      CHECK(g_eps_double_prime(x, {eps}) > 0.0);
      CHECK(g_eps_double_prime(x, {eps}) <
            std::exp(-std::abs(x) / eps) / eps * (1.0 + 1e-12));
      CHECK(ln_g_eps_double_prime(x, {eps}) < 0.0);
    }
  }
}

TEST_CASE("ln G' bracket for x > 0") {
  for (double eps : kEpsilons) {
    for (double x : grid(0.01, 3.0, 200)) {
      if (x / eps > 30.0) continue;  // bounds merge below double resolution
      const double v = ln_g_eps_prime(x, {eps});
      const double lower = 1.0 / ((1.0 + std::exp(-x / eps)) * (x + eps * std::log(2.0)));
      CHECK(v > lower);
      CHECK(v < 1.0 / x);
    }
    // far out the value collapses onto 1/x
    CHECK(ln_g_eps_prime(60.0 * eps, {eps}) == doctest::Approx(1.0 / (60.0 * eps)));
  }
}

TEST_CASE("finite differences confirm every derivative") {
  const double h = 1e-5;
  for (double eps : kEpsilons) {
    for (double x : grid(-3.0, 3.0, 60)) {
      const double fd_g = (g_eps(x + h, {eps}) - g_eps(x - h, {eps})) / (2.0 * h);
      CHECK(std::abs(g_eps_prime(x, {eps}) - fd_g) < 1e-6);

      const double fd_gg = (g_eps_prime(x + h, {eps}) - g_eps_prime(x - h, {eps})) / (2.0 * h);
      CHECK(g_eps_double_prime(x, {eps}) == doctest::Approx(fd_gg).epsilon(1e-4));

      const double fd_ln = (ln_g_eps(x + h, {eps}) - ln_g_eps(x - h, {eps})) / (2.0 * h);
      CHECK(ln_g_eps_prime(x, {eps}) == doctest::Approx(fd_ln).epsilon(1e-4));

      const double fd_lnp =
          (ln_g_eps_prime(x + h, {eps}) - ln_g_eps_prime(x - h, {eps})) / (2.0 * h);
      CHECK(ln_g_eps_double_prime(x, {eps}) == doctest::Approx(fd_lnp).epsilon(1e-3));
    }
  }
}

TEST_CASE("deeply negative arguments stay finite and accurate") {
  const double eps = 0.1;
  // above/below the expansion switch the two formulas must agree
  for (double u : grid(-35.0, -25.0, 40)) {
    const double x = u * eps;
    const double direct = std::log(eps * std::log1p(std::exp(u)));
    CHECK(ln_g_eps(x, {eps}) == doctest::Approx(direct).epsilon(1e-12));
  }
  // far beyond double underflow for exp(x/eps)
  const double v = ln_g_eps(-1000.0, {eps});
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(std::log(eps) - 10000.0));
  CHECK(ln_g_eps_prime(-1000.0, {eps}) == doctest::Approx(1.0 / eps));
  CHECK(std::isfinite(ln_g_eps_double_prime(-1000.0, {eps})));
  CHECK(ln_g_eps_double_prime(-1000.0, {eps}) <= 0.0);
}

TEST_CASE("epsilon validation") {
  CHECK_THROWS_AS(g_eps(1.0, {-0.1}), InvalidInputError);
  CHECK_THROWS_AS(g_eps_prime(1.0, {0.0}), InvalidInputError);
  CHECK_THROWS_AS(ln_g_eps(1.0, {0.0}), InvalidInputError);
  CHECK_THROWS_AS(ln_g_eps_prime(1.0, {-1.0}), InvalidInputError);
  CHECK_THROWS_AS(ln_g_eps_double_prime(1.0, {0.0}), InvalidInputError);
}
