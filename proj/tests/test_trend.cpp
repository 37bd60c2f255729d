#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "crn/estimators.hpp"
#include "networks.hpp"

using namespace crn;
using namespace crn::testnets;

namespace {

// mean relative error of the true-basis coefficients over the 4 channels
double structure_error(std::uint64_t seed, int Q, double lambda, double eps) {
  const TrajectorySet ts = simulate_set(example1(), make_state({20, 10}), 10.0, Q, seed, 2);
  const ChannelSummary cs = identify_channels(ts);
  if (cs.num_channels() != 4) return std::numeric_limits<double>::quiet_NaN();
  const BasisLibrary lib = BasisLibrary::replicated(polynomial_basis(2), 4);
  const PrecomputedDesign d = precompute(ts, cs, lib);

  SparseLearnProblem problem;
  problem.eps = {eps};
  problem.lambda.assign(4, lambda);
  problem.rescaling = build_preconditioner(ts, cs, lib);
  FistaConfig cfg;
  cfg.rel_tol = 5e-8;
  const SparseLearnResult result = learn_network(problem, d, cfg, 2);

  const std::vector<int> true_basis = {1, 4, 2, 1};
  const std::vector<double> true_value = {1.0, 0.1, 1.0, 0.9};
  double err = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (result.channels[static_cast<std::size_t>(i)].failed)
      return std::numeric_limits<double>::quiet_NaN();
    const Eigen::VectorXd& w = result.channels[static_cast<std::size_t>(i)].omega;
    err += std::abs(w[true_basis[static_cast<std::size_t>(i)]] -
                    true_value[static_cast<std::size_t>(i)]) /
           true_value[static_cast<std::size_t>(i)];
  }
  return err / 4.0;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("structure error decreases along the infinite-data schedule") {
  // lambda and eps shrink while the data grows; the growth happens through
  // the trajectory count because this network is absorbing (a longer
  // horizon adds dead time past extinction, not events). The median over
  // 10 seeds must fall at every stage.
  const std::vector<int> counts = {5, 20, 80};
  const std::vector<double> lambdas = {0.2, 0.1, 0.01};
  const std::vector<double> epsilons = {0.1, 0.05, 0.025};

  std::vector<double> medians;
  for (std::size_t stage = 0; stage < 3; ++stage) {
    std::vector<double> errors;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const double err =
          structure_error(900 + seed, counts[stage], lambdas[stage], epsilons[stage]);
      REQUIRE(std::isfinite(err));
      errors.push_back(err);
    }
    medians.push_back(median(errors));
    MESSAGE("stage ", stage, " median error ", medians.back());
  }
  CHECK(medians[1] < medians[0]);
  CHECK(medians[2] < medians[1]);
}
