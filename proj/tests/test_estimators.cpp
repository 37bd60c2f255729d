#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "crn/estimators.hpp"
#include "networks.hpp"

using namespace crn;
using namespace crn::testnets;

namespace {

Trajectory make_traj(std::initializer_list<int> x0, const std::vector<std::vector<int>>& states,
                     const std::vector<double>& holds, double final_hold, double horizon) {
  const State init = make_state(x0);
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m(
      static_cast<long>(states.size()), init.size());
  for (std::size_t l = 0; l < states.size(); ++l)
    for (int s = 0; s < init.size(); ++s) m(static_cast<long>(l), s) = states[l][static_cast<std::size_t>(s)];
  return Trajectory(init, std::move(m),
                    Eigen::Map<const Eigen::VectorXd>(holds.data(), static_cast<long>(holds.size())),
                    final_hold, horizon);
}

KnownStructureProblem known_problem(const ReactionNetwork& net, const TrajectorySet& ts) {
  return build_known_structure(net, ts, identify_channels(ts));
}

}  // namespace

TEST_CASE("closed form on the two-event toy path") {
  TrajectorySet ts;
  ts.horizon = 2.0;
  ts.trajectories.push_back(make_traj({2}, {{1}}, {1.0}, 1.0, 2.0));
  const KnownStructureProblem p = known_problem(death(1.0), ts);
  CHECK(estimate_rates_closed_form(p, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("no-information channel raises") {
  // the channel is declared but the basis is identically zero along the data
  TrajectorySet ts;
  ts.horizon = 3.0;
  ts.trajectories.push_back(make_traj({0}, {}, {}, 3.0, 3.0));
  ChannelSummary cs;
  cs.vectors = {make_state({-1})};
  cs.counts = {0};
  cs.event_channels = {{}};
  cs.activations = {{}};
  const KnownStructureProblem p = build_known_structure(death(1.0), ts, cs);
  CHECK_THROWS_AS(estimate_rates_closed_form(p, 0), NoInformationError);
}

TEST_CASE("example 1 rates land within 0.05 of the truth") {
  const TrajectorySet ts = simulate_set(example1(), make_state({20, 10}), 10.0, 100, 20260809, 2);
  const KnownStructureProblem p = known_problem(example1(), ts);
  const auto estimates = estimate_all_rates(p);
  const std::vector<double> truth = {1.0, 0.1, 1.0, 0.9};
  REQUIRE(estimates.size() == 4);
  for (std::size_t r = 0; r < 4; ++r) {
    CHECK(estimates[r].method == "closed-form");
    CHECK_FALSE(estimates[r].no_information);
    CHECK(std::abs(estimates[r].kappa - truth[r]) < 0.05);
  }
}

TEST_CASE("example 3 rates track the published estimates") {
  const TrajectorySet ts = simulate_set(example3(), make_state({1, 0, 0, 0}), 100.0, 10, 16, 2);
  const KnownStructureProblem p = known_problem(example3(), ts);
  const auto estimates = estimate_all_rates(p);
  REQUIRE(estimates.size() == 6);
  CHECK(std::abs(estimates[3].kappa - 99.3) / 99.3 < 0.03);
  CHECK(std::abs(estimates[1].kappa - 0.001) / 0.001 < 0.2);
}

TEST_CASE("gradient descent agrees with the closed form on singleton channels") {
  const TrajectorySet ts = simulate_set(example1(), make_state({20, 10}), 5.0, 20, 3, 2);
  const KnownStructureProblem p = known_problem(example1(), ts);
  for (int i = 0; i < p.design.num_channels(); ++i) {
    const double closed = estimate_rates_closed_form(p, i);
    const GradientResult gd = estimate_rates_gradient(p, i);
    REQUIRE(gd.converged);
    CHECK(std::abs(gd.omega[0] - closed) / closed < 1e-6);
  }
}

TEST_CASE("example 2 shared channel recovers both rates") {
  const TrajectorySet ts = simulate_set(example2(), make_state({25, 15}), 10.0, 100, 30, 2);
  const KnownStructureProblem p = known_problem(example2(), ts);
  const auto estimates = estimate_all_rates(p);
  REQUIRE(estimates.size() == 5);
  CHECK(estimates[1].method == "gradient");
  CHECK(estimates[4].method == "gradient");
  CHECK(estimates[1].converged);
  CHECK(std::abs(estimates[1].kappa - 0.3) < 0.02);
  CHECK(std::abs(estimates[4].kappa - 0.1) < 0.02);
  // the singleton channels stay closed-form
  CHECK(estimates[0].method == "closed-form");
  CHECK(std::abs(estimates[0].kappa - 1.2) < 0.05);
  CHECK(std::abs(estimates[2].kappa - 0.8) < 0.05);
  CHECK(std::abs(estimates[3].kappa - 0.75) < 0.05);
}

TEST_CASE("boundary optimum pins a shared rate at the projection floor") {
  // Hand-built shared channel (vector (-1), reactions 0 -> . and A -> .):
  // from y = (5): events to (4) after 0.5 and to (3) after 0.7, final 0.8.
  // Holding the intensity at the activation rows fixed, the constant column
  // is the more expensive way to produce intensity, so its coordinate sits
  // on the constraint boundary: at w1 = 0 the reduced problem
  // -ln(5 w2) - ln(4 w2) + 7.7 w2 has optimum w2 = 2/7.7 and the w1
  // gradient there is -1/(5 w2) - 1/(4 w2) + 2 = +0.267 > 0.
  TrajectorySet ts;
  ts.horizon = 2.0;
  ts.trajectories.push_back(make_traj({5}, {{4}, {3}}, {0.5, 0.7}, 0.8, 2.0));
  ReactionNetwork net;
  net.n_species = 1;
  net.reactions = {reaction(ReactionKind::Source, -1, -1, 1.0, {-1}),
                   reaction(ReactionKind::Unary, 0, -1, 1.0, {-1})};
  const KnownStructureProblem p = known_problem(net, ts);
  REQUIRE(p.design.num_channels() == 1);
  REQUIRE(p.design.library.channel_size(0) == 2);
  const GradientResult gd = estimate_rates_gradient(p, 0);
  REQUIRE(gd.converged);
  CHECK(gd.omega[0] == doctest::Approx(1e-12));  // floor
  CHECK(gd.omega[1] == doctest::Approx(2.0 / 7.7).epsilon(1e-6));
}

TEST_CASE("gradient iteration cap reports non-convergence") {
  const TrajectorySet ts = simulate_set(example2(), make_state({25, 15}), 4.0, 5, 2, 2);
  const KnownStructureProblem p = known_problem(example2(), ts);
  GradientConfig cfg;
  cfg.max_iters = 3;
  int shared = -1;
  for (int i = 0; i < p.design.num_channels(); ++i)
    if (p.reactions_by_channel[static_cast<std::size_t>(i)].size() == 2) shared = i;
  const GradientResult gd = estimate_rates_gradient(p, shared, cfg);
  CHECK_FALSE(gd.converged);
  CHECK(gd.iterations == 3);
}

TEST_CASE("unmatched reactions and channels are reported") {
  // generate with example 1 but pretend the model also has a 0 -> A reaction
  ReactionNetwork net = example1();
  net.reactions.push_back(reaction(ReactionKind::Source, -1, -1, 0.5, {2, 0}));  // never fires
  const TrajectorySet ts = simulate_set(example1(), make_state({20, 10}), 5.0, 10, 4, 2);
  const KnownStructureProblem p = known_problem(net, ts);
  REQUIRE(p.unmatched_reactions.size() == 1);
  CHECK(p.unmatched_reactions[0] == 4);
  const auto estimates = estimate_all_rates(p);
  CHECK(estimates[4].no_information);
  CHECK(estimates[4].kappa == 0.0);
  CHECK(estimates[4].method == "none");
  // the other four are still estimated
  for (int r = 0; r < 4; ++r) CHECK_FALSE(estimates[static_cast<std::size_t>(r)].no_information);
}

TEST_CASE("preconditioner rounds activation maxima to one significant digit") {
  // single event: channel (-1,0) activated at (3,2)
  TrajectorySet ts;
  ts.horizon = 1.0;
  ts.trajectories.push_back(make_traj({3, 2}, {{2, 2}}, {0.5}, 0.5, 1.0));
  const ChannelSummary cs = identify_channels(ts);
  const BasisLibrary lib = BasisLibrary::replicated(polynomial_basis(2), 1);
  const Eigen::VectorXd c = build_preconditioner(ts, cs, lib);
  // basis values at (3,2): 1, 3, 2, 9, 6, 4
  const std::vector<double> want = {1.0, 3.0, 2.0, 9.0, 6.0, 4.0};
  for (int j = 0; j < 6; ++j) CHECK(c[j] == want[static_cast<std::size_t>(j)]);
}

TEST_CASE("preconditioner floors at one and rounds to a single digit") {
  const TrajectorySet ts = simulate_set(example2(), make_state({25, 15}), 10.0, 50, 8, 2);
  const ChannelSummary cs = identify_channels(ts);
  const BasisLibrary lib = BasisLibrary::replicated(polynomial_basis(2), cs.num_channels());
  const Eigen::VectorXd c = build_preconditioner(ts, cs, lib);
  for (int j = 0; j < c.size(); ++j) {
    CHECK(c[j] >= 1.0);
    const double mant = c[j] / std::pow(10.0, std::floor(std::log10(c[j])));
    CHECK(mant == doctest::Approx(std::round(mant)).epsilon(1e-12));  // one significant digit
  }
  // the constant basis always maps to 1
  for (int i = 0; i < cs.num_channels(); ++i)
    CHECK(c[lib.channel_ranges[static_cast<std::size_t>(i)].first] == 1.0);
  // the (x1)^2 column has seen values of order >= 1e6 in this system
  CHECK(c[3] >= 1e5);
}

TEST_CASE("sparse learning on example 1 finds the true structure") {
  const TrajectorySet ts = simulate_set(example1(), make_state({20, 10}), 10.0, 100, 20260809, 2);
  const ChannelSummary cs = identify_channels(ts);
  REQUIRE(cs.num_channels() == 4);
  const BasisLibrary lib = BasisLibrary::replicated(polynomial_basis(2), 4);
  const PrecomputedDesign d = precompute(ts, cs, lib);

  SparseLearnProblem problem;
  problem.eps = {0.1};
  problem.lambda = {0.01, 0.01, 0.01, 0.01};
  problem.rescaling = build_preconditioner(ts, cs, lib);

  FistaConfig cfg;
  cfg.rel_tol = 5e-8;
  const SparseLearnResult result = learn_network(problem, d, cfg, 2);
  REQUIRE_FALSE(result.any_failed);
  REQUIRE(result.all_converged);

  // true propensities: channel 1: 1.0 x1, channel 2: 0.1 x1 x2,
  // channel 3: 1.0 x2, channel 4: 0.9 x1 (basis order 1,x1,x2,x1^2,x1x2,x2^2)
  const std::vector<int> true_basis = {1, 4, 2, 1};
  const std::vector<double> true_value = {1.0, 0.1, 1.0, 0.9};
  for (int i = 0; i < 4; ++i) {
    const Eigen::VectorXd& w = result.channels[static_cast<std::size_t>(i)].omega;
    int dom = 1;  // largest magnitude among the non-constant bases
    for (int j = 2; j < w.size(); ++j)
      if (std::abs(w[j]) > std::abs(w[dom])) dom = j;
    CHECK(dom == true_basis[static_cast<std::size_t>(i)]);
    CHECK(std::abs(w[dom] - true_value[static_cast<std::size_t>(i)]) /
              true_value[static_cast<std::size_t>(i)] <
          0.2);
    // spurious structural terms stay small; the constant absorbs the
    // smoothing offset and is only sanity-bounded
    for (int j = 1; j < w.size(); ++j)
      if (j != dom) CHECK(std::abs(w[j]) < 0.3);
    CHECK(std::abs(w[0]) < 0.5);
  }
}

TEST_CASE("huge lambda zeroes every coefficient") {
  const TrajectorySet ts = simulate_set(example1(), make_state({20, 10}), 5.0, 10, 23, 2);
  const ChannelSummary cs = identify_channels(ts);
  const BasisLibrary lib = BasisLibrary::replicated(polynomial_basis(2), cs.num_channels());
  const PrecomputedDesign d = precompute(ts, cs, lib);

  // the penalty dominates once lambda exceeds the gradient at zero
  LikelihoodEngine probe(d);
  const ObjectiveEval at_zero = probe.smoothed(Eigen::VectorXd::Zero(lib.dimension()), {0.1});
  const double lambda_big = 1.01 * at_zero.gradient.cwiseAbs().maxCoeff();

  SparseLearnProblem problem;
  problem.eps = {0.1};
  problem.lambda.assign(static_cast<std::size_t>(cs.num_channels()), lambda_big);
  problem.rescaling = Eigen::VectorXd::Ones(lib.dimension());
  const SparseLearnResult result = learn_network(problem, d, FistaConfig{}, 1);
  for (const ChannelLearnResult& ch : result.channels) {
    REQUIRE_FALSE(ch.failed);
    CHECK(ch.report.converged);
    CHECK(ch.omega.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("rescaled solve maps back to an unrescaled optimum") {
  const TrajectorySet ts = simulate_set(example1(), make_state({20, 10}), 10.0, 20, 33, 2);
  const ChannelSummary cs = identify_channels(ts);
  const BasisLibrary lib = BasisLibrary::replicated(polynomial_basis(2), cs.num_channels());
  const PrecomputedDesign d = precompute(ts, cs, lib);
  const double lambda = 0.05;

  SparseLearnProblem rescaled;
  rescaled.eps = {0.1};
  rescaled.lambda.assign(4, lambda);
  rescaled.rescaling = build_preconditioner(ts, cs, lib);

  SparseLearnProblem plain = rescaled;
  plain.rescaling = Eigen::VectorXd::Ones(lib.dimension());

  FistaConfig cfg;
  cfg.rel_tol = 5e-8;
  const SparseLearnResult a = learn_network(rescaled, d, cfg, 2);
  const SparseLearnResult b = learn_network(plain, d, cfg, 2);
  REQUIRE(a.all_converged);
  REQUIRE(b.all_converged);

  LikelihoodEngine engine(d);
  for (int i = 0; i < 4; ++i) {
    const Eigen::VectorXd& w = a.channels[static_cast<std::size_t>(i)].omega;
    // optimality inclusion of the *unrescaled* problem at the mapped point
    Eigen::VectorXd grad;
    engine.smoothed_channel(i, w, {0.1}, &grad);
    for (int j = 0; j < w.size(); ++j) {
      if (w[j] == 0.0)
        CHECK(std::abs(grad[j]) <= lambda + 1e-4);
      else
        CHECK(std::abs(grad[j] + (w[j] > 0 ? 1.0 : -1.0) * lambda) <= 1e-4);
    }
    // both routes find the same (unique) minimizer
    const Eigen::VectorXd& w_plain = b.channels[static_cast<std::size_t>(i)].omega;
    CHECK((w - w_plain).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("closed form is consistent on long data") {
  TrajectorySet ts;
  ts.horizon = 1e4;
  ts.trajectories.push_back(simulate(birth(0.8), make_state({0}), 1e4, 44));
  const KnownStructureProblem p = known_problem(birth(0.8), ts);
  const double kappa = estimate_rates_closed_form(p, 0);
  CHECK(std::abs(kappa - 0.8) / 0.8 < 0.05);
}
