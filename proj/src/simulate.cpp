#include "crn/simulate.hpp"

#include <cmath>
#include <exception>

#include "crn/parallel.hpp"
#include "crn/rng.hpp"

namespace crn {

namespace {

Trajectory make_trajectory(const State& x0, const std::vector<int>& flat_states,
                           const std::vector<double>& holds, double final_hold, double horizon) {
  const int n = static_cast<int>(x0.size());
  const long m = static_cast<long>(holds.size());
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> states(m, n);
  for (long l = 0; l < m; ++l)
    for (int s = 0; s < n; ++s) states(l, s) = flat_states[static_cast<std::size_t>(l) * n + s];
  Eigen::VectorXd times = Eigen::Map<const Eigen::VectorXd>(holds.data(), m);
  return Trajectory(x0, std::move(states), std::move(times), final_hold, horizon);
}

}  // namespace

Trajectory simulate(const ReactionNetwork& network, const State& x0, double horizon,
                    std::uint64_t seed, const SimulateOptions& opts) {
  network.validate();
  validate_state(x0);
  if (x0.size() != network.n_species)
    throw InvalidInputError("initial state dimension does not match network");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw InvalidInputError("horizon must be finite and > 0");

  SplitMix64 rng(seed);
  const int n = network.n_species;
  const int n_reactions = static_cast<int>(network.reactions.size());

  State x = x0;
  std::vector<double> propensities(static_cast<std::size_t>(n_reactions));
  std::vector<int> flat_states;
  std::vector<double> holds;
  double elapsed = 0.0, elapsed_comp = 0.0;  // Kahan-accumulated event times

  auto add_elapsed = [&](double dt) {
    const double y = dt - elapsed_comp;
    const double t = elapsed + y;
    elapsed_comp = (t - elapsed) - y;
    elapsed = t;
  };

  for (;;) {
    double total = 0.0;
    for (int r = 0; r < n_reactions; ++r) {
      propensities[static_cast<std::size_t>(r)] = mass_action_propensity(network.reactions[static_cast<std::size_t>(r)], x);
      total += propensities[static_cast<std::size_t>(r)];
    }
    if (!std::isfinite(total))
      throw SimulationDivergedError(
          "total propensity overflowed",
          make_trajectory(x0, flat_states, holds, std::max(0.0, horizon - elapsed), horizon));

    if (total <= 0.0) break;  // absorbing: the final holding time fills to T

    const double wait = -std::log(rng.next_unit_pos()) / total;
    if (elapsed + wait >= horizon) break;

    // pick the reaction (channel choice is implied: channels aggregate reactions)
    const double threshold = rng.next_unit() * total;
    double cum = 0.0;
    int chosen = n_reactions - 1;
    for (int r = 0; r < n_reactions; ++r) {
      cum += propensities[static_cast<std::size_t>(r)];
      if (threshold < cum) {
        chosen = r;
        break;
      }
    }

    x += network.reactions[static_cast<std::size_t>(chosen)].state_change;
    for (int s = 0; s < n; ++s) {
      if (x[s] < 0)
        throw SimulationDivergedError(
            "reaction drove a copy-number negative (bad network specification)",
            make_trajectory(x0, flat_states, holds, std::max(0.0, horizon - elapsed), horizon));
      flat_states.push_back(x[s]);
    }
    holds.push_back(wait);
    add_elapsed(wait);

    if (static_cast<long>(holds.size()) >= opts.max_events)
      throw SimulationDivergedError(
          "event cap reached (state explosion?)",
          make_trajectory(x0, flat_states, holds, std::max(0.0, horizon - elapsed), horizon));
  }

  return make_trajectory(x0, flat_states, holds, horizon - elapsed, horizon);
}

TrajectorySet simulate_set(const ReactionNetwork& network, const State& x0, double horizon,
                           int count, std::uint64_t seed, int workers, const SimulateOptions& opts) {
  if (count < 1) throw InvalidInputError("need at least one trajectory");

  TrajectorySet set;
  set.horizon = horizon;
  set.rng_seed = seed;

  std::vector<std::optional<Trajectory>> slots(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(std::max(1, workers)));

  WorkerPool pool(workers);
  pool.run([&](int w) {
    try {
      for (int q = w; q < count; q += pool.workers())
        slots[static_cast<std::size_t>(q)] =
            simulate(network, x0, horizon, seed + static_cast<std::uint64_t>(q), opts);
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
    }
  });
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);

  set.trajectories.reserve(static_cast<std::size_t>(count));
  for (auto& slot : slots) set.trajectories.push_back(std::move(*slot));
  return set;
}

}  // namespace crn
