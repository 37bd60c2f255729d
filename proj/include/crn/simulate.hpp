#pragma once

#include <cstdint>
#include <optional>

#include "crn/trajectory.hpp"

namespace crn {

struct SimulateOptions {
  long max_events = 10'000'000;  // runaway-growth guard per trajectory
};

// Raised when a trajectory exceeds the event cap or the total propensity
// stops being finite; carries the partial trajectory generated so far.
class SimulationDivergedError : public std::runtime_error {
 public:
  SimulationDivergedError(const std::string& what, Trajectory partial)
      : std::runtime_error(what), partial(std::move(partial)) {}
  Trajectory partial;
};

// Gillespie direct method: exponential waiting time with the total rate,
// categorical reaction choice weighted by propensity. Deterministic given
// the seed.
Trajectory simulate(const ReactionNetwork& network, const State& x0, double horizon,
                    std::uint64_t seed, const SimulateOptions& opts = {});

// Q independent trajectories; trajectory q uses the stream seed + q, so the
// result is identical no matter how the work is scheduled.
TrajectorySet simulate_set(const ReactionNetwork& network, const State& x0, double horizon,
                           int count, std::uint64_t seed, int workers = 1,
                           const SimulateOptions& opts = {});

}  // namespace crn
