#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "crn/model.hpp"

namespace crn {

// One fully observed sample path on [0, T]: the state sequence
// (y_0, t_0), (y_1, t_1), ..., (y_M, t_M), where t_l is the holding time in
// y_l before the jump to y_{l+1} and t_M fills the remaining time at y_M.
// Event states are stored as one flat row-major block.
class Trajectory {
 public:
  Trajectory(State initial_state, Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic,
                                                Eigen::RowMajor>
                                      states,
             Eigen::VectorXd holding_times, double final_holding_time, double horizon);

  int n_species() const { return static_cast<int>(initial_state_.size()); }
  long num_events() const { return holding_times_.size(); }

  const State& initial_state() const { return initial_state_; }
  // y_{l+1}, the state entered by event l (0 <= l < M)
  State new_state(long l) const { return states_.row(l).transpose(); }
  // y_l for 0 <= l <= M
  State state(long l) const {
    return l == 0 ? initial_state_ : State(states_.row(l - 1).transpose());
  }
  double holding_time(long l) const { return holding_times_[l]; }
  double final_holding_time() const { return final_holding_time_; }
  double horizon() const { return horizon_; }

  // Checks copy-number non-negativity, positivity of the holding times,
  // nonzero jumps, and sum of holding times == horizon (1e-9 relative).
  void validate() const;

 private:
  State initial_state_;
  Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> states_;
  Eigen::VectorXd holding_times_;
  double final_holding_time_;
  double horizon_;
};

struct TrajectorySet {
  std::vector<Trajectory> trajectories;
  double horizon = 0.0;
  std::uint64_t rng_seed = 0;

  int size() const { return static_cast<int>(trajectories.size()); }
  int n_species() const;
  long total_events() const;
  void validate() const;
};

// Distinct state-change vectors found in a trajectory set, in lexicographic
// order, with occurrence counts and the per-event channel assignment.
struct ChannelSummary {
  std::vector<StateChange> vectors;                 // K vectors, canonical order
  std::vector<long> counts;                         // M_i, summed over trajectories
  std::vector<std::vector<int>> event_channels;     // [q][l] -> channel of event l
  std::vector<std::vector<std::pair<int, long>>> activations;  // [i] -> (q, l) ascending

  int num_channels() const { return static_cast<int>(vectors.size()); }
  long total_events() const;
  // index of v in vectors, or -1
  int find(const Eigen::Ref<const StateChange>& v) const;
};

ChannelSummary identify_channels(const TrajectorySet& ts);

// The (i_l, t_l) representation of one trajectory. Every jump must match a
// summary vector, otherwise the data is inconsistent with the channel table.
std::vector<std::pair<int, double>> to_channel_representation(const Trajectory& t,
                                                              const ChannelSummary& cs);

// Inverse of the above: rebuild the state sequence y_0..y_M from x0 and the
// channel indices.
std::vector<State> states_from_channel_representation(
    const State& x0, const std::vector<std::pair<int, double>>& rep, const ChannelSummary& cs);

}  // namespace crn
