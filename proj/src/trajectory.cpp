#include "crn/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace crn {

namespace {

// Kahan-compensated sum; the validation tolerance (1e-9 relative) must not
// be eaten by naive accumulation over millions of events.
double stable_sum(const Eigen::VectorXd& v, double tail) {
  double sum = 0.0, c = 0.0;
  auto add = [&](double x) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  };
  for (long i = 0; i < v.size(); ++i) add(v[i]);
  add(tail);
  return sum;
}

std::vector<int> to_key(const Eigen::Ref<const StateChange>& v) {
  return std::vector<int>(v.data(), v.data() + v.size());
}

}  // namespace

Trajectory::Trajectory(State initial_state,
                       Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> states,
                       Eigen::VectorXd holding_times, double final_holding_time, double horizon)
    : initial_state_(std::move(initial_state)),
      states_(std::move(states)),
      holding_times_(std::move(holding_times)),
      final_holding_time_(final_holding_time),
      horizon_(horizon) {
  if (states_.rows() != holding_times_.size())
    throw InvalidInputError("event state rows and holding times disagree");
  if (states_.rows() > 0 && states_.cols() != initial_state_.size())
    throw InvalidInputError("event state width does not match species count");
}

void Trajectory::validate() const {
  validate_state(initial_state_);
  if (!(horizon_ > 0.0)) throw InvalidInputError("horizon must be positive");
  if (!(final_holding_time_ >= 0.0)) throw InvalidInputError("final holding time must be >= 0");
  for (long l = 0; l < num_events(); ++l) {
    if (!(holding_times_[l] > 0.0)) throw InvalidInputError("holding times must be positive");
    if ((state(l + 1) - state(l)).isZero())
      throw InvalidInputError("consecutive states must differ");
    for (int s = 0; s < n_species(); ++s)
      if (states_(l, s) < 0) throw InvalidInputError("state has a negative copy-number");
  }
  const double total = stable_sum(holding_times_, final_holding_time_);
  if (std::abs(total - horizon_) > 1e-9 * std::max(1.0, horizon_))
    throw InvalidInputError("holding times do not sum to the horizon");
}

int TrajectorySet::n_species() const {
  return trajectories.empty() ? 0 : trajectories.front().n_species();
}

long TrajectorySet::total_events() const {
  long m = 0;
  for (const Trajectory& t : trajectories) m += t.num_events();
  return m;
}

void TrajectorySet::validate() const {
  if (trajectories.empty()) throw InvalidInputError("trajectory set is empty");
  const int n = n_species();
  for (const Trajectory& t : trajectories) {
    if (t.n_species() != n) throw InvalidInputError("trajectories disagree on species count");
    t.validate();
  }
}

long ChannelSummary::total_events() const {
  long m = 0;
  for (long c : counts) m += c;
  return m;
}

int ChannelSummary::find(const Eigen::Ref<const StateChange>& v) const {
  for (int i = 0; i < num_channels(); ++i)
    if (vectors[i].size() == v.size() && vectors[i] == v) return i;
  return -1;
}

ChannelSummary identify_channels(const TrajectorySet& ts) {
  ts.validate();

  // Lexicographic map gives the canonical channel order directly.
  std::map<std::vector<int>, int> index;
  for (const Trajectory& t : ts.trajectories)
    for (long l = 0; l < t.num_events(); ++l)
      index.emplace(to_key(t.state(l + 1) - t.state(l)), 0);
  int next = 0;
  for (auto& [key, idx] : index) idx = next++;

  ChannelSummary cs;
  cs.vectors.resize(index.size());
  cs.counts.assign(index.size(), 0);
  cs.activations.resize(index.size());
  for (const auto& [key, idx] : index)
    cs.vectors[idx] = Eigen::Map<const StateChange>(key.data(), static_cast<long>(key.size()));

  cs.event_channels.resize(ts.trajectories.size());
  for (int q = 0; q < ts.size(); ++q) {
    const Trajectory& t = ts.trajectories[q];
    auto& channels = cs.event_channels[q];
    channels.resize(static_cast<std::size_t>(t.num_events()));
    for (long l = 0; l < t.num_events(); ++l) {
      const int i = index.at(to_key(t.state(l + 1) - t.state(l)));
      channels[static_cast<std::size_t>(l)] = i;
      ++cs.counts[i];
      cs.activations[i].emplace_back(q, l);
    }
  }
  return cs;
}

std::vector<std::pair<int, double>> to_channel_representation(const Trajectory& t,
                                                              const ChannelSummary& cs) {
  std::vector<std::pair<int, double>> rep;
  rep.reserve(static_cast<std::size_t>(t.num_events()));
  for (long l = 0; l < t.num_events(); ++l) {
    const StateChange v = t.state(l + 1) - t.state(l);
    const int i = cs.find(v);
    if (i < 0) {
      std::ostringstream msg;
      msg << "jump at event " << l << " matches no known channel vector (";
      for (int s = 0; s < v.size(); ++s) msg << (s ? "," : "") << v[s];
      msg << ")";
      throw InconsistentDataError(msg.str());
    }
    rep.emplace_back(i, t.holding_time(l));
  }
  return rep;
}

std::vector<State> states_from_channel_representation(
    const State& x0, const std::vector<std::pair<int, double>>& rep, const ChannelSummary& cs) {
  std::vector<State> states;
  states.reserve(rep.size() + 1);
  states.push_back(x0);
  for (const auto& [i, t] : rep) {
    if (i < 0 || i >= cs.num_channels()) throw InvalidInputError("channel index out of range");
    states.push_back(states.back() + cs.vectors[static_cast<std::size_t>(i)]);
  }
  return states;
}

}  // namespace crn
