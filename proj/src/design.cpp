#include "crn/design.hpp"

#include <map>
#include <tuple>

namespace crn {

namespace {

using BasisKey = std::tuple<int, int, int>;

BasisKey key_of(const BasisFunction& f) {
  return {static_cast<int>(f.kind), f.i, f.j};
}

}  // namespace

Eigen::VectorXd PrecomputedDesign::channel_integrals(int i) const {
  const auto [begin, end] = library.channel_ranges[static_cast<std::size_t>(i)];
  return integrals.segment(begin, end - begin);
}

PrecomputedDesign precompute(const TrajectorySet& ts, const ChannelSummary& cs,
                             const BasisLibrary& lib) {
  ts.validate();
  lib.validate(ts.n_species());
  if (lib.num_channels() != cs.num_channels())
    throw InvalidInputError("basis library and channel summary disagree on channel count");

  PrecomputedDesign d;
  d.library = lib;
  d.counts = cs.counts;
  d.num_trajectories = ts.size();
  d.horizon = ts.horizon;

  const int K = lib.num_channels();
  const int N = lib.dimension();

  // Deduplicate basis functions across channels into state_basis columns.
  std::map<BasisKey, int> column_of;
  std::vector<BasisFunction> distinct;
  d.channel_columns.resize(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) {
    const auto [begin, end] = lib.channel_ranges[static_cast<std::size_t>(i)];
    for (int j = begin; j < end; ++j) {
      const BasisFunction& f = lib.functions[static_cast<std::size_t>(j)];
      auto [it, inserted] = column_of.emplace(key_of(f), static_cast<int>(distinct.size()));
      if (inserted) distinct.push_back(f);
      d.channel_columns[static_cast<std::size_t>(i)].push_back(it->second);
    }
  }
  const int C = static_cast<int>(distinct.size());

  // Aggregate holding time per distinct visited state, in (q, l) order.
  std::map<std::vector<int>, double> time_by_state;
  for (const Trajectory& t : ts.trajectories) {
    for (long l = 0; l <= t.num_events(); ++l) {
      const auto y = t.state(l);
      const double tl = l < t.num_events() ? t.holding_time(l) : t.final_holding_time();
      std::vector<int> key(y.data(), y.data() + y.size());
      time_by_state[key] += tl;
    }
  }
  const long S = static_cast<long>(time_by_state.size());
  d.state_basis.resize(S, C);
  d.state_time.resize(S);
  {
    long s = 0;
    State x(ts.n_species());
    for (const auto& [key, tau] : time_by_state) {
      for (int k = 0; k < x.size(); ++k) x[k] = key[static_cast<std::size_t>(k)];
      for (int c = 0; c < C; ++c) d.state_basis(s, c) = eval_basis(distinct[static_cast<std::size_t>(c)], x);
      d.state_time[s] = tau;
      ++s;
    }
  }

  // Time-weighted integrals per library column.
  d.integrals.resize(N);
  for (int i = 0; i < K; ++i) {
    const auto [begin, end] = lib.channel_ranges[static_cast<std::size_t>(i)];
    for (int j = begin; j < end; ++j) {
      const int c = d.channel_columns[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - begin)];
      d.integrals[j] = d.state_basis.col(c).dot(d.state_time);
    }
  }

  // Activation matrices in (trajectory, event) order.
  d.activation.resize(static_cast<std::size_t>(K));
  d.activation_rows = cs.activations;
  for (int i = 0; i < K; ++i) {
    const auto [begin, end] = lib.channel_ranges[static_cast<std::size_t>(i)];
    const int Ni = end - begin;
    const auto& rows = cs.activations[static_cast<std::size_t>(i)];
    Eigen::MatrixXd& A = d.activation[static_cast<std::size_t>(i)];
    A.resize(static_cast<long>(rows.size()), Ni);
    for (long r = 0; r < static_cast<long>(rows.size()); ++r) {
      const auto [q, l] = rows[static_cast<std::size_t>(r)];
      const auto y = ts.trajectories[static_cast<std::size_t>(q)].state(l);
      State x = y;
      for (int j = 0; j < Ni; ++j)
        A(r, j) = eval_basis(lib.functions[static_cast<std::size_t>(begin + j)], x);
    }
  }

  // Activation rows grouped by distinct state, for the nonlinear path.
  d.activation_grouped.resize(static_cast<std::size_t>(K));
  d.activation_multiplicity.resize(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) {
    const auto [begin, end] = lib.channel_ranges[static_cast<std::size_t>(i)];
    const int Ni = end - begin;
    std::map<std::vector<int>, long> multiplicity;
    for (const auto& [q, l] : cs.activations[static_cast<std::size_t>(i)]) {
      const State y = ts.trajectories[static_cast<std::size_t>(q)].state(l);
      ++multiplicity[std::vector<int>(y.data(), y.data() + y.size())];
    }
    Eigen::MatrixXd& G = d.activation_grouped[static_cast<std::size_t>(i)];
    Eigen::VectorXd& n = d.activation_multiplicity[static_cast<std::size_t>(i)];
    G.resize(static_cast<long>(multiplicity.size()), Ni);
    n.resize(static_cast<long>(multiplicity.size()));
    long row = 0;
    State x(ts.n_species());
    for (const auto& [key, count] : multiplicity) {
      for (int k = 0; k < x.size(); ++k) x[k] = key[static_cast<std::size_t>(k)];
      for (int j = 0; j < Ni; ++j)
        G(row, j) = eval_basis(lib.functions[static_cast<std::size_t>(begin + j)], x);
      n[row] = static_cast<double>(count);
      ++row;
    }
  }

  // Gather state_basis per channel, shared between channels with equal columns.
  std::map<std::vector<int>, int> group_of;
  d.channel_group.resize(static_cast<std::size_t>(K));
  for (int i = 0; i < K; ++i) {
    const auto& cols = d.channel_columns[static_cast<std::size_t>(i)];
    auto [it, inserted] = group_of.emplace(cols, static_cast<int>(d.state_groups.size()));
    if (inserted) {
      Eigen::MatrixXd G(S, static_cast<int>(cols.size()));
      for (int j = 0; j < static_cast<int>(cols.size()); ++j)
        G.col(j) = d.state_basis.col(cols[static_cast<std::size_t>(j)]);
      d.state_groups.push_back(std::move(G));
    }
    d.channel_group[static_cast<std::size_t>(i)] = it->second;
  }

  return d;
}

}  // namespace crn
