#pragma once

#include "crn/basis.hpp"
#include "crn/trajectory.hpp"

namespace crn {

// Sufficient statistics of a trajectory set for a given basis library.
//
// Two layouts coexist:
//  - activation[i] stacks the basis rows at the states where channel i was
//    activated, over all trajectories in (trajectory, event) order. This is
//    the exact-likelihood / Hessian layout.
//  - the smoothed objective's time-integral term needs per-event values of
//    nonlinear functions, which only depend on the data through the visited
//    state and its accumulated holding time; state_basis/state_time hold
//    that aggregation over distinct states (lexicographic order).
struct PrecomputedDesign {
  BasisLibrary library;

  std::vector<Eigen::MatrixXd> activation;  // [i]: M_i x N_i
  std::vector<std::vector<std::pair<int, long>>> activation_rows;  // [i]: (q, l) per row
  std::vector<long> counts;                 // M_i

  // activation rows grouped by distinct state (smoothed-path layout)
  std::vector<Eigen::MatrixXd> activation_grouped;  // [i]: D_i x N_i
  std::vector<Eigen::VectorXd> activation_multiplicity;  // [i]: D_i counts

  Eigen::VectorXd integrals;                // [j]: sum over events of t_l phi_j(y_l)

  Eigen::MatrixXd state_basis;              // S x C distinct basis functions
  Eigen::VectorXd state_time;               // S accumulated holding times
  std::vector<std::vector<int>> channel_columns;  // [i] -> columns of state_basis

  // state_basis columns gathered per channel, deduplicated across channels
  // that share the same column set (replicated libraries share one matrix).
  std::vector<Eigen::MatrixXd> state_groups;
  std::vector<int> channel_group;           // [i] -> index into state_groups

  int num_trajectories = 0;
  double horizon = 0.0;

  int num_channels() const { return library.num_channels(); }
  int dimension() const { return library.dimension(); }
  double total_time() const { return horizon * num_trajectories; }
  // integrals restricted to channel i's index range
  Eigen::VectorXd channel_integrals(int i) const;
};

PrecomputedDesign precompute(const TrajectorySet& ts, const ChannelSummary& cs,
                             const BasisLibrary& lib);

}  // namespace crn
