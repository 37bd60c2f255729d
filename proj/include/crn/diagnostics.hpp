#pragma once

#include <map>
#include <optional>
#include <vector>

#include "crn/estimators.hpp"

namespace crn {

// Occupation-time measure of a trajectory set: fraction of total time spent
// in each visited state.
struct EmpiricalDistribution {
  std::map<std::vector<int>, double> weights;
  double total_time = 0.0;

  double weight(const State& x) const;
};

EmpiricalDistribution empirical_pi(const TrajectorySet& ts);

// Linear channel intensity sum_{j in I_i} omega_j phi_j(x).
double channel_intensity(const BasisLibrary& lib, int channel, const State& x,
                         const Eigen::VectorXd& omega);

// KL divergence between the true and alternative waiting-time distributions
// at state x: -ln(a_alt/a_true) + a_alt/a_true - 1 on the total intensities.
double kl_waiting(const BasisLibrary& lib, const State& x, const Eigen::VectorXd& omega_true,
                  const Eigen::VectorXd& omega_alt);

// KL divergence between the channel-selection distributions at state x:
// ln(a_alt/a_true) - sum_i p_true_i ln(a_alt_i / a_true_i). Channels with
// zero true intensity contribute nothing; a channel with positive true but
// non-positive alternative intensity makes the divergence infinite and is
// reported as a domain error.
double kl_selection(const BasisLibrary& lib, const State& x, const Eigen::VectorXd& omega_true,
                    const Eigen::VectorXd& omega_alt);

// F_{j,j'} = sum_x phi_j(x) phi_j'(x) / a_i(x; omega*) pi(x) for j, j' in the
// same channel block, zero across channels.
Eigen::MatrixXd fisher_matrix(const BasisLibrary& lib, const Eigen::VectorXd& omega_star,
                              const EmpiricalDistribution& pi);

struct CompensatorPath {
  std::vector<double> times;      // this channel's event times
  std::vector<double> residuals;  // R_i(t) - integrated intensity, after the jump
  double endpoint_residual = 0.0;
  double compensator_total = 0.0;  // integral of the intensity over [0, T]
};

// Per-channel compensated counting-process residuals of one trajectory
// against the generating network's propensities.
std::vector<CompensatorPath> compensator_residuals(const Trajectory& t, const ChannelSummary& cs,
                                                   const ReactionNetwork& network);

struct NormalityResult {
  Eigen::MatrixXd sample_covariance;  // of sqrt(T) (kappa_hat - kappa*)
  Eigen::MatrixXd fisher;             // in rate-constant coordinates
  Eigen::MatrixXd fisher_inverse;     // over the compared sub-block
  std::vector<int> compared;          // coordinates kept in the comparison
  double fisher_condition = 0.0;
  double max_relative_deviation = 0.0;  // diagonal, sample vs fisher inverse
  Eigen::VectorXd mean_estimate;
  int replicas_used = 0;
  int failures = 0;
};

// Replica experiment for the CLT of the maximum-likelihood rates: simulate,
// re-estimate with known structure, compare the covariance of the scaled
// errors against the inverse Fisher matrix computed from the pooled
// occupation measure. Failed replicas are excluded and counted.
NormalityResult normality_experiment(const ReactionNetwork& network, const State& x0, double T,
                                     int replicas, std::uint64_t seed, int workers = 1);

// Exact stationary distribution of the network's generator over a finite
// state set. The set must be closed under all reactions with positive
// propensity; returns nullopt when it is not (or is larger than max_states).
std::optional<EmpiricalDistribution> stationary_distribution(const ReactionNetwork& network,
                                                             const std::vector<State>& states,
                                                             long max_states = 4096);

// Whether every (state, channel) pair with zero true intensity has either an
// all-zero basis row or a channel sum <= -margin (the sufficient condition
// for the sparse-estimator CLT). States are taken from pi's support.
struct ZeroIntensityCheck {
  bool holds = true;
  double margin = 0.0;  // largest c such that the condition holds, 0 if not
  std::vector<std::vector<int>> violations;
};
ZeroIntensityCheck check_zero_intensity_condition(const BasisLibrary& lib,
                                                  const Eigen::VectorXd& omega_star,
                                                  const EmpiricalDistribution& pi);

}  // namespace crn
