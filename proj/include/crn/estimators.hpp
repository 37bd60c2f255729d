#pragma once

#include <string>

#include "crn/fista.hpp"
#include "crn/likelihood.hpp"
#include "crn/simulate.hpp"

namespace crn {

class EstimatorDivergedError : public std::runtime_error {
 public:
  explicit EstimatorDivergedError(const std::string& what) : std::runtime_error(what) {}
};

// Known reaction structure mapped onto the data's channels: one basis column
// per reaction, grouped by channel. Reactions whose state-change vector never
// occurs in the data carry no information; data channels explained by no
// reaction are excluded from the design (their likelihood factor does not
// depend on the unknowns).
struct KnownStructureProblem {
  BasisLibrary library;
  PrecomputedDesign design;
  std::vector<std::vector<int>> reactions_by_channel;  // [channel] -> original reaction index
  std::vector<double> column_scale;  // propensity = kappa * scale * phi, per column
  std::vector<int> unmatched_reactions;
  std::vector<StateChange> unmatched_channels;
};

KnownStructureProblem build_known_structure(const ReactionNetwork& network,
                                            const TrajectorySet& ts, const ChannelSummary& cs);

// Closed-form MLE for a singleton channel: M_i over the time-weighted basis
// integral. Zero integral means the basis never took a value along the data.
double estimate_rates_closed_form(const KnownStructureProblem& p, int channel);

struct GradientConfig {
  double step = 1e-3;
  double floor = 1e-12;  // projection keeps all coordinates >= floor
  double grad_tol = 1e-8;
  long max_iters = 2'000'000;
};

struct GradientResult {
  Eigen::VectorXd omega;
  bool converged = false;
  long iterations = 0;
};

// Projected gradient descent on the channel's exact negative log-likelihood
// (1/(QT)-scaled), fixed step size.
GradientResult estimate_rates_gradient(const KnownStructureProblem& p, int channel,
                                       const GradientConfig& cfg = {},
                                       const Eigen::VectorXd& init = Eigen::VectorXd());

struct RateEstimate {
  double kappa = 0.0;
  bool no_information = false;
  bool converged = true;
  std::string method;  // "closed-form", "gradient", or "none"
};

// One estimate per network reaction, closed form where the channel holds a
// single reaction and gradient descent where reactions share a channel.
std::vector<RateEstimate> estimate_all_rates(const KnownStructureProblem& p,
                                             const GradientConfig& cfg = {});

// Rescaling constants per basis column: the maximal basis value over the
// states at which the column's channel was activated, rounded to one
// significant digit and floored at 1.
Eigen::VectorXd build_preconditioner(const TrajectorySet& ts, const ChannelSummary& cs,
                                     const BasisLibrary& lib);

struct SparseLearnProblem {
  SmoothingParam eps{0.1};
  std::vector<double> lambda;   // per channel
  Eigen::VectorXd rescaling;    // c_j, length N; ones = no preconditioning
};

struct ChannelLearnResult {
  int channel = 0;
  double lambda = 0.0;
  Eigen::VectorXd omega;           // recovered coefficients, omega_bar / c
  Eigen::VectorXd omega_rescaled;  // solver variable omega_bar
  Eigen::VectorXd weights;         // c_j for this channel
  SolverReport report;
  bool failed = false;
  std::string error;
};

struct SparseLearnResult {
  std::vector<ChannelLearnResult> channels;
  bool all_converged = true;
  bool any_failed = false;
};

// Per-channel FISTA on the rescaled smoothed objective, mapped back through
// omega_j = omega_bar_j / c_j. Channel failures do not abort the others.
SparseLearnResult learn_network(const SparseLearnProblem& p, const PrecomputedDesign& d,
                                const FistaConfig& cfg, int workers = 1);

}  // namespace crn
