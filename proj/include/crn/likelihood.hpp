#pragma once

#include <memory>

#include "crn/design.hpp"
#include "crn/parallel.hpp"
#include "crn/softplus.hpp"

namespace crn {

// Coefficient vector over a basis library; entries are partitioned by the
// library's channel index ranges.
using ParamVector = Eigen::VectorXd;

struct ObjectiveEval {
  double value = 0.0;
  Eigen::VectorXd gradient;     // empty when not requested
  Eigen::VectorXd per_channel;  // channel decomposition, sums to value
};

struct EvalOptions {
  bool scaled = true;          // report 1/(QT)-scaled totals
  bool want_gradient = true;
};

// Negative log-likelihood of a trajectory set under parameterized channel
// intensities, exact (linear intensities) and smoothed (softplus of the
// channel sums). Evaluations reduce fixed 4096-row blocks with a pairwise
// tree, so results are bit-identical for any worker count.
class LikelihoodEngine {
 public:
  explicit LikelihoodEngine(const PrecomputedDesign& design, int workers = 1);

  const PrecomputedDesign& design() const { return *design_; }

  ObjectiveEval exact(const ParamVector& omega, const EvalOptions& opts = {}) const;
  ObjectiveEval smoothed(const ParamVector& omega, SmoothingParam eps,
                         const EvalOptions& opts = {}) const;

  // Per-channel pieces over the channel's own coordinates; always scaled
  // when `scaled` (these back the per-channel solvers).
  double exact_channel(int channel, const Eigen::VectorXd& w, Eigen::VectorXd* grad,
                       bool scaled = true) const;
  double smoothed_channel(int channel, const Eigen::VectorXd& w, SmoothingParam eps,
                          Eigen::VectorXd* grad, bool scaled = true) const;

  // Raw (unscaled) Hessian of the exact objective: block-diagonal by
  // channel, entries sum phi_j phi_j' / (channel intensity)^2 over
  // activation rows.
  Eigen::MatrixXd hessian_exact(const ParamVector& omega) const;

  // Hessian of one channel's smoothed objective:
  // sum_act (-(ln G)'' ) phi phi^T + sum_events t G'' phi phi^T.
  Eigen::MatrixXd smoothed_channel_hessian(int channel, const Eigen::VectorXd& w,
                                           SmoothingParam eps, bool scaled = true) const;

 private:
  struct BlockResult {
    double value = 0.0;
    Eigen::VectorXd gradient;
  };

  void run_blocks(long rows, const std::function<void(long block, long begin, long end)>& fn) const;
  BlockResult reduce_activation_exact(int channel, const Eigen::VectorXd& s, bool want_grad) const;
  BlockResult reduce_activation_smoothed(int channel, const Eigen::VectorXd& s, SmoothingParam eps,
                                         bool want_grad) const;
  BlockResult reduce_time_smoothed(int channel, const Eigen::VectorXd& z, SmoothingParam eps,
                                   bool want_grad) const;
  Eigen::VectorXd blocked_product(const Eigen::MatrixXd& m, const Eigen::VectorXd& w) const;

  const PrecomputedDesign* design_;
  std::unique_ptr<WorkerPool> pool_;
};

}  // namespace crn
