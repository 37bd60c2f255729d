#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "crn/errors.hpp"

namespace crn {

// min f(x) + lambda * sum_j |x_j| / c_j, with f smooth convex.
// smooth(x, grad) returns f(x) and fills *grad when grad != nullptr.
struct ProximalProblem {
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)> smooth;
  double lambda = 0.0;
  Eigen::VectorXd weights;  // c_j > 0
  int dimension = 0;
};

struct FistaConfig {
  double L0 = 1.0;       // initial Lipschitz guess
  double eta = 2.0;      // backtracking inflation factor, > 1
  Eigen::VectorXd x0;    // zeros(dimension) when empty
  int window = 20;       // trailing objective window for the stopping rule
  double rel_tol = 5e-8;
  long max_iters = 500'000;
};

struct SolverReport {
  Eigen::VectorXd x_final;
  std::vector<double> objective_trace;  // F(x_k) per iteration
  std::vector<double> step_sizes;       // 1/L_k per iteration
  bool converged = false;
  long iterations = 0;
  double final_objective = 0.0;
  double final_L = 0.0;
};

class InvalidStartError : public std::runtime_error {
 public:
  explicit InvalidStartError(const std::string& what) : std::runtime_error(what) {}
};

class SolverDivergedError : public std::runtime_error {
 public:
  SolverDivergedError(const std::string& what, SolverReport report)
      : std::runtime_error(what), report(std::move(report)) {}
  SolverReport report;
};

// Soft threshold: sgn(x) * max(|x| - alpha, 0).
double shrinkage(double x, double alpha);

// Componentwise shrinkage of a gradient step, threshold lambda / (L c_j);
// the minimizer of the quadratic majorizer Q_L(., y).
Eigen::VectorXd prox_step(const Eigen::VectorXd& y, const Eigen::VectorXd& grad, double L,
                          double lambda, const Eigen::VectorXd& weights);

// FISTA with backtracking: inflate L by eta until the majorization test
// F(p_L(y)) <= Q_L(p_L(y), y) passes, take the prox step, then extrapolate
// with the t_{k+1} = (1 + sqrt(1 + 4 t_k^2))/2 momentum schedule. Stops when
// max-min of the objective over the trailing window drops below rel_tol
// relative, or at max_iters with converged = false.
SolverReport fista_solve(const ProximalProblem& problem, const FistaConfig& config);

}  // namespace crn
