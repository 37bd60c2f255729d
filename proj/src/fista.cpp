#include "crn/fista.hpp"

#include <cmath>
#include <deque>

namespace crn {

double shrinkage(double x, double alpha) {
  const double m = std::abs(x) - alpha;
  if (m <= 0.0) return 0.0;
  return x < 0.0 ? -m : m;
}

Eigen::VectorXd prox_step(const Eigen::VectorXd& y, const Eigen::VectorXd& grad, double L,
                          double lambda, const Eigen::VectorXd& weights) {
  if (!(L > 0.0)) throw InvalidInputError("prox step needs L > 0");
  Eigen::VectorXd z(y.size());
  for (int j = 0; j < y.size(); ++j)
    z[j] = shrinkage(y[j] - grad[j] / L, lambda / (L * weights[j]));
  return z;
}

namespace {

double penalty(const Eigen::VectorXd& x, double lambda, const Eigen::VectorXd& weights) {
  double p = 0.0;
  for (int j = 0; j < x.size(); ++j) p += std::abs(x[j]) / weights[j];
  return lambda * p;
}

void validate(const ProximalProblem& p, const FistaConfig& cfg) {
  if (!p.smooth) throw InvalidInputError("proximal problem has no smooth objective");
  if (p.dimension < 1) throw InvalidInputError("proximal problem dimension must be >= 1");
  if (!(p.lambda >= 0.0)) throw InvalidInputError("lambda must be >= 0");
  if (p.weights.size() != p.dimension) throw InvalidInputError("weights length != dimension");
  for (int j = 0; j < p.weights.size(); ++j)
    if (!(p.weights[j] > 0.0)) throw InvalidInputError("weights must be positive");
  if (!(cfg.L0 > 0.0)) throw InvalidInputError("L0 must be > 0");
  if (!(cfg.eta > 1.0)) throw InvalidInputError("eta must be > 1");
  if (cfg.window < 2) throw InvalidInputError("window must be >= 2");
  if (!(cfg.rel_tol > 0.0)) throw InvalidInputError("rel_tol must be > 0");
  if (cfg.x0.size() != 0 && cfg.x0.size() != p.dimension)
    throw InvalidInputError("x0 length != dimension");
}

}  // namespace

SolverReport fista_solve(const ProximalProblem& problem, const FistaConfig& config) {
  validate(problem, config);

  const int n = problem.dimension;
  const Eigen::VectorXd x0 =
      config.x0.size() == 0 ? Eigen::VectorXd::Zero(n).eval() : config.x0;

  SolverReport report;
  {
    const double f0 = problem.smooth(x0, nullptr);
    if (!std::isfinite(f0))
      throw InvalidStartError("smooth objective is not finite at the starting point");
  }

  Eigen::VectorXd x_prev = x0;  // x_{k-1}
  Eigen::VectorXd x = x0;       // x_k
  Eigen::VectorXd y = x0;       // y_k
  Eigen::VectorXd grad_y(n), z(n);
  double L = config.L0;
  double t = 1.0;
  std::deque<double> window;

  for (long k = 1; k <= config.max_iters; ++k) {
    const double fy = problem.smooth(y, &grad_y);
    if (!std::isfinite(fy)) {
      report.iterations = k - 1;
      throw SolverDivergedError("objective became non-finite during iteration", std::move(report));
    }

    // backtracking: smallest i with L_bar = eta^i * L passing the test
    double L_bar = L;
    double fz = 0.0, Fz = 0.0;
    for (;;) {
      z = prox_step(y, grad_y, L_bar, problem.lambda, problem.weights);
      fz = problem.smooth(z, nullptr);
      const double pen_z = penalty(z, problem.lambda, problem.weights);
      Fz = fz + pen_z;
      const Eigen::VectorXd dz = z - y;
      const double Qz = fy + dz.dot(grad_y) + 0.5 * L_bar * dz.squaredNorm() + pen_z;
      // tiny relative slack so machine-precision ties cannot loop forever
      if (std::isfinite(Fz) && Fz <= Qz + 1e-12 * (1.0 + std::abs(Qz))) break;
      L_bar *= config.eta;
      if (L_bar > 1e100) {
        report.iterations = k - 1;
        throw SolverDivergedError("backtracking failed to find a usable step", std::move(report));
      }
    }
    L = L_bar;

    x_prev.swap(x);
    x = z;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x + ((t - 1.0) / t_next) * (x - x_prev);
    t = t_next;

    report.objective_trace.push_back(Fz);
    report.step_sizes.push_back(1.0 / L);
    report.iterations = k;

    window.push_back(Fz);
    if (static_cast<int>(window.size()) > config.window) window.pop_front();
    if (static_cast<int>(window.size()) == config.window) {
      double lo = window.front(), hi = window.front();
      for (double v : window) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if ((hi - lo) / std::max(std::abs(lo), 1e-30) < config.rel_tol) {
        report.converged = true;
        break;
      }
    }
  }

  report.x_final = x;
  report.final_objective = report.objective_trace.empty() ? 0.0 : report.objective_trace.back();
  report.final_L = L;
  return report;
}

}  // namespace crn
