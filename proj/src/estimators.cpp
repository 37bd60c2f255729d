#include "crn/estimators.hpp"

#include <cmath>

namespace crn {

KnownStructureProblem build_known_structure(const ReactionNetwork& network,
                                            const TrajectorySet& ts, const ChannelSummary& cs) {
  network.validate();

  KnownStructureProblem p;
  const int K = cs.num_channels();
  std::vector<std::vector<int>> by_channel(static_cast<std::size_t>(K));
  for (int r = 0; r < static_cast<int>(network.reactions.size()); ++r) {
    const int i = cs.find(network.reactions[static_cast<std::size_t>(r)].state_change);
    if (i < 0)
      p.unmatched_reactions.push_back(r);
    else
      by_channel[static_cast<std::size_t>(i)].push_back(r);
  }

  // Channels with no explaining reaction drop out of the design: their
  // likelihood factor is constant in the unknown rates.
  ChannelSummary filtered;
  filtered.event_channels = cs.event_channels;  // unused by precompute
  for (int i = 0; i < K; ++i) {
    if (by_channel[static_cast<std::size_t>(i)].empty()) {
      p.unmatched_channels.push_back(cs.vectors[static_cast<std::size_t>(i)]);
      continue;
    }
    filtered.vectors.push_back(cs.vectors[static_cast<std::size_t>(i)]);
    filtered.counts.push_back(cs.counts[static_cast<std::size_t>(i)]);
    filtered.activations.push_back(cs.activations[static_cast<std::size_t>(i)]);
    p.reactions_by_channel.push_back(by_channel[static_cast<std::size_t>(i)]);
  }
  if (filtered.vectors.empty())
    throw InvalidInputError("no reaction in the network matches any data channel");

  int offset = 0;
  for (const auto& reactions : p.reactions_by_channel) {
    for (int r : reactions) {
      const Reaction& rx = network.reactions[static_cast<std::size_t>(r)];
      p.library.functions.push_back(basis_of_reaction(rx));
      p.column_scale.push_back(reaction_basis_scale(rx));
    }
    p.library.channel_ranges.emplace_back(offset, offset + static_cast<int>(reactions.size()));
    offset += static_cast<int>(reactions.size());
  }

  p.design = precompute(ts, filtered, p.library);
  return p;
}

double estimate_rates_closed_form(const KnownStructureProblem& p, int channel) {
  if (channel < 0 || channel >= p.design.num_channels())
    throw InvalidInputError("channel index out of range");
  if (p.design.library.channel_size(channel) != 1)
    throw InvalidInputError("closed form applies to singleton channels only");
  const double denom = p.design.channel_integrals(channel)[0];
  if (!(denom > 0.0))
    throw NoInformationError("basis is never active along the data (zero integral)");
  const double omega = static_cast<double>(p.design.counts[static_cast<std::size_t>(channel)]) / denom;
  return omega / p.column_scale[static_cast<std::size_t>(p.design.library.channel_ranges[static_cast<std::size_t>(channel)].first)];
}

GradientResult estimate_rates_gradient(const KnownStructureProblem& p, int channel,
                                       const GradientConfig& cfg, const Eigen::VectorXd& init) {
  if (channel < 0 || channel >= p.design.num_channels())
    throw InvalidInputError("channel index out of range");
  const int ni = p.design.library.channel_size(channel);
  Eigen::VectorXd w = init.size() == 0 ? Eigen::VectorXd::Ones(ni).eval() : init;
  if (w.size() != ni) throw InvalidInputError("init length does not match channel size");
  for (int j = 0; j < ni; ++j)
    if (!(w[j] > 0.0)) throw InvalidInputError("init must be strictly positive");

  LikelihoodEngine engine(p.design);
  GradientResult out;
  Eigen::VectorXd grad(ni), w_next(ni);
  for (long k = 1; k <= cfg.max_iters; ++k) {
    engine.exact_channel(channel, w, &grad);
    if (!grad.allFinite())
      throw EstimatorDivergedError("gradient became non-finite during descent");
    w_next = (w - cfg.step * grad).cwiseMax(cfg.floor);
    const double projected_norm = (w - w_next).norm() / cfg.step;
    w = w_next;
    out.iterations = k;
    if (projected_norm < cfg.grad_tol) {
      out.converged = true;
      break;
    }
  }
  out.omega = w;
  return out;
}

std::vector<RateEstimate> estimate_all_rates(const KnownStructureProblem& p,
                                             const GradientConfig& cfg) {
  std::size_t n_reactions = p.unmatched_reactions.size();
  for (const auto& rs : p.reactions_by_channel) n_reactions += rs.size();
  std::vector<RateEstimate> out(n_reactions);
  for (int r : p.unmatched_reactions) {
    out[static_cast<std::size_t>(r)] = {0.0, true, true, "none"};
  }
  for (int i = 0; i < p.design.num_channels(); ++i) {
    const auto& reactions = p.reactions_by_channel[static_cast<std::size_t>(i)];
    const int begin = p.design.library.channel_ranges[static_cast<std::size_t>(i)].first;
    if (reactions.size() == 1) {
      RateEstimate& e = out[static_cast<std::size_t>(reactions[0])];
      e.method = "closed-form";
      try {
        e.kappa = estimate_rates_closed_form(p, i);
        e.no_information = p.design.counts[static_cast<std::size_t>(i)] == 0;
      } catch (const NoInformationError&) {
        e.kappa = 0.0;
        e.no_information = true;
      }
    } else {
      const GradientResult res = estimate_rates_gradient(p, i, cfg);
      for (std::size_t k = 0; k < reactions.size(); ++k) {
        RateEstimate& e = out[static_cast<std::size_t>(reactions[k])];
        e.method = "gradient";
        e.converged = res.converged;
        e.kappa = res.omega[static_cast<long>(k)] /
                  p.column_scale[static_cast<std::size_t>(begin) + k];
      }
    }
  }
  return out;
}

namespace {

double round_one_significant(double v) {
  if (!(v > 0.0)) return 0.0;
  const double p = std::pow(10.0, std::floor(std::log10(v)));
  return std::round(v / p) * p;
}

}  // namespace

Eigen::VectorXd build_preconditioner(const TrajectorySet& ts, const ChannelSummary& cs,
                                     const BasisLibrary& lib) {
  lib.validate(ts.n_species());
  if (lib.num_channels() != cs.num_channels())
    throw InvalidInputError("basis library and channel summary disagree on channel count");

  Eigen::VectorXd c = Eigen::VectorXd::Ones(lib.dimension());
  for (int i = 0; i < lib.num_channels(); ++i) {
    const auto [begin, end] = lib.channel_ranges[static_cast<std::size_t>(i)];
    Eigen::VectorXd max_val = Eigen::VectorXd::Zero(end - begin);
    for (const auto& [q, l] : cs.activations[static_cast<std::size_t>(i)]) {
      const State x = ts.trajectories[static_cast<std::size_t>(q)].state(l);
      for (int j = begin; j < end; ++j)
        max_val[j - begin] =
            std::max(max_val[j - begin], eval_basis(lib.functions[static_cast<std::size_t>(j)], x));
    }
    for (int j = begin; j < end; ++j)
      c[j] = std::max(1.0, round_one_significant(max_val[j - begin]));
  }
  return c;
}

namespace {

// FISTA's window rule certifies an objective plateau, not per-coordinate
// stationarity. An active-set Newton polish on the detected support drives
// the inclusion residual to machine precision: coordinates whose Newton
// target crosses zero leave the support, zero coordinates violating the
// inclusion enter it. The polish is kept only when it does not worsen the
// worst inclusion residual of the FISTA point.
class SupportPolisher {
 public:
  SupportPolisher(const LikelihoodEngine& engine, int channel, SmoothingParam eps, double lambda,
                  const Eigen::VectorXd& c)
      : engine_(engine), channel_(channel), eps_(eps), lambda_(lambda), c_(c) {}

  Eigen::VectorXd run(const Eigen::VectorXd& x_fista) {
    const int n = static_cast<int>(x_fista.size());
    Eigen::VectorXd x = x_fista;
    std::vector<double> sign(static_cast<std::size_t>(n), 0.0);
    for (int j = 0; j < n; ++j)
      if (x[j] != 0.0) sign[static_cast<std::size_t>(j)] = x[j] > 0.0 ? 1.0 : -1.0;

    for (int round = 0; round < 3 * n + 4; ++round) {
      if (!newton_on_support(x, sign)) break;
      // optimality of the zero coordinates
      const Eigen::VectorXd g = solver_gradient(x);
      int worst = -1;
      double worst_excess = 1e-9;
      for (int j = 0; j < n; ++j) {
        if (sign[static_cast<std::size_t>(j)] != 0.0) continue;
        const double excess = std::abs(g[j]) - lambda_ / c_[j];
        if (excess > worst_excess) {
          worst_excess = excess;
          worst = j;
        }
      }
      if (worst < 0) break;
      sign[static_cast<std::size_t>(worst)] = g[worst] > 0.0 ? -1.0 : 1.0;
    }

    return worst_residual(x) <= worst_residual(x_fista) ? x : x_fista;
  }

 private:
  Eigen::VectorXd solver_gradient(const Eigen::VectorXd& x) const {
    Eigen::VectorXd g;
    engine_.smoothed_channel(channel_, x.cwiseQuotient(c_), eps_, &g);
    return g.cwiseQuotient(c_);
  }

  // worst violation of the full inclusion at x
  double worst_residual(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd g = solver_gradient(x);
    double worst = 0.0;
    for (int j = 0; j < x.size(); ++j) {
      if (x[j] == 0.0)
        worst = std::max(worst, std::abs(g[j]) - lambda_ / c_[j]);
      else
        worst = std::max(worst, std::abs(g[j] + (x[j] > 0.0 ? 1.0 : -1.0) * lambda_ / c_[j]));
    }
    return worst;
  }

  // Damped Newton with fixed signs; drops coordinates that insist on
  // crossing zero. Returns false when no progress is possible.
  bool newton_on_support(Eigen::VectorXd& x, std::vector<double>& sign) {
    for (int iter = 0; iter < 60; ++iter) {
      std::vector<int> support;
      for (int j = 0; j < x.size(); ++j)
        if (sign[static_cast<std::size_t>(j)] != 0.0) support.push_back(j);
      if (support.empty()) return true;
      const int ns = static_cast<int>(support.size());

      const Eigen::VectorXd g = solver_gradient(x);
      Eigen::VectorXd residual(ns);
      for (int k = 0; k < ns; ++k) {
        const int j = support[static_cast<std::size_t>(k)];
        residual[k] = g[j] + sign[static_cast<std::size_t>(j)] * lambda_ / c_[j];
      }
      if (residual.cwiseAbs().maxCoeff() <= 1e-12) return true;

      const Eigen::MatrixXd H =
          engine_.smoothed_channel_hessian(channel_, x.cwiseQuotient(c_), eps_);
      Eigen::MatrixXd Hs(ns, ns);
      for (int a = 0; a < ns; ++a)
        for (int b = 0; b < ns; ++b) {
          const int ja = support[static_cast<std::size_t>(a)];
          const int jb = support[static_cast<std::size_t>(b)];
          Hs(a, b) = H(ja, jb) / (c_[ja] * c_[jb]);
        }
      Eigen::VectorXd step = Hs.ldlt().solve(residual);
      if (!step.allFinite()) return false;

      // full step crossing zero: retire the most decided crosser instead
      int crosser = -1;
      double crosser_ratio = 1.0;
      for (int k = 0; k < ns; ++k) {
        const int j = support[static_cast<std::size_t>(k)];
        const double target = x[j] - step[k];
        if (target * sign[static_cast<std::size_t>(j)] <= 0.0 && x[j] != 0.0) {
          const double ratio = x[j] / step[k];  // in (0, 1]: fraction until the crossing
          if (ratio < crosser_ratio) {
            crosser_ratio = ratio;
            crosser = j;
          }
        }
      }
      if (crosser >= 0 && crosser_ratio < 0.5) {
        x[crosser] = 0.0;
        sign[static_cast<std::size_t>(crosser)] = 0.0;
        continue;
      }

      bool moved = false;
      double damping = 1.0;
      for (int half = 0; half < 20 && !moved; ++half, damping *= 0.5) {
        Eigen::VectorXd trial = x;
        bool sign_ok = true;
        for (int k = 0; k < ns; ++k) {
          const int j = support[static_cast<std::size_t>(k)];
          trial[j] = x[j] - damping * step[k];
          if (x[j] == 0.0 && trial[j] * sign[static_cast<std::size_t>(j)] < 0.0)
            trial[j] = -trial[j];  // entering coordinate moves to its chosen side
          if (trial[j] * sign[static_cast<std::size_t>(j)] <= 0.0) sign_ok = false;
        }
        if (!sign_ok) continue;
        const Eigen::VectorXd tg = solver_gradient(trial);
        Eigen::VectorXd trial_residual(ns);
        for (int k = 0; k < ns; ++k) {
          const int j = support[static_cast<std::size_t>(k)];
          trial_residual[k] = tg[j] + sign[static_cast<std::size_t>(j)] * lambda_ / c_[j];
        }
        if (trial_residual.allFinite() &&
            trial_residual.cwiseAbs().maxCoeff() < residual.cwiseAbs().maxCoeff()) {
          x = trial;
          moved = true;
        }
      }
      if (!moved) {
        // last resort: retire the crosser even if it is far from the boundary
        if (crosser >= 0) {
          x[crosser] = 0.0;
          sign[static_cast<std::size_t>(crosser)] = 0.0;
          continue;
        }
        return false;
      }
    }
    return true;
  }

  const LikelihoodEngine& engine_;
  int channel_;
  SmoothingParam eps_;
  double lambda_;
  const Eigen::VectorXd& c_;
};

Eigen::VectorXd polish_support(const LikelihoodEngine& engine, int channel, SmoothingParam eps,
                               double lambda, const Eigen::VectorXd& c,
                               const Eigen::VectorXd& x_fista) {
  return SupportPolisher(engine, channel, eps, lambda, c).run(x_fista);
}

}  // namespace

SparseLearnResult learn_network(const SparseLearnProblem& p, const PrecomputedDesign& d,
                                const FistaConfig& cfg, int workers) {
  p.eps.validate_pos();
  const int K = d.num_channels();
  if (static_cast<int>(p.lambda.size()) != K)
    throw InvalidInputError("need one lambda per channel");
  if (p.rescaling.size() != d.dimension())
    throw InvalidInputError("rescaling length does not match library dimension");
  for (double lam : p.lambda)
    if (!(lam >= 0.0)) throw InvalidInputError("lambda must be >= 0");

  LikelihoodEngine engine(d, workers);
  SparseLearnResult out;
  for (int i = 0; i < K; ++i) {
    const auto [begin, end] = d.library.channel_ranges[static_cast<std::size_t>(i)];
    const Eigen::VectorXd c = p.rescaling.segment(begin, end - begin);

    ChannelLearnResult res;
    res.channel = i;
    res.lambda = p.lambda[static_cast<std::size_t>(i)];
    res.weights = c;

    ProximalProblem prob;
    prob.dimension = end - begin;
    prob.lambda = res.lambda;
    prob.weights = c;
    prob.smooth = [&engine, i, &c, eps = p.eps](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
      const Eigen::VectorXd w = x.cwiseQuotient(c);
      if (!grad) return engine.smoothed_channel(i, w, eps, nullptr);
      Eigen::VectorXd g;
      const double v = engine.smoothed_channel(i, w, eps, &g);
      *grad = g.cwiseQuotient(c);
      return v;
    };

    try {
      res.report = fista_solve(prob, cfg);
      res.omega_rescaled = res.report.converged
                               ? polish_support(engine, i, p.eps, res.lambda, c, res.report.x_final)
                               : res.report.x_final;
      res.omega = res.omega_rescaled.cwiseQuotient(c);
      if (!res.report.converged) out.all_converged = false;
    } catch (const SolverDivergedError& e) {
      res.failed = true;
      res.error = e.what();
      res.report = e.report;
      out.any_failed = true;
      out.all_converged = false;
    } catch (const std::exception& e) {
      res.failed = true;
      res.error = e.what();
      out.any_failed = true;
      out.all_converged = false;
    }
    out.channels.push_back(std::move(res));
  }
  return out;
}

}  // namespace crn
