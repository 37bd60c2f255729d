#include "crn/likelihood.hpp"

#include <cmath>
#include <sstream>

namespace crn {

namespace {

constexpr long kBlock = 4096;

long num_blocks(long rows) { return rows <= 0 ? 0 : (rows + kBlock - 1) / kBlock; }

using Arr = Eigen::ArrayXd;

// Vectorized softplus family. The general expressions are evaluated for the
// whole block; rows with deeply negative u (where they degenerate to -inf or
// 0/0) are rare in practice and get patched by the scalar formulas.
Arr log1p_exp(const Arr& u) { return u.max(0.0) + (-u.abs()).exp().log1p(); }
Arr sigmoid(const Arr& u) { return ((-u).exp() + 1.0).inverse(); }

bool any_deep(const Arr& u) { return (u < detail::kDeepNegative).any(); }

Arr ln_softplus(const Arr& u, double eps) {
  Arr out = (eps * log1p_exp(u)).log();
  if (any_deep(u))
    for (long r = 0; r < u.size(); ++r)
      if (u[r] < detail::kDeepNegative)
        out[r] = std::log(eps) + u[r] + std::log1p(-0.5 * std::exp(u[r]));
  return out;
}

Arr ln_softplus_prime(const Arr& u, double eps) {
  Arr out = sigmoid(u) / (eps * log1p_exp(u));
  if (any_deep(u))
    for (long r = 0; r < u.size(); ++r)
      if (u[r] < detail::kDeepNegative) out[r] = (1.0 - 0.5 * std::exp(u[r])) / eps;
  return out;
}

// -(ln G_eps)'' as a function of u = x / eps, always >= 0
Arr neg_ln_softplus_double_prime(const Arr& u, double eps) {
  const double inv_eps2 = 1.0 / (eps * eps);
  const Arr ratio = sigmoid(u) / log1p_exp(u);
  Arr out = (inv_eps2 * ratio * (ratio - sigmoid(-u))).max(0.0);
  if (any_deep(u))
    for (long r = 0; r < u.size(); ++r)
      if (u[r] < detail::kDeepNegative) out[r] = 0.5 * std::exp(u[r]) * inv_eps2;
  return out;
}

// G''_eps as a function of u, times eps: e^{-|u|} / (1 + e^{-|u|})^2
Arr softplus_double_prime(const Arr& u, double eps) {
  const Arr em = (-u.abs()).exp();
  return em / (1.0 + em).square() / eps;
}

}  // namespace

LikelihoodEngine::LikelihoodEngine(const PrecomputedDesign& design, int workers)
    : design_(&design) {
  if (workers > 1) pool_ = std::make_unique<WorkerPool>(workers);
}

void LikelihoodEngine::run_blocks(
    long rows, const std::function<void(long, long, long)>& fn) const {
  const long nb = num_blocks(rows);
  auto body = [&](long b) { fn(b, b * kBlock, std::min(rows, (b + 1) * kBlock)); };
  if (!pool_ || nb < 2) {
    for (long b = 0; b < nb; ++b) body(b);
    return;
  }
  const int W = pool_->workers();
  pool_->run([&](int w) {
    for (long b = w; b < nb; b += W) body(b);
  });
}

Eigen::VectorXd LikelihoodEngine::blocked_product(const Eigen::MatrixXd& m,
                                                  const Eigen::VectorXd& w) const {
  Eigen::VectorXd out(m.rows());
  run_blocks(m.rows(), [&](long, long begin, long end) {
    out.segment(begin, end - begin).noalias() = m.middleRows(begin, end - begin) * w;
  });
  return out;
}

LikelihoodEngine::BlockResult LikelihoodEngine::reduce_activation_exact(
    int channel, const Eigen::VectorXd& s, bool want_grad) const {
  const Eigen::MatrixXd& A = design_->activation[static_cast<std::size_t>(channel)];
  const long nb = num_blocks(s.size());
  std::vector<double> val(static_cast<std::size_t>(nb), 0.0);
  std::vector<Eigen::VectorXd> grad;
  if (want_grad) grad.assign(static_cast<std::size_t>(nb), Eigen::VectorXd::Zero(A.cols()));
  std::vector<long> bad(static_cast<std::size_t>(nb), -1);

  run_blocks(s.size(), [&](long b, long begin, long end) {
    const auto seg = s.segment(begin, end - begin);
    if (!(seg.minCoeff() > 0.0)) {
      for (long r = begin; r < end; ++r)
        if (!(s[r] > 0.0)) {
          bad[static_cast<std::size_t>(b)] = r;
          return;
        }
    }
    val[static_cast<std::size_t>(b)] = -seg.array().log().sum();
    if (want_grad)
      grad[static_cast<std::size_t>(b)].noalias() =
          -(A.middleRows(begin, end - begin).transpose() * seg.cwiseInverse());
  });

  for (long b = 0; b < nb; ++b) {
    const long r = bad[static_cast<std::size_t>(b)];
    if (r >= 0) {
      const auto [q, l] = design_->activation_rows[static_cast<std::size_t>(channel)]
                                                  [static_cast<std::size_t>(r)];
      std::ostringstream msg;
      msg << "non-positive intensity for channel " << channel + 1 << " at activation row " << r
          << " (trajectory " << q << ", event " << l << ")";
      throw DomainError(msg.str(), channel, r);
    }
  }

  BlockResult out;
  out.value = tree_sum(std::move(val));
  if (want_grad) out.gradient = tree_sum(std::move(grad));
  return out;
}

LikelihoodEngine::BlockResult LikelihoodEngine::reduce_activation_smoothed(
    int channel, const Eigen::VectorXd& s, SmoothingParam eps, bool want_grad) const {
  const Eigen::MatrixXd& A = design_->activation_grouped[static_cast<std::size_t>(channel)];
  const Eigen::VectorXd& n = design_->activation_multiplicity[static_cast<std::size_t>(channel)];
  const long nb = num_blocks(s.size());
  std::vector<double> val(static_cast<std::size_t>(nb), 0.0);
  std::vector<Eigen::VectorXd> grad;
  if (want_grad) grad.assign(static_cast<std::size_t>(nb), Eigen::VectorXd::Zero(A.cols()));

  run_blocks(s.size(), [&](long b, long begin, long end) {
    const long len = end - begin;
    const Arr u = s.segment(begin, len).array() / eps.epsilon;
    const Arr counts = n.segment(begin, len).array();
    val[static_cast<std::size_t>(b)] = -(counts * ln_softplus(u, eps.epsilon)).sum();
    if (want_grad) {
      const Eigen::VectorXd weight = counts * ln_softplus_prime(u, eps.epsilon);
      grad[static_cast<std::size_t>(b)].noalias() =
          -(A.middleRows(begin, len).transpose() * weight);
    }
  });

  BlockResult out;
  out.value = tree_sum(std::move(val));
  if (want_grad) out.gradient = tree_sum(std::move(grad));
  return out;
}

LikelihoodEngine::BlockResult LikelihoodEngine::reduce_time_smoothed(
    int channel, const Eigen::VectorXd& z, SmoothingParam eps, bool want_grad) const {
  const Eigen::MatrixXd& G =
      design_->state_groups[static_cast<std::size_t>(design_->channel_group[static_cast<std::size_t>(channel)])];
  const Eigen::VectorXd& tau = design_->state_time;
  const long nb = num_blocks(z.size());
  std::vector<double> val(static_cast<std::size_t>(nb), 0.0);
  std::vector<Eigen::VectorXd> grad;
  if (want_grad) grad.assign(static_cast<std::size_t>(nb), Eigen::VectorXd::Zero(G.cols()));

  run_blocks(z.size(), [&](long b, long begin, long end) {
    const long len = end - begin;
    const Arr u = z.segment(begin, len).array() / eps.epsilon;
    const Arr weights = tau.segment(begin, len).array();
    val[static_cast<std::size_t>(b)] = (weights * eps.epsilon * log1p_exp(u)).sum();
    if (want_grad) {
      const Eigen::VectorXd weight = weights * sigmoid(u);
      grad[static_cast<std::size_t>(b)].noalias() =
          G.middleRows(begin, len).transpose() * weight;
    }
  });

  BlockResult out;
  out.value = tree_sum(std::move(val));
  if (want_grad) out.gradient = tree_sum(std::move(grad));
  return out;
}

double LikelihoodEngine::exact_channel(int channel, const Eigen::VectorXd& w,
                                       Eigen::VectorXd* grad, bool scaled) const {
  const Eigen::MatrixXd& A = design_->activation[static_cast<std::size_t>(channel)];
  if (w.size() != A.cols()) throw InvalidInputError("parameter size does not match channel");
  const double scale = scaled ? 1.0 / design_->total_time() : 1.0;

  BlockResult act;
  if (A.rows() > 0) {
    const Eigen::VectorXd s = blocked_product(A, w);
    act = reduce_activation_exact(channel, s, grad != nullptr);
  } else if (grad) {
    act.gradient = Eigen::VectorXd::Zero(A.cols());
  }
  const Eigen::VectorXd integrals = design_->channel_integrals(channel);
  const double value = act.value + integrals.dot(w);
  if (grad) *grad = scale * (act.gradient + integrals);
  return scale * value;
}

double LikelihoodEngine::smoothed_channel(int channel, const Eigen::VectorXd& w,
                                          SmoothingParam eps, Eigen::VectorXd* grad,
                                          bool scaled) const {
  eps.validate_pos();
  const Eigen::MatrixXd& A = design_->activation_grouped[static_cast<std::size_t>(channel)];
  if (w.size() != A.cols()) throw InvalidInputError("parameter size does not match channel");
  const double scale = scaled ? 1.0 / design_->total_time() : 1.0;

  BlockResult act;
  if (A.rows() > 0) {
    const Eigen::VectorXd s = blocked_product(A, w);
    act = reduce_activation_smoothed(channel, s, eps, grad != nullptr);
  } else if (grad) {
    act.gradient = Eigen::VectorXd::Zero(A.cols());
  }

  const Eigen::MatrixXd& G =
      design_->state_groups[static_cast<std::size_t>(design_->channel_group[static_cast<std::size_t>(channel)])];
  const Eigen::VectorXd z = blocked_product(G, w);
  BlockResult time = reduce_time_smoothed(channel, z, eps, grad != nullptr);

  if (grad) *grad = scale * (act.gradient + time.gradient);
  return scale * (act.value + time.value);
}

namespace {

ObjectiveEval assemble(const PrecomputedDesign& d, const EvalOptions& opts,
                       const std::function<double(int, const Eigen::VectorXd&, Eigen::VectorXd*)>&
                           channel_eval,
                       const ParamVector& omega) {
  if (omega.size() != d.dimension())
    throw InvalidInputError("parameter vector length does not match basis library");
  ObjectiveEval out;
  out.per_channel.resize(d.num_channels());
  if (opts.want_gradient) out.gradient.resize(d.dimension());
  for (int i = 0; i < d.num_channels(); ++i) {
    const auto [begin, end] = d.library.channel_ranges[static_cast<std::size_t>(i)];
    Eigen::VectorXd grad_i;
    const double v =
        channel_eval(i, omega.segment(begin, end - begin), opts.want_gradient ? &grad_i : nullptr);
    out.per_channel[i] = v;
    if (opts.want_gradient) out.gradient.segment(begin, end - begin) = grad_i;
  }
  // ordered sum over K channels; K is small and fixed
  out.value = out.per_channel.sum();
  return out;
}

}  // namespace

ObjectiveEval LikelihoodEngine::exact(const ParamVector& omega, const EvalOptions& opts) const {
  return assemble(
      *design_, opts,
      [&](int i, const Eigen::VectorXd& w, Eigen::VectorXd* g) {
        return exact_channel(i, w, g, opts.scaled);
      },
      omega);
}

ObjectiveEval LikelihoodEngine::smoothed(const ParamVector& omega, SmoothingParam eps,
                                         const EvalOptions& opts) const {
  return assemble(
      *design_, opts,
      [&](int i, const Eigen::VectorXd& w, Eigen::VectorXd* g) {
        return smoothed_channel(i, w, eps, g, opts.scaled);
      },
      omega);
}

Eigen::MatrixXd LikelihoodEngine::smoothed_channel_hessian(int channel, const Eigen::VectorXd& w,
                                                           SmoothingParam eps, bool scaled) const {
  eps.validate_pos();
  const Eigen::MatrixXd& A = design_->activation_grouped[static_cast<std::size_t>(channel)];
  if (w.size() != A.cols()) throw InvalidInputError("parameter size does not match channel");
  const double scale = scaled ? 1.0 / design_->total_time() : 1.0;

  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(w.size(), w.size());
  if (A.rows() > 0) {
    const Arr u = blocked_product(A, w).array() / eps.epsilon;
    const Arr counts = design_->activation_multiplicity[static_cast<std::size_t>(channel)].array();
    const Eigen::VectorXd act_weight =
        (counts * neg_ln_softplus_double_prime(u, eps.epsilon)).sqrt();
    const Eigen::MatrixXd Ba = A.array().colwise() * act_weight.array();
    H.noalias() += Ba.transpose() * Ba;
  }

  const Eigen::MatrixXd& G =
      design_->state_groups[static_cast<std::size_t>(design_->channel_group[static_cast<std::size_t>(channel)])];
  const Arr u = blocked_product(G, w).array() / eps.epsilon;
  const Eigen::VectorXd time_weight =
      (design_->state_time.array() * softplus_double_prime(u, eps.epsilon)).sqrt();
  const Eigen::MatrixXd Bt = G.array().colwise() * time_weight.array();
  H.noalias() += Bt.transpose() * Bt;

  return scale * H;
}

Eigen::MatrixXd LikelihoodEngine::hessian_exact(const ParamVector& omega) const {
  const PrecomputedDesign& d = *design_;
  if (omega.size() != d.dimension())
    throw InvalidInputError("parameter vector length does not match basis library");
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d.dimension(), d.dimension());
  for (int i = 0; i < d.num_channels(); ++i) {
    const auto [begin, end] = d.library.channel_ranges[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd& A = d.activation[static_cast<std::size_t>(i)];
    if (A.rows() == 0) continue;
    const Eigen::VectorXd s = blocked_product(A, omega.segment(begin, end - begin));
    for (long r = 0; r < s.size(); ++r)
      if (!(s[r] > 0.0))
        throw DomainError("non-positive intensity in Hessian evaluation", i, r);
    const Eigen::MatrixXd B = A.array().colwise() / s.array();
    H.block(begin, begin, end - begin, end - begin).noalias() = B.transpose() * B;
  }
  return H;
}

}  // namespace crn
