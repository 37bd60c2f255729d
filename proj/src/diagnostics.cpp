#include "crn/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "crn/parallel.hpp"

namespace crn {

namespace {

std::string state_to_string(const std::vector<int>& key) {
  std::ostringstream out;
  out << "(";
  for (std::size_t i = 0; i < key.size(); ++i) out << (i ? "," : "") << key[i];
  out << ")";
  return out.str();
}

State state_from_key(const std::vector<int>& key) {
  return Eigen::Map<const State>(key.data(), static_cast<long>(key.size()));
}

}  // namespace

double EmpiricalDistribution::weight(const State& x) const {
  const std::vector<int> key(x.data(), x.data() + x.size());
  auto it = weights.find(key);
  return it == weights.end() ? 0.0 : it->second;
}

EmpiricalDistribution empirical_pi(const TrajectorySet& ts) {
  ts.validate();
  EmpiricalDistribution pi;
  double total = 0.0;
  for (const Trajectory& t : ts.trajectories) {
    for (long l = 0; l <= t.num_events(); ++l) {
      const auto y = t.state(l);
      const double tl = l < t.num_events() ? t.holding_time(l) : t.final_holding_time();
      pi.weights[std::vector<int>(y.data(), y.data() + y.size())] += tl;
      total += tl;
    }
  }
  pi.total_time = total;
  for (auto& [key, w] : pi.weights) w /= total;
  return pi;
}

double channel_intensity(const BasisLibrary& lib, int channel, const State& x,
                         const Eigen::VectorXd& omega) {
  const auto [begin, end] = lib.channel_ranges[static_cast<std::size_t>(channel)];
  double a = 0.0;
  for (int j = begin; j < end; ++j)
    a += omega[j] * eval_basis(lib.functions[static_cast<std::size_t>(j)], x);
  return a;
}

namespace {

// total intensities under both parameter vectors, validated positive
std::pair<double, double> total_intensities(const BasisLibrary& lib, const State& x,
                                            const Eigen::VectorXd& omega_true,
                                            const Eigen::VectorXd& omega_alt) {
  double at = 0.0, aa = 0.0;
  for (int i = 0; i < lib.num_channels(); ++i) {
    at += channel_intensity(lib, i, x, omega_true);
    aa += channel_intensity(lib, i, x, omega_alt);
  }
  if (!(at > 0.0) || !(aa > 0.0))
    throw DomainError("total intensity must be positive under both parameter vectors");
  return {at, aa};
}

}  // namespace

double kl_waiting(const BasisLibrary& lib, const State& x, const Eigen::VectorXd& omega_true,
                  const Eigen::VectorXd& omega_alt) {
  const auto [a_true, a_alt] = total_intensities(lib, x, omega_true, omega_alt);
  return -std::log(a_alt / a_true) + a_alt / a_true - 1.0;
}

double kl_selection(const BasisLibrary& lib, const State& x, const Eigen::VectorXd& omega_true,
                    const Eigen::VectorXd& omega_alt) {
  const auto [a_true, a_alt] = total_intensities(lib, x, omega_true, omega_alt);
  double sum = 0.0;
  for (int i = 0; i < lib.num_channels(); ++i) {
    const double ai_true = channel_intensity(lib, i, x, omega_true);
    if (ai_true == 0.0) continue;  // p_true_i = 0 contributes nothing
    if (ai_true < 0.0) throw DomainError("negative true channel intensity");
    const double ai_alt = channel_intensity(lib, i, x, omega_alt);
    if (!(ai_alt > 0.0))
      throw DomainError("alternative intensity vanishes where the true one is positive");
    sum += ai_true / a_true * std::log(ai_alt / ai_true);
  }
  return std::log(a_alt / a_true) - sum;
}

Eigen::MatrixXd fisher_matrix(const BasisLibrary& lib, const Eigen::VectorXd& omega_star,
                              const EmpiricalDistribution& pi) {
  if (omega_star.size() != lib.dimension())
    throw InvalidInputError("omega length does not match library");
  const int N = lib.dimension();
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd phi(N);
  for (const auto& [key, w] : pi.weights) {
    if (w <= 0.0) continue;
    const State x = state_from_key(key);
    for (int i = 0; i < lib.num_channels(); ++i) {
      const auto [begin, end] = lib.channel_ranges[static_cast<std::size_t>(i)];
      bool any_nonzero = false;
      double a = 0.0;
      for (int j = begin; j < end; ++j) {
        phi[j] = eval_basis(lib.functions[static_cast<std::size_t>(j)], x);
        if (phi[j] != 0.0) any_nonzero = true;
        a += omega_star[j] * phi[j];
      }
      if (!any_nonzero) continue;
      if (!(a > 0.0))
        throw DomainError("zero intensity at pi-supported state " + state_to_string(key), i);
      const double scale = w / a;
      for (int j = begin; j < end; ++j)
        for (int j2 = begin; j2 < end; ++j2) F(j, j2) += scale * phi[j] * phi[j2];
    }
  }
  return F;
}

std::vector<CompensatorPath> compensator_residuals(const Trajectory& t, const ChannelSummary& cs,
                                                   const ReactionNetwork& network) {
  network.validate();
  const int K = cs.num_channels();

  // group the network's reactions by summary channel
  std::vector<std::vector<int>> reactions(static_cast<std::size_t>(K));
  for (int r = 0; r < static_cast<int>(network.reactions.size()); ++r) {
    const int i = cs.find(network.reactions[static_cast<std::size_t>(r)].state_change);
    if (i >= 0) reactions[static_cast<std::size_t>(i)].push_back(r);
  }

  const auto rep = to_channel_representation(t, cs);

  std::vector<CompensatorPath> paths(static_cast<std::size_t>(K));
  std::vector<double> comp(static_cast<std::size_t>(K), 0.0);
  std::vector<long> fired(static_cast<std::size_t>(K), 0);
  double now = 0.0;

  auto accumulate = [&](long l, double dt) {
    const State x = t.state(l);
    for (int i = 0; i < K; ++i) {
      double a = 0.0;
      for (int r : reactions[static_cast<std::size_t>(i)])
        a += mass_action_propensity(network.reactions[static_cast<std::size_t>(r)], x);
      comp[static_cast<std::size_t>(i)] += a * dt;
    }
  };

  for (long l = 0; l < t.num_events(); ++l) {
    accumulate(l, t.holding_time(l));
    now += t.holding_time(l);
    const int i = rep[static_cast<std::size_t>(l)].first;
    ++fired[static_cast<std::size_t>(i)];
    paths[static_cast<std::size_t>(i)].times.push_back(now);
    paths[static_cast<std::size_t>(i)].residuals.push_back(
        static_cast<double>(fired[static_cast<std::size_t>(i)]) - comp[static_cast<std::size_t>(i)]);
  }
  accumulate(t.num_events(), t.final_holding_time());

  for (int i = 0; i < K; ++i) {
    paths[static_cast<std::size_t>(i)].compensator_total = comp[static_cast<std::size_t>(i)];
    paths[static_cast<std::size_t>(i)].endpoint_residual =
        static_cast<double>(fired[static_cast<std::size_t>(i)]) - comp[static_cast<std::size_t>(i)];
  }
  return paths;
}

NormalityResult normality_experiment(const ReactionNetwork& network, const State& x0, double T,
                                     int replicas, std::uint64_t seed, int workers) {
  network.validate();
  if (replicas < 50) throw InvalidInputError("insufficient replicas (need at least 50)");

  const int R = static_cast<int>(network.reactions.size());
  Eigen::VectorXd kappa_star(R);
  for (int r = 0; r < R; ++r) kappa_star[r] = network.reactions[static_cast<std::size_t>(r)].rate_constant;

  struct ReplicaOut {
    Eigen::VectorXd kappa;
    bool ok = false;
    TrajectorySet set;
  };
  std::vector<ReplicaOut> slots(static_cast<std::size_t>(replicas));

  WorkerPool pool(workers);
  pool.run([&](int w) {
    for (int rep = w; rep < replicas; rep += pool.workers()) {
      ReplicaOut& out = slots[static_cast<std::size_t>(rep)];
      try {
        out.set = simulate_set(network, x0, T, 1, seed + static_cast<std::uint64_t>(rep));
        const ChannelSummary cs = identify_channels(out.set);
        const KnownStructureProblem p = build_known_structure(network, out.set, cs);
        const auto estimates = estimate_all_rates(p);
        out.kappa.resize(R);
        bool ok = true;
        for (int r = 0; r < R; ++r) {
          if (estimates[static_cast<std::size_t>(r)].no_information ||
              !estimates[static_cast<std::size_t>(r)].converged)
            ok = false;
          out.kappa[r] = estimates[static_cast<std::size_t>(r)].kappa;
        }
        out.ok = ok;
      } catch (const std::exception&) {
        out.ok = false;
      }
    }
  });

  // pooled occupation measure over all replica trajectories
  TrajectorySet pooled;
  pooled.horizon = T;
  pooled.rng_seed = seed;
  for (const ReplicaOut& s : slots)
    for (const Trajectory& t : s.set.trajectories) pooled.trajectories.push_back(t);
  const EmpiricalDistribution pi = empirical_pi(pooled);

  NormalityResult result;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(R);
  int used = 0;
  for (const ReplicaOut& s : slots) {
    if (!s.ok) continue;
    mean += s.kappa;
    ++used;
  }
  result.failures = replicas - used;
  result.replicas_used = used;
  if (used < 2) throw EstimatorDivergedError("too few successful replicas for a covariance");
  mean /= used;
  result.mean_estimate = mean;

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(R, R);
  for (const ReplicaOut& s : slots) {
    if (!s.ok) continue;
    const Eigen::VectorXd d = s.kappa - mean;
    cov += d * d.transpose();
  }
  cov *= T / (used - 1);  // covariance of sqrt(T) (kappa_hat - kappa*)
  result.sample_covariance = cov;

  // Fisher matrix in rate-constant coordinates: d a_i / d kappa_j = scale_j phi_j
  BasisLibrary lib;
  std::vector<double> scales;
  {
    std::map<std::vector<int>, std::vector<int>> channels;
    for (int r = 0; r < R; ++r) {
      const StateChange& v = network.reactions[static_cast<std::size_t>(r)].state_change;
      channels[std::vector<int>(v.data(), v.data() + v.size())].push_back(r);
    }
    int offset = 0;
    for (const auto& [v, rs] : channels) {
      for (int r : rs) {
        lib.functions.push_back(basis_of_reaction(network.reactions[static_cast<std::size_t>(r)]));
        scales.push_back(reaction_basis_scale(network.reactions[static_cast<std::size_t>(r)]));
      }
      lib.channel_ranges.emplace_back(offset, offset + static_cast<int>(rs.size()));
      offset += static_cast<int>(rs.size());
    }
    // reorder kappa* to the library's column order
    Eigen::VectorXd omega_cols(R);
    Eigen::VectorXd scale_cols(R);
    std::vector<int> col_to_reaction;
    for (const auto& [v, rs] : channels)
      for (int r : rs) col_to_reaction.push_back(r);
    for (int c = 0; c < R; ++c) {
      omega_cols[c] = kappa_star[col_to_reaction[static_cast<std::size_t>(c)]] *
                      scales[static_cast<std::size_t>(c)];
      scale_cols[c] = scales[static_cast<std::size_t>(c)];
    }
    const Eigen::MatrixXd F_phi = fisher_matrix(lib, omega_cols, pi);
    // back to reaction order, with the chain-rule scale factors
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(R, R);
    for (int c = 0; c < R; ++c)
      for (int c2 = 0; c2 < R; ++c2)
        F(col_to_reaction[static_cast<std::size_t>(c)], col_to_reaction[static_cast<std::size_t>(c2)]) =
            scale_cols[c] * F_phi(c, c2) * scale_cols[c2];
    result.fisher = F;
  }

  // condition check; drop weakest diagonal coordinates until well-conditioned
  std::vector<int> keep(static_cast<std::size_t>(R));
  std::iota(keep.begin(), keep.end(), 0);
  for (;;) {
    Eigen::MatrixXd sub(static_cast<long>(keep.size()), static_cast<long>(keep.size()));
    for (std::size_t a = 0; a < keep.size(); ++a)
      for (std::size_t b = 0; b < keep.size(); ++b)
        sub(static_cast<long>(a), static_cast<long>(b)) =
            result.fisher(keep[a], keep[b]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    result.fisher_condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (result.fisher_condition <= 1e10 || keep.size() == 1) {
      result.fisher_inverse = sub.inverse();
      break;
    }
    std::size_t weakest = 0;
    for (std::size_t a = 1; a < keep.size(); ++a)
      if (result.fisher(keep[a], keep[a]) < result.fisher(keep[weakest], keep[weakest]))
        weakest = a;
    keep.erase(keep.begin() + static_cast<long>(weakest));
  }
  result.compared = keep;

  double dev = 0.0;
  for (std::size_t a = 0; a < keep.size(); ++a) {
    const double ref = result.fisher_inverse(static_cast<long>(a), static_cast<long>(a));
    const double got = result.sample_covariance(keep[a], keep[a]);
    dev = std::max(dev, std::abs(got - ref) / std::abs(ref));
  }
  result.max_relative_deviation = dev;
  return result;
}


std::optional<EmpiricalDistribution> stationary_distribution(const ReactionNetwork& network,
                                                             const std::vector<State>& states,
                                                             long max_states) {
  network.validate();
  if (states.empty() || static_cast<long>(states.size()) > max_states) return std::nullopt;

  std::map<std::vector<int>, int> index;
  for (const State& x : states)
    index.emplace(std::vector<int>(x.data(), x.data() + x.size()), 0);
  int next = 0;
  for (auto& [key, idx] : index) idx = next++;
  const int n = next;

  // Q^T pi = 0 with the normalization sum(pi) = 1 replacing the last row.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [key, col] : index) {
    const State x = state_from_key(key);
    for (const Reaction& r : network.reactions) {
      const double a = mass_action_propensity(r, x);
      if (a <= 0.0) continue;
      const State y = x + r.state_change;
      auto it = index.find(std::vector<int>(y.data(), y.data() + y.size()));
      if (it == index.end()) return std::nullopt;  // not closed
      A(it->second, col) += a;
      A(col, col) -= a;
    }
  }
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  A.row(n - 1).setOnes();
  b[n - 1] = 1.0;
  const Eigen::VectorXd pi_vec = A.fullPivLu().solve(b);
  if (!pi_vec.allFinite()) return std::nullopt;

  EmpiricalDistribution pi;
  pi.total_time = 0.0;
  for (const auto& [key, col] : index) pi.weights[key] = pi_vec[col];
  return pi;
}

ZeroIntensityCheck check_zero_intensity_condition(const BasisLibrary& lib,
                                                  const Eigen::VectorXd& omega_star,
                                                  const EmpiricalDistribution& pi) {
  ZeroIntensityCheck out;
  double margin = std::numeric_limits<double>::infinity();
  bool any_negative_case = false;
  for (const auto& [key, w] : pi.weights) {
    const State x = state_from_key(key);
    for (int i = 0; i < lib.num_channels(); ++i) {
      const auto [begin, end] = lib.channel_ranges[static_cast<std::size_t>(i)];
      double sum = 0.0;
      bool all_zero = true;
      for (int j = begin; j < end; ++j) {
        const double v = eval_basis(lib.functions[static_cast<std::size_t>(j)], x);
        if (v != 0.0) all_zero = false;
        sum += omega_star[j] * v;
      }
      if (std::max(sum, 0.0) != 0.0) continue;  // true intensity positive here
      if (all_zero) continue;                   // first branch of the condition
      if (sum < 0.0) {
        any_negative_case = true;
        margin = std::min(margin, -sum);
      } else {
        out.holds = false;
        out.violations.push_back(key);
      }
    }
  }
  out.margin = out.holds && any_negative_case ? margin : 0.0;
  return out;
}

}  // namespace crn
