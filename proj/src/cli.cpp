#include "crn/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "crn/io.hpp"

namespace crn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitNotConverged = 4;

struct GlobalOptions {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
  std::string output_dir = ".";
  bool quiet = false;

  int effective_workers() const { return workers > 0 ? workers : default_workers(); }
};

struct RunContext {
  GlobalOptions opts;
  json config;
  fs::path config_dir;

  // inputs resolve against the config file's directory, then the output
  // directory (datasets usually live where a previous step wrote them),
  // then the working directory
  std::string resolve_input(const std::string& path) const {
    fs::path p(path);
    if (p.is_absolute()) return p.string();
    const fs::path beside_config = config_dir / p;
    if (fs::exists(beside_config)) return beside_config.string();
    const fs::path in_output = fs::path(opts.output_dir) / p;
    if (fs::exists(in_output)) return in_output.string();
    if (fs::exists(p)) return p.string();
    return beside_config.string();  // let the open fail with the primary candidate
  }
  std::string resolve_output(const std::string& path) const {
    fs::path p(path);
    if (p.is_absolute()) return p.string();
    fs::create_directories(opts.output_dir);
    return (fs::path(opts.output_dir) / p).string();
  }
  std::uint64_t seed(std::uint64_t config_seed) const {
    return opts.seed_set ? opts.seed : config_seed;
  }
};

json load_config(const GlobalOptions& opts, const std::string& command) {
  std::ifstream in(opts.config_path);
  if (!in) throw ConfigError("cannot open config file: " + opts.config_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("bad JSON in " + opts.config_path + ": " + e.what());
  }
  if (j.value("schema", "") != "crn-run/1")
    throw ConfigError(opts.config_path + ": expected schema crn-run/1");
  if (j.value("command", "") != command)
    throw ConfigError(opts.config_path + ": config is for command '" + j.value("command", "") +
                      "', not '" + command + "'");
  return j;
}

template <typename T>
T require_field(const json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("config: missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for key '" + key + "'");
  }
}

State parse_x0(const json& j, int n_species) {
  const auto values = require_field<std::vector<int>>(j, "x0");
  if (static_cast<int>(values.size()) != n_species)
    throw ConfigError("config: x0 length does not match the network's species count");
  State x0(n_species);
  for (int s = 0; s < n_species; ++s) {
    if (values[static_cast<std::size_t>(s)] < 0) throw ConfigError("config: x0 entries must be >= 0");
    x0[s] = values[static_cast<std::size_t>(s)];
  }
  return x0;
}

FistaConfig solver_config(const json& j) {
  FistaConfig cfg;
  if (!j.contains("solver")) return cfg;
  const json& s = j.at("solver");
  cfg.L0 = s.value("L0", cfg.L0);
  cfg.eta = s.value("eta", cfg.eta);
  cfg.window = s.value("window", cfg.window);
  cfg.rel_tol = s.value("rel_tol", cfg.rel_tol);
  cfg.max_iters = s.value("max_iters", cfg.max_iters);
  return cfg;
}

int cmd_simulate(const RunContext& ctx) {
  const json& j = ctx.config;
  const ReactionNetwork network = read_network(ctx.resolve_input(require_field<std::string>(j, "network")));
  const State x0 = parse_x0(j, network.n_species);
  const double horizon = require_field<double>(j, "horizon");
  const int count = require_field<int>(j, "trajectories");
  const std::uint64_t seed = ctx.seed(require_field<std::uint64_t>(j, "seed"));
  const std::string out_path = ctx.resolve_output(require_field<std::string>(j, "output"));
  if (!(horizon > 0.0)) throw ConfigError("config: horizon must be > 0");
  if (count < 1) throw ConfigError("config: trajectories must be >= 1");

  SimulateOptions sim_opts;
  sim_opts.max_events = j.value("max_events", sim_opts.max_events);

  TrajectorySet ts;
  try {
    ts = simulate_set(network, x0, horizon, count, seed, ctx.opts.effective_workers(), sim_opts);
  } catch (const SimulationDivergedError& e) {
    std::remove(out_path.c_str());
    std::cerr << "simulation diverged: " << e.what() << "\n";
    return kExitNumeric;
  }
  const ChannelSummary cs = identify_channels(ts);
  try {
    write_dataset(out_path, ts, cs);
  } catch (...) {
    std::remove(out_path.c_str());
    throw;
  }
  if (!ctx.opts.quiet) {
    print_channel_table(std::cout, cs);
    std::cout << "wrote " << out_path << "\n";
  }
  return kExitOk;
}

int cmd_channels(const RunContext& ctx) {
  const TrajectorySet ts =
      read_dataset(ctx.resolve_input(require_field<std::string>(ctx.config, "dataset")));
  const ChannelSummary cs = identify_channels(ts);
  print_channel_table(std::cout, cs);
  if (ctx.config.contains("output")) {
    std::ofstream out(ctx.resolve_output(ctx.config.at("output").get<std::string>()));
    print_channel_table(out, cs);
  }
  return kExitOk;
}

int cmd_learn_rates(const RunContext& ctx) {
  const json& j = ctx.config;
  const ReactionNetwork network = read_network(ctx.resolve_input(require_field<std::string>(j, "network")));
  const TrajectorySet ts = read_dataset(ctx.resolve_input(require_field<std::string>(j, "dataset")));
  const ChannelSummary cs = identify_channels(ts);
  const KnownStructureProblem problem = build_known_structure(network, ts, cs);

  GradientConfig gd;
  if (j.contains("gradient")) {
    const json& g = j.at("gradient");
    gd.step = g.value("step", gd.step);
    gd.floor = g.value("floor", gd.floor);
    gd.grad_tol = g.value("grad_tol", gd.grad_tol);
    gd.max_iters = g.value("max_iters", gd.max_iters);
  }

  for (const StateChange& v : problem.unmatched_channels) {
    std::cerr << "warning: data channel (";
    for (int s = 0; s < v.size(); ++s) std::cerr << (s ? "," : "") << v[s];
    std::cerr << ") is explained by no reaction in the network\n";
  }

  const auto estimates = estimate_all_rates(problem, gd);
  write_rates(ctx.resolve_output(require_field<std::string>(j, "output")), network, estimates);

  if (!ctx.opts.quiet) {
    std::cout << "reaction  estimate      method       flags\n";
    for (std::size_t r = 0; r < estimates.size(); ++r) {
      const RateEstimate& e = estimates[r];
      std::cout << "  " << r + 1 << "       " << format_double(e.kappa) << "  " << e.method
                << (e.no_information ? "  no-information" : "")
                << (e.converged ? "" : "  not-converged") << "\n";
    }
  }
  for (const RateEstimate& e : estimates)
    if (!e.converged) return kExitNotConverged;
  return kExitOk;
}

int cmd_learn_network(const RunContext& ctx) {
  const json& j = ctx.config;
  const TrajectorySet ts = read_dataset(ctx.resolve_input(require_field<std::string>(j, "dataset")));
  const ChannelSummary cs = identify_channels(ts);
  if (cs.num_channels() == 0) throw ConfigError("dataset has no events; nothing to learn");

  const BasisLibrary lib = BasisLibrary::replicated(polynomial_basis(ts.n_species()), cs.num_channels());

  SparseLearnProblem problem;
  problem.eps = SmoothingParam{require_field<double>(j, "epsilon")};
  if (!(problem.eps.epsilon > 0.0)) throw ConfigError("config: epsilon must be > 0");

  if (!j.contains("lambda")) throw ConfigError("config: missing key 'lambda'");
  const json& jl = j.at("lambda");
  problem.lambda.assign(static_cast<std::size_t>(cs.num_channels()), 0.0);
  if (jl.is_number()) {
    std::fill(problem.lambda.begin(), problem.lambda.end(), jl.get<double>());
  } else if (jl.is_object()) {
    for (int i = 0; i < cs.num_channels(); ++i) {
      const std::string key = std::to_string(i + 1);
      if (!jl.contains(key))
        throw ConfigError("config: lambda map is missing channel " + key);
      problem.lambda[static_cast<std::size_t>(i)] = jl.at(key).get<double>();
    }
  } else {
    throw ConfigError("config: lambda must be a number or a per-channel map");
  }
  for (double lam : problem.lambda)
    if (!(lam >= 0.0)) throw ConfigError("config: lambda must be >= 0");

  const bool precondition = j.value("precondition", true);
  problem.rescaling = precondition ? build_preconditioner(ts, cs, lib)
                                   : Eigen::VectorXd::Ones(lib.dimension()).eval();

  const PrecomputedDesign design = precompute(ts, cs, lib);
  const SparseLearnResult result =
      learn_network(problem, design, solver_config(j), ctx.opts.effective_workers());

  write_coefficients(ctx.resolve_output(require_field<std::string>(j, "output")), lib, cs, result,
                     problem.eps);
  if (!ctx.opts.quiet) print_coefficient_table(std::cout, lib, result);

  if (result.any_failed) return kExitNumeric;
  if (!result.all_converged) return kExitNotConverged;
  return kExitOk;
}

int cmd_diagnose(const RunContext& ctx) {
  const json& j = ctx.config;
  const std::vector<std::string> valid = {"pi", "fisher", "normality", "compensator"};
  const auto run = require_field<std::vector<std::string>>(j, "run");
  for (const std::string& name : run)
    if (std::find(valid.begin(), valid.end(), name) == valid.end())
      throw ConfigError("unknown diagnostic '" + name + "'; valid names: pi, fisher, normality, compensator");

  const ReactionNetwork network = read_network(ctx.resolve_input(require_field<std::string>(j, "network")));
  const State x0 = parse_x0(j, network.n_species);
  const double horizon = require_field<double>(j, "horizon");
  const std::uint64_t seed = ctx.seed(require_field<std::uint64_t>(j, "seed"));
  const int count = j.value("trajectories", 1);
  if (!(horizon > 0.0)) throw ConfigError("config: horizon must be > 0");

  std::ostringstream report;
  report << "diagnostic report\n";

  TrajectorySet ts;
  EmpiricalDistribution pi;
  bool have_data = false;
  auto ensure_data = [&] {
    if (have_data) return;
    ts = simulate_set(network, x0, horizon, count, seed, ctx.opts.effective_workers());
    pi = empirical_pi(ts);
    have_data = true;
  };

  for (const std::string& name : run) {
    if (name == "pi") {
      ensure_data();
      report << "\n[pi] empirical occupation measure (" << pi.weights.size() << " states)\n";
      for (const auto& [key, w] : pi.weights) {
        report << "  (";
        for (std::size_t s = 0; s < key.size(); ++s) report << (s ? "," : "") << key[s];
        report << ") " << std::setprecision(8) << w << "\n";
      }
      std::vector<State> support;
      for (const auto& [key, w] : pi.weights)
        support.push_back(Eigen::Map<const State>(key.data(), static_cast<long>(key.size())));
      if (auto exact = stationary_distribution(network, support)) {
        double dev = 0.0;
        for (const auto& [key, w] : pi.weights)
          dev = std::max(dev, std::abs(w - exact->weights.at(key)));
        report << "  max deviation from generator stationary solve: " << std::setprecision(8)
               << dev << "\n";
      } else {
        report << "  (state set not closed under the network; no exact reference)\n";
      }
    } else if (name == "fisher") {
      ensure_data();
      Eigen::VectorXd kappa(network.reactions.size());
      for (std::size_t r = 0; r < network.reactions.size(); ++r)
        kappa[static_cast<long>(r)] = network.reactions[r].rate_constant;
      const ChannelSummary cs = identify_channels(ts);
      const KnownStructureProblem p = build_known_structure(network, ts, cs);
      Eigen::VectorXd omega_cols(p.library.dimension());
      int col = 0;
      for (const auto& reactions : p.reactions_by_channel)
        for (int r : reactions) {
          omega_cols[col] = kappa[r] * p.column_scale[static_cast<std::size_t>(col)];
          ++col;
        }
      const Eigen::MatrixXd F = fisher_matrix(p.library, omega_cols, pi);
      report << "\n[fisher] matrix over the empirical occupation measure\n" << format_matrix(F);
    } else if (name == "normality") {
      const int replicas = j.value("replicas", 300);
      const NormalityResult res =
          normality_experiment(network, x0, horizon, replicas, seed, ctx.opts.effective_workers());
      report << "\n[normality] replicas " << replicas << ", failures " << res.failures << "\n";
      report << "sample covariance of sqrt(T)(kappa_hat - kappa*):\n"
             << format_matrix(res.sample_covariance);
      report << "inverse Fisher (compared block):\n" << format_matrix(res.fisher_inverse);
      report << "max relative diagonal deviation: " << std::setprecision(8)
             << res.max_relative_deviation * 100.0 << "%\n";
    } else if (name == "compensator") {
      ensure_data();
      const ChannelSummary cs = identify_channels(ts);
      report << "\n[compensator] endpoint residuals, first trajectory\n";
      const auto paths = compensator_residuals(ts.trajectories.front(), cs, network);
      for (std::size_t i = 0; i < paths.size(); ++i)
        report << "  channel " << i + 1 << ": endpoint " << std::setprecision(8)
               << paths[i].endpoint_residual << ", integral " << paths[i].compensator_total
               << "\n";
    }
  }

  if (ctx.config.contains("output")) {
    std::ofstream out(ctx.resolve_output(ctx.config.at("output").get<std::string>()));
    if (!out) throw ConfigError("cannot write report");
    out << report.str();
  }
  if (!ctx.opts.quiet) std::cout << report.str();
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"stochastic chemical reaction network simulation and learning"};
  app.require_subcommand(1);

  GlobalOptions opts;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "generate a trajectory dataset with the SSA"},
      {"channels", "identify reaction channels in a dataset"},
      {"learn-rates", "estimate rate constants with known reaction structure"},
      {"learn-network", "sparse-learn channel propensities from a dataset"},
      {"diagnose", "run asymptotic diagnostics on a toy network"},
  };
  for (const auto& [name, desc] : commands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", opts.config_path, "run configuration (JSON)")->required();
    sub->add_option("--seed", opts.seed, "override the config seed")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
    sub->add_option("--workers", opts.workers, "worker threads (default: hardware)");
    sub->add_option("--output", opts.output_dir, "directory for output files");
    sub->add_flag("--quiet", opts.quiet, "suppress console tables");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    RunContext ctx;
    ctx.opts = opts;
    ctx.config = load_config(opts, command);
    ctx.config_dir = fs::absolute(fs::path(opts.config_path)).parent_path();

    if (command == "simulate") return cmd_simulate(ctx);
    if (command == "channels") return cmd_channels(ctx);
    if (command == "learn-rates") return cmd_learn_rates(ctx);
    if (command == "learn-network") return cmd_learn_network(ctx);
    if (command == "diagnose") return cmd_diagnose(ctx);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const SolverDivergedError& e) {
    std::cerr << "solver diverged: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace crn
