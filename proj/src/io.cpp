#include "crn/io.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

namespace crn {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw InvalidInputError("failed to format double");
  return std::string(buf, end);
}

double parse_double(const std::string& text) {
  double v = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw InvalidInputError("bad floating-point literal: " + text);
  return v;
}

namespace {

json require(const json& j, const std::string& key, const std::string& context) {
  if (!j.contains(key)) throw ConfigError(context + ": missing key '" + key + "'");
  return j.at(key);
}

ReactionKind kind_from_name(const std::string& name) {
  if (name == "source") return ReactionKind::Source;
  if (name == "unary") return ReactionKind::Unary;
  if (name == "binary_same") return ReactionKind::BinarySame;
  if (name == "binary_mixed") return ReactionKind::BinaryMixed;
  throw ConfigError("unknown reaction kind: " + name);
}

}  // namespace

ReactionNetwork read_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open network file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("bad JSON in " + path + ": " + e.what());
  }
  if (require(j, "schema", path).get<std::string>() != "crn-network/1")
    throw ConfigError(path + ": unsupported schema");

  ReactionNetwork net;
  for (const auto& name : require(j, "species", path)) net.species_names.push_back(name.get<std::string>());
  net.n_species = static_cast<int>(net.species_names.size());

  for (const auto& jr : require(j, "reactions", path)) {
    Reaction r;
    r.kind = kind_from_name(require(jr, "kind", path).get<std::string>());
    std::vector<int> species;
    if (jr.contains("species"))
      for (const auto& s : jr.at("species")) species.push_back(s.get<int>() - 1);  // 1-based in file
    if (!species.empty()) r.species_a = species[0];
    if (species.size() > 1) r.species_b = species[1];
    r.rate_constant = require(jr, "kappa", path).get<double>();
    r.volume = jr.value("volume", 1.0);
    const auto& change = require(jr, "change", path);
    r.state_change.resize(net.n_species);
    if (static_cast<int>(change.size()) != net.n_species)
      throw ConfigError(path + ": state-change length does not match species count");
    for (int s = 0; s < net.n_species; ++s) r.state_change[s] = change.at(static_cast<std::size_t>(s)).get<int>();
    net.reactions.push_back(std::move(r));
  }
  try {
    net.validate();
  } catch (const InvalidInputError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return net;
}

void write_network(const std::string& path, const ReactionNetwork& network) {
  network.validate();
  json j;
  j["schema"] = "crn-network/1";
  j["species"] = network.species_names.empty()
                     ? [&] {
                         std::vector<std::string> names;
                         for (int i = 0; i < network.n_species; ++i) names.push_back("S" + std::to_string(i + 1));
                         return names;
                       }()
                     : network.species_names;
  json reactions = json::array();
  for (const Reaction& r : network.reactions) {
    json jr;
    jr["kind"] = reaction_kind_name(r.kind);
    std::vector<int> species;
    if (r.kind != ReactionKind::Source) species.push_back(r.species_a + 1);
    if (r.kind == ReactionKind::BinaryMixed) species.push_back(r.species_b + 1);
    if (!species.empty()) jr["species"] = species;
    jr["kappa"] = r.rate_constant;
    jr["volume"] = r.volume;
    jr["change"] = std::vector<int>(r.state_change.data(), r.state_change.data() + r.state_change.size());
    reactions.push_back(std::move(jr));
  }
  j["reactions"] = std::move(reactions);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write network file: " + path);
  out << j.dump(2) << "\n";
}

void write_dataset(const std::string& path, const TrajectorySet& ts, const ChannelSummary& cs) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write dataset file: " + path);
  out << "crn-trajectories v1\n";
  out << "n_species " << ts.n_species() << "\n";
  out << "horizon " << format_double(ts.horizon) << "\n";
  out << "trajectories " << ts.size() << "\n";
  out << "seed " << ts.rng_seed << "\n";
  out << "channels " << cs.num_channels() << "\n";
  for (int i = 0; i < cs.num_channels(); ++i) {
    out << "channel";
    for (int s = 0; s < cs.vectors[static_cast<std::size_t>(i)].size(); ++s)
      out << " " << cs.vectors[static_cast<std::size_t>(i)][s];
    out << "\n";
  }
  for (int q = 0; q < ts.size(); ++q) {
    const Trajectory& t = ts.trajectories[static_cast<std::size_t>(q)];
    out << "trajectory " << q << " events " << t.num_events() << "\n";
    out << "x0";
    for (int s = 0; s < t.n_species(); ++s) out << " " << t.initial_state()[s];
    out << "\n";
    for (long l = 0; l < t.num_events(); ++l) {
      out << l << " " << format_double(t.holding_time(l));
      const auto y = t.new_state(l);
      for (int s = 0; s < t.n_species(); ++s) out << " " << y[s];
      out << "\n";
    }
    out << "final " << format_double(t.final_holding_time()) << "\n";
  }
  out << "end\n";
  if (!out) throw ConfigError("write failed: " + path);
}

namespace {

class LineReader {
 public:
  explicit LineReader(const std::string& path) : in_(path), path_(path) {
    if (!in_) throw ConfigError("cannot open dataset file: " + path);
  }
  std::string next() {
    std::string line;
    if (!std::getline(in_, line)) throw ConfigError(path_ + ": unexpected end of file");
    ++line_no_;
    return line;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(path_ + ":" + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::ifstream in_;
  std::string path_;
  long line_no_ = 0;
};

}  // namespace

TrajectorySet read_dataset(const std::string& path) {
  LineReader reader(path);
  if (reader.next() != "crn-trajectories v1") reader.fail("bad magic line");

  auto expect_tag = [&](const std::string& line, const std::string& tag) {
    if (line.rfind(tag + " ", 0) != 0) reader.fail("expected '" + tag + " ...'");
    return line.substr(tag.size() + 1);
  };

  const int n_species = std::stoi(expect_tag(reader.next(), "n_species"));
  if (n_species < 1) reader.fail("bad species count");
  const double horizon = parse_double(expect_tag(reader.next(), "horizon"));
  const int count = std::stoi(expect_tag(reader.next(), "trajectories"));
  const std::uint64_t seed = std::stoull(expect_tag(reader.next(), "seed"));
  const int n_channels = std::stoi(expect_tag(reader.next(), "channels"));
  std::vector<StateChange> channel_vectors;
  for (int i = 0; i < n_channels; ++i) {
    std::istringstream line(reader.next());
    std::string tag;
    line >> tag;
    if (tag != "channel") reader.fail("expected channel line");
    StateChange v(n_species);
    for (int s = 0; s < n_species; ++s)
      if (!(line >> v[s])) reader.fail("short channel vector");
    channel_vectors.push_back(std::move(v));
  }

  TrajectorySet ts;
  ts.horizon = horizon;
  ts.rng_seed = seed;
  for (int q = 0; q < count; ++q) {
    std::istringstream head(reader.next());
    std::string tag, events_tag;
    int index = -1;
    long events = -1;
    head >> tag >> index >> events_tag >> events;
    if (tag != "trajectory" || index != q || events_tag != "events" || events < 0)
      reader.fail("bad trajectory header");

    std::istringstream x0_line(reader.next());
    x0_line >> tag;
    if (tag != "x0") reader.fail("expected x0 line");
    State x0(n_species);
    for (int s = 0; s < n_species; ++s)
      if (!(x0_line >> x0[s])) reader.fail("short x0 line");

    Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> states(events, n_species);
    Eigen::VectorXd holds(events);
    for (long l = 0; l < events; ++l) {
      std::istringstream line(reader.next());
      long idx = -1;
      std::string hold_text;
      line >> idx >> hold_text;
      if (idx != l) reader.fail("bad event index");
      holds[l] = parse_double(hold_text);
      for (int s = 0; s < n_species; ++s)
        if (!(line >> states(l, s))) reader.fail("short event line");
    }
    const double final_hold = parse_double(expect_tag(reader.next(), "final"));
    ts.trajectories.emplace_back(std::move(x0), std::move(states), std::move(holds), final_hold,
                                 horizon);
  }
  if (reader.next() != "end") reader.fail("missing end marker");

  ts.validate();
  const ChannelSummary cs = identify_channels(ts);
  if (static_cast<int>(channel_vectors.size()) != cs.num_channels())
    throw ConfigError(path + ": channel table does not match trajectory contents");
  for (int i = 0; i < cs.num_channels(); ++i)
    if (channel_vectors[static_cast<std::size_t>(i)] != cs.vectors[static_cast<std::size_t>(i)])
      throw ConfigError(path + ": channel table does not match trajectory contents");
  return ts;
}

void print_channel_table(std::ostream& out, const ChannelSummary& cs) {
  out << "channel  vector            occurrences\n";
  for (int i = 0; i < cs.num_channels(); ++i) {
    std::ostringstream vec;
    vec << "(";
    for (int s = 0; s < cs.vectors[static_cast<std::size_t>(i)].size(); ++s)
      vec << (s ? "," : "") << cs.vectors[static_cast<std::size_t>(i)][s];
    vec << ")";
    out << std::left << std::setw(9) << i + 1 << std::setw(18) << vec.str()
        << cs.counts[static_cast<std::size_t>(i)] << "\n";
  }
}

void write_rates(const std::string& path_base, const ReactionNetwork& network,
                 const std::vector<RateEstimate>& estimates) {
  {
    std::ofstream out(path_base + ".txt");
    if (!out) throw ConfigError("cannot write " + path_base + ".txt");
    out << "reaction  kind          estimate                 method       flags\n";
    for (std::size_t r = 0; r < estimates.size(); ++r) {
      const RateEstimate& e = estimates[r];
      out << std::left << std::setw(10) << r + 1 << std::setw(14)
          << reaction_kind_name(network.reactions[r].kind) << std::setw(25) << format_double(e.kappa)
          << std::setw(13) << e.method;
      if (e.no_information) out << "no-information";
      if (!e.converged) out << (e.no_information ? "," : "") << "not-converged";
      out << "\n";
    }
  }
  json j;
  j["schema"] = "crn-rates/1";
  json rows = json::array();
  for (std::size_t r = 0; r < estimates.size(); ++r) {
    const RateEstimate& e = estimates[r];
    rows.push_back({{"reaction", r + 1},
                    {"kind", reaction_kind_name(network.reactions[r].kind)},
                    {"kappa", e.kappa},
                    {"method", e.method},
                    {"no_information", e.no_information},
                    {"converged", e.converged}});
  }
  j["rates"] = std::move(rows);
  std::ofstream out(path_base + ".json");
  if (!out) throw ConfigError("cannot write " + path_base + ".json");
  out << j.dump(2) << "\n";
}

namespace {

// The structurally dominant coefficient: largest magnitude among the
// non-constant basis functions (the constant column absorbs the smoothing
// offset and can exceed small true coefficients).
int dominant_index(const BasisLibrary& lib, int begin, const Eigen::VectorXd& v) {
  int best = -1;
  for (int j = 0; j < v.size(); ++j) {
    if (lib.functions[static_cast<std::size_t>(begin + j)].kind == BasisKind::Constant) continue;
    if (best < 0 || std::abs(v[j]) > std::abs(v[best])) best = j;
  }
  if (best < 0) best = 0;
  return best;
}

}  // namespace

void print_coefficient_table(std::ostream& out, const BasisLibrary& lib,
                             const SparseLearnResult& result) {
  for (const ChannelLearnResult& ch : result.channels) {
    const auto [begin, end] = lib.channel_ranges[static_cast<std::size_t>(ch.channel)];
    out << "channel " << ch.channel + 1 << "  lambda " << format_double(ch.lambda);
    if (ch.failed) {
      out << "  FAILED: " << ch.error << "\n";
      continue;
    }
    out << "  iterations " << ch.report.iterations << "  objective "
        << format_double(ch.report.final_objective)
        << (ch.report.converged ? "" : "  NOT CONVERGED") << "\n";
    const int dom = dominant_index(lib, begin, ch.omega);
    out << "  basis         coefficient              rescaled                 c\n";
    for (int j = 0; j < end - begin; ++j) {
      out << (j == dom ? "* " : "  ") << std::left << std::setw(14)
          << lib.functions[static_cast<std::size_t>(begin + j)].descriptor() << std::setw(25)
          << format_double(ch.omega[j]) << std::setw(25) << format_double(ch.omega_rescaled[j])
          << format_double(ch.weights[j]) << "\n";
    }
  }
}

void write_coefficients(const std::string& path_base, const BasisLibrary& lib,
                        const ChannelSummary& cs, const SparseLearnResult& result,
                        SmoothingParam eps) {
  {
    std::ofstream out(path_base + ".txt");
    if (!out) throw ConfigError("cannot write " + path_base + ".txt");
    out << "epsilon " << format_double(eps.epsilon) << "\n";
    print_coefficient_table(out, lib, result);
  }
  json j;
  j["schema"] = "crn-coefficients/1";
  j["epsilon"] = eps.epsilon;
  json channels = json::array();
  for (const ChannelLearnResult& ch : result.channels) {
    const auto [begin, end] = lib.channel_ranges[static_cast<std::size_t>(ch.channel)];
    json jc;
    jc["channel"] = ch.channel + 1;
    jc["vector"] = std::vector<int>(cs.vectors[static_cast<std::size_t>(ch.channel)].data(),
                                    cs.vectors[static_cast<std::size_t>(ch.channel)].data() +
                                        cs.vectors[static_cast<std::size_t>(ch.channel)].size());
    jc["lambda"] = ch.lambda;
    jc["failed"] = ch.failed;
    if (ch.failed) {
      jc["error"] = ch.error;
    } else {
      json rows = json::array();
      const int dom = dominant_index(lib, begin, ch.omega);
      for (int j = 0; j < end - begin; ++j)
        rows.push_back({{"basis", lib.functions[static_cast<std::size_t>(begin + j)].descriptor()},
                        {"coefficient", ch.omega[j]},
                        {"rescaled", ch.omega_rescaled[j]},
                        {"weight", ch.weights[j]},
                        {"dominant", j == dom}});
      jc["coefficients"] = std::move(rows);
      jc["converged"] = ch.report.converged;
      jc["iterations"] = ch.report.iterations;
      jc["final_objective"] = ch.report.final_objective;
      jc["mean_step_size"] = ch.report.step_sizes.empty()
                                 ? 0.0
                                 : [&] {
                                     double s = 0.0;
                                     for (double v : ch.report.step_sizes) s += v;
                                     return s / static_cast<double>(ch.report.step_sizes.size());
                                   }();
    }
    channels.push_back(std::move(jc));
  }
  j["channels"] = std::move(channels);
  std::ofstream out(path_base + ".json");
  if (!out) throw ConfigError("cannot write " + path_base + ".json");
  out << j.dump(2) << "\n";
}

std::string format_matrix(const Eigen::MatrixXd& m) {
  std::ostringstream out;
  out << std::setprecision(8);
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) out << (c ? " " : "") << m(r, c);
    out << "\n";
  }
  return out.str();
}

}  // namespace crn
