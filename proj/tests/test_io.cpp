#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "crn/io.hpp"
#include "crn/rng.hpp"
#include "crn/simulate.hpp"
#include "networks.hpp"

using namespace crn;
using namespace crn::testnets;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("crn_io_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("doubles survive the round trip bit-exactly") {
  SplitMix64 rng(41);
  for (int trial = 0; trial < 5000; ++trial) {
    // random magnitudes across many decades, plus exact small values
    const double mag = std::pow(10.0, -12.0 + 24.0 * rng.next_unit());
    const double v = (rng.next_u64() % 2 ? 1.0 : -1.0) * mag * (0.5 + rng.next_unit());
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(parse_double(format_double(0.0)) == 0.0);
  CHECK_THROWS_AS(parse_double("12,5"), InvalidInputError);
  CHECK_THROWS_AS(parse_double("nope"), InvalidInputError);
}

TEST_CASE("network file round trip") {
  TempDir dir;
  ReactionNetwork net = example2();
  // a rate constant with 15 significant digits must survive
  net.reactions[0].rate_constant = 1.23456789012345;
  net.reactions[1].volume = 2.5;
  write_network(dir.file("net.json"), net);
  const ReactionNetwork back = read_network(dir.file("net.json"));

  REQUIRE(back.reactions.size() == net.reactions.size());
  CHECK(back.n_species == net.n_species);
  CHECK(back.species_names == net.species_names);
  for (std::size_t r = 0; r < net.reactions.size(); ++r) {
    CHECK(back.reactions[r].kind == net.reactions[r].kind);
    CHECK(back.reactions[r].species_a == net.reactions[r].species_a);
    CHECK(back.reactions[r].species_b == net.reactions[r].species_b);
    CHECK(back.reactions[r].rate_constant == net.reactions[r].rate_constant);
    CHECK(back.reactions[r].volume == net.reactions[r].volume);
    CHECK(back.reactions[r].state_change == net.reactions[r].state_change);
  }

  // serialize-parse-serialize is a fixed point
  write_network(dir.file("net2.json"), back);
  CHECK(slurp(dir.file("net.json")) == slurp(dir.file("net2.json")));
}

TEST_CASE("network file validation errors") {
  TempDir dir;
  CHECK_THROWS_AS(read_network(dir.file("missing.json")), ConfigError);

  std::ofstream(dir.file("bad.json")) << "{ not json";
  CHECK_THROWS_AS(read_network(dir.file("bad.json")), ConfigError);

  std::ofstream(dir.file("schema.json")) << R"({"schema":"other/9","species":["A"],"reactions":[]})";
  CHECK_THROWS_AS(read_network(dir.file("schema.json")), ConfigError);

  std::ofstream(dir.file("shape.json")) << R"({"schema":"crn-network/1","species":["A"],
    "reactions":[{"kind":"unary","species":[1],"kappa":1.0,"change":[-1,0]}]})";
  CHECK_THROWS_AS(read_network(dir.file("shape.json")), ConfigError);
}

TEST_CASE("dataset round trip preserves everything") {
  TempDir dir;
  const TrajectorySet ts = simulate_set(example1(), make_state({20, 10}), 5.0, 10, 77, 2);
  const ChannelSummary cs = identify_channels(ts);
  write_dataset(dir.file("data.txt"), ts, cs);
  const TrajectorySet back = read_dataset(dir.file("data.txt"));

  REQUIRE(back.size() == ts.size());
  CHECK(back.horizon == ts.horizon);
  CHECK(back.rng_seed == ts.rng_seed);
  for (int q = 0; q < ts.size(); ++q) {
    const Trajectory& a = ts.trajectories[static_cast<std::size_t>(q)];
    const Trajectory& b = back.trajectories[static_cast<std::size_t>(q)];
    REQUIRE(a.num_events() == b.num_events());
    CHECK(a.initial_state() == b.initial_state());
    CHECK(a.final_holding_time() == b.final_holding_time());  // bit-exact
    for (long l = 0; l < a.num_events(); ++l) {
      CHECK(a.holding_time(l) == b.holding_time(l));  // bit-exact
      CHECK(a.new_state(l) == b.new_state(l));
    }
  }

  // write(read(x)) is byte-identical to write(x)
  write_dataset(dir.file("data2.txt"), back, identify_channels(back));
  CHECK(slurp(dir.file("data.txt")) == slurp(dir.file("data2.txt")));
}

TEST_CASE("dataset reader rejects tampered files") {
  TempDir dir;
  const TrajectorySet ts = simulate_set(example1(), make_state({20, 10}), 2.0, 2, 5);
  write_dataset(dir.file("data.txt"), ts, identify_channels(ts));
  std::string text = slurp(dir.file("data.txt"));

  // flip a channel vector entry so the table no longer matches the events
  const auto pos = text.find("channel -1 0");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 12, "channel -2 0");
  std::ofstream(dir.file("tampered.txt")) << text;
  CHECK_THROWS_AS(read_dataset(dir.file("tampered.txt")), ConfigError);

  std::ofstream(dir.file("trunc.txt")) << slurp(dir.file("data.txt")).substr(0, 200);
  CHECK_THROWS_AS(read_dataset(dir.file("trunc.txt")), ConfigError);
}

TEST_CASE("rate and coefficient writers emit parseable JSON") {
  TempDir dir;
  const TrajectorySet ts = simulate_set(example1(), make_state({20, 10}), 5.0, 10, 31, 2);
  const ChannelSummary cs = identify_channels(ts);
  const KnownStructureProblem p = build_known_structure(example1(), ts, cs);
  const auto estimates = estimate_all_rates(p);
  write_rates(dir.file("rates"), example1(), estimates);

  const auto jr = nlohmann::json::parse(slurp(dir.file("rates.json")));
  CHECK(jr.at("schema") == "crn-rates/1");
  REQUIRE(jr.at("rates").size() == 4);
  CHECK(jr.at("rates").at(0).at("method") == "closed-form");
  CHECK(std::abs(jr.at("rates").at(0).at("kappa").get<double>() - 1.0) < 0.2);

  const BasisLibrary lib = BasisLibrary::replicated(polynomial_basis(2), 4);
  const PrecomputedDesign d = precompute(ts, cs, lib);
  SparseLearnProblem problem;
  problem.eps = {0.1};
  problem.lambda.assign(4, 0.1);
  problem.rescaling = build_preconditioner(ts, cs, lib);
  const SparseLearnResult result = learn_network(problem, d, FistaConfig{}, 2);
  write_coefficients(dir.file("coef"), lib, cs, result, problem.eps);

  const auto jc = nlohmann::json::parse(slurp(dir.file("coef.json")));
  CHECK(jc.at("schema") == "crn-coefficients/1");
  REQUIRE(jc.at("channels").size() == 4);
  const auto& ch0 = jc.at("channels").at(0);
  CHECK(ch0.at("coefficients").size() == 6);
  CHECK(ch0.at("converged").get<bool>());
  int dominant_count = 0;
  for (const auto& row : ch0.at("coefficients"))
    if (row.at("dominant").get<bool>()) ++dominant_count;
  CHECK(dominant_count == 1);

  const std::string text = slurp(dir.file("coef.txt"));
  CHECK(text.find("x1*x2") != std::string::npos);
  CHECK(text.find("lambda") != std::string::npos);
}

TEST_CASE("matrix formatting uses 8 significant digits") {
  Eigen::MatrixXd m(2, 2);
  m << 1.234567891234, 0.5, -3.0, 1e-9;
  const std::string text = format_matrix(m);
  CHECK(text.find("1.2345679") != std::string::npos);
  CHECK(text.find("1e-09") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
}
