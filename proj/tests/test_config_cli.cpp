#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "condenser/cli.hpp"
#include "condenser/config.hpp"
#include "condenser/experiments.hpp"

using namespace condenser;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"(seed = 3

[domain]
kind = "half_space"
dim = 3
alpha = 2.0

[a1]
shape = "disc_series"
count = 2
nodes = 120

[a2]
nodes = 500

[constraint]
shape = "disc_series"

[field]
kind = "zero"

[solver]
method = "bridge"

[output]
directory = "run"
)";

fs::path scratch_dir(const std::string& name) {
  fs::path d = fs::path(CONDENSER_TEST_TMP) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConfigError);
    return e.what();
  }
  return "";
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "condenser");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("a valid config parses with defaults filled in") {
  RunConfig c = parse_config(kSmall);
  CHECK(c.seed == 3);
  CHECK(c.domain_kind == DomainKind::HalfSpace);
  CHECK(c.a1_shape == RunConfig::A1Shape::DiscSeries);
  CHECK(c.disc_count == 2);
  CHECK(c.beta == doctest::Approx(0.54));
  CHECK(c.threshold == doctest::Approx(0.02));
  CHECK(c.formats == std::vector<std::string>{"csv", "json"});
}

TEST_CASE("config errors name the line and the key") {
  std::string unknown = std::string(kSmall) + "\n[solver2]\nx = 1\n";
  CHECK(config_error(unknown).find("unknown key solver2") != std::string::npos);
  std::string bad_alpha = kSmall;
  bad_alpha.replace(bad_alpha.find("alpha = 2.0"), 11, "alpha = 2.5");
  const std::string msg = config_error(bad_alpha);
  CHECK(msg.find("line 6") != std::string::npos);
  CHECK(msg.find("domain.alpha") != std::string::npos);
  std::string typo = kSmall;
  typo.replace(typo.find("nodes = 120"), 11, "node = 120");
  CHECK(config_error(typo).find("a1.node") != std::string::npos);
  CHECK(config_error("seed = 1\n").find("[domain]") != std::string::npos);
  CHECK(config_error("[domain\n").find("line 1") != std::string::npos);
  std::string mismatch = kSmall;
  mismatch.replace(mismatch.find("\"half_space\""), 12, "\"ball\"");
  CHECK(config_error(mismatch).find("half_space") != std::string::npos);
}

TEST_CASE("SHA-256 of known vectors") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(config_hash("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("build_inputs matches the disc-series example") {
  RunConfig c = parse_config(kSmall);
  ProblemInputs in = build_inputs(c);
  CHECK(in.a1.size() == 120);
  CHECK(in.a2.size() > 0);
  CHECK(in.xi.sum() > 1.0);
  CHECK(in.truncation_radius == doctest::Approx(kTruncationFactor * diameter(in.a1)));
}

TEST_CASE("weights files and custom points resolve against the config directory") {
  fs::path dir = scratch_dir("custom");
  {
    std::ofstream pts(dir / "points.csv");
    pts << "x1,x2,x3\n1,0,0\n1,1,0\n1,0,1\n2,0,0\n";
    std::ofstream w(dir / "xi.csv");
    w << "weight\n0.5\n0.5\n0.5\n0.5\n";
  }
  std::string text = R"([domain]
kind = "half_space"
[a1]
shape = "custom"
points_file = "points.csv"
[a2]
nodes = 300
[constraint]
shape = "weights_file"
file = "xi.csv"
)";
  RunConfig c = parse_config(text, dir);
  ProblemInputs in = build_inputs(c);
  CHECK(in.a1.size() == 4);
  CHECK(in.xi.sum() == doctest::Approx(2.0));
  std::ofstream(dir / "xi.csv") << "0.5\n0.5\n";
  CHECK_THROWS_AS(build_inputs(c), Error);
}

TEST_CASE("solve writes the documented artifacts and re-runs bit-identically from its manifest") {
  fs::path dir = scratch_dir("cli_solve");
  std::ofstream(dir / "run.toml") << kSmall;
  CHECK(run_cli({"--quiet", "solve", "--config", (dir / "run.toml").string()}) == cli::kPass);
  CHECK(fs::exists(dir / "run" / "solution.csv"));
  CHECK(fs::exists(dir / "run" / "diagnostics.json"));
  auto manifest = nlohmann::json::parse(read(dir / "run" / "manifest.json"));
  CHECK(manifest["config_hash"] == config_hash(kSmall));
  CHECK(manifest["seed"] == 3);
  CHECK(manifest["config"] == kSmall);
  CHECK(manifest["versions"].contains("eigen"));

  const std::string header = read(dir / "run" / "solution.csv").substr(0, 88);
  CHECK(header.rfind("index,x1,x2,x3,weight_plus,weight_minus,potential,weighted_potential,constraint_slack", 0) == 0);

  CHECK(run_cli({"solve", "--manifest", (dir / "run" / "manifest.json").string(), "--out", (dir / "again").string(),
                 "--quiet"}) == cli::kPass);
  CHECK(read(dir / "run" / "solution.csv") == read(dir / "again" / "solution.csv"));

  CHECK(run_cli({"verify", "--config", (dir / "run.toml").string(), "--solution",
                 (dir / "run" / "solution.csv").string(), "--quiet"}) == cli::kPass);
}

TEST_CASE("solution CSV round trip") {
  RunConfig c = parse_config(kSmall);
  Problem p = build_problem(build_inputs(c));
  Solution s = solve_riesz_via_bridge(p);
  fs::path f = scratch_dir("csv") / "s.csv";
  cli::write_solution_csv(f, p, s.lambda);
  SignedDiscreteMeasure back = cli::read_solution_csv(f, p);
  CHECK(back.plus.weights == s.lambda.plus.weights);
  CHECK(back.minus.weights == s.lambda.minus.weights);
}

TEST_CASE("exit codes") {
  fs::path dir = scratch_dir("cli_codes");
  std::ofstream(dir / "bad.toml") << "[domain]\nkind = \"ball\"\nalpha = 3.0\n";
  CHECK(run_cli({"--quiet", "solve", "--config", (dir / "bad.toml").string()}) == cli::kConfig);
  CHECK(run_cli({"--quiet", "frobnicate"}) == cli::kUsage);
  CHECK(run_cli({"--quiet", "capacity", "--shape", "disc", "--nodes", "300"}) == cli::kPass);
  CHECK(run_cli({"--quiet", "experiment", "counterexample", "--terms", "3", "--nodes-per-disc", "60"}) == cli::kPass);
  CHECK(cli::exit_code_for(ErrorCode::SolverDiverged) == cli::kSolver);
  CHECK(cli::exit_code_for(ErrorCode::ConfigError) == cli::kConfig);
}
