#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedval/commands.hpp"
#include "fedval/federation.hpp"

using namespace fedval;
namespace fs = std::filesystem;

namespace {

const char* kMinimalConfig = R"({
  "m": 4,
  "m_c": 1,
  "rounds": 2,
  "val_size": 4,
  "seed": 40,
  "defense": {"kind": "crosscheck_acc"},
  "data": {"train_per_client": 12, "test_per_dist": 50},
  "train": {"epochs": 1, "lr": 0.2}
})";

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fedval_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string write_file(const fs::path& dir, const std::string& name,
                       const std::string& body) {
  const fs::path p = dir / name;
  std::ofstream out(p);
  out << body;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing fills defaults and validates") {
  const ExperimentConfig cfg = parse_config(kMinimalConfig);
  CHECK(cfg.m == 4);
  CHECK(cfg.m_c == 1);
  CHECK(cfg.defense.kind == DefenseKind::crosscheck_acc);
  CHECK(cfg.defense.lambda == 1.5);  // per-kind default
  CHECK(cfg.fixed_point.ring_bits == 64);
  CHECK(cfg.fixed_point.frac_bits == 16);
  CHECK(cfg.attack.kind == AttackKind::none);
  CHECK(cfg.attack.grid.min == 1e-5);
  CHECK(cfg.attack.grid.max == 1e-1);
  CHECK(cfg.attack.grid.points == 20);
  CHECK(cfg.layer_dims() == std::vector<int>{2, 2});
}

TEST_CASE("unknown keys are rejected, top-level and nested") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"rounds": 2, "typo_key": 1})"),
                       doctest::Contains("typo_key"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"defense": {"kind": "norm_ball", "lamda": 2}})"),
      doctest::Contains("lamda"), std::invalid_argument);
  CHECK_THROWS(parse_config(R"({"attack": {"lambda_grid": {"mni": 1}}})"));
}

TEST_CASE("invalid values carry the offending field in the diagnostic") {
  CHECK_THROWS_WITH_AS(parse_config(R"({"alpha": -1})"),
                       doctest::Contains("alpha"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config(R"({"m": 0})"), doctest::Contains("m"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      parse_config(R"({"defense": {"kind": "bogus"}})"),
      doctest::Contains("bogus"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      parse_config(
          R"({"m": 4, "m_c": 2, "defense": {"kind": "crosscheck_acc"}})"),
      doctest::Contains("2*m_c+1"), std::invalid_argument);
}

TEST_CASE("serialize-parse round trip reaches a canonical fixed point") {
  const ExperimentConfig cfg = parse_config(kMinimalConfig);
  const std::string once = serialize_config(cfg);
  const std::string twice = serialize_config(parse_config(once));
  CHECK(once == twice);
}

TEST_CASE("cmd_run writes one metrics row per round, deterministically") {
  const fs::path dir = scratch_dir("run");
  CliOptions opts;
  opts.config_path = write_file(dir, "cfg.json", kMinimalConfig);
  opts.out_dir = (dir / "out1").string();
  REQUIRE(cmd_run(opts) == 0);

  const std::string csv1 = slurp(dir / "out1" / "metrics.csv");
  std::size_t lines = std::count(csv1.begin(), csv1.end(), '\n');
  CHECK(lines == 3);  // header + 2 rounds
  CHECK(csv1.rfind(metrics_csv_header(), 0) == 0);

  opts.out_dir = (dir / "out2").string();
  REQUIRE(cmd_run(opts) == 0);
  CHECK(slurp(dir / "out2" / "metrics.csv") == csv1);  // byte-identical
  fs::remove_all(dir);
}

TEST_CASE("cmd_run reports a missing config") {
  CliOptions opts;
  opts.config_path = "/nonexistent/config.json";
  std::ostringstream captured;
  auto* old = std::cerr.rdbuf(captured.rdbuf());
  const int rc = cmd_run(opts);
  std::cerr.rdbuf(old);
  CHECK(rc != 0);
  CHECK(captured.str().find("config not found") != std::string::npos);
}

TEST_CASE("cmd_run rejects a config with a bad field, naming it") {
  const fs::path dir = scratch_dir("badcfg");
  CliOptions opts;
  opts.config_path = write_file(dir, "bad.json", R"({"val_size": 0})");
  std::ostringstream captured;
  auto* old = std::cerr.rdbuf(captured.rdbuf());
  const int rc = cmd_run(opts);
  std::cerr.rdbuf(old);
  CHECK(rc != 0);
  CHECK(captured.str().find("val_size") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("debug scores dump has the documented schema") {
  const fs::path dir = scratch_dir("scores");
  CliOptions opts;
  opts.config_path = write_file(dir, "cfg.json", kMinimalConfig);
  opts.out_dir = (dir / "out").string();
  opts.debug_scores = true;
  REQUIRE(cmd_run(opts) == 0);
  const std::string csv = slurp(dir / "out" / "scores.csv");
  CHECK(csv.rfind("round,client,validator_slot,score,norm_bit,topk_bit,"
                  "accepted",
                  0) == 0);
  // 2 rounds x 4 clients x committee of 3
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 4 * 3);
  fs::remove_all(dir);
}

TEST_CASE("sweep cells equal standalone runs with the same seeds") {
  const fs::path dir = scratch_dir("sweep");
  const std::string sweep_json = std::string(R"({
    "base": )") + kMinimalConfig + R"(,
    "sweep": {
      "defenses": ["fedavg_plain", "crosscheck_acc"],
      "attacks": ["none", "sign_flip"],
      "seeds": [40, 41]
    }
  })";
  CliOptions opts;
  opts.config_path = write_file(dir, "sweep.json", sweep_json);
  opts.out_dir = (dir / "out").string();
  REQUIRE(cmd_sweep(opts) == 0);

  const std::string csv = slurp(dir / "out" / "sweep.csv");
  CHECK(csv.rfind("defense,none,sign_flip,min_across_attacks", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);  // header + 2 rows

  // reproduce one cell by hand
  const SweepConfig sweep = load_sweep(opts.config_path);
  double want = 0.0;
  for (uint64_t seed : sweep.seeds) {
    want += run_experiment(sweep_cell_config(sweep, DefenseKind::fedavg_plain,
                                             AttackKind::sign_flip, seed))
                .final_accuracy;
  }
  want /= 2.0;
  char cell[32];
  std::snprintf(cell, sizeof(cell), "%.6f", want);
  CHECK(csv.find(cell) != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("bench writes the ledger with per-subprotocol rows") {
  const fs::path dir = scratch_dir("bench");
  CliOptions opts;
  opts.config_path = write_file(dir, "cfg.json", kMinimalConfig);
  opts.out_dir = (dir / "out").string();
  REQUIRE(cmd_bench(opts) == 0);
  const std::string csv = slurp(dir / "out" / "ledger.csv");
  CHECK(csv.rfind("subprotocol,invocations,bytes,rounds", 0) == 0);
  CHECK(csv.find("sec_inf") != std::string::npos);
  CHECK(csv.find("share") != std::string::npos);
  CHECK(csv.find("sort") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("seed override changes the run") {
  const fs::path dir = scratch_dir("seed");
  CliOptions opts;
  opts.config_path = write_file(dir, "cfg.json", kMinimalConfig);
  opts.out_dir = (dir / "a").string();
  REQUIRE(cmd_run(opts) == 0);
  opts.out_dir = (dir / "b").string();
  opts.seed = 99;
  REQUIRE(cmd_run(opts) == 0);
  CHECK(slurp(dir / "a" / "metrics.csv") != slurp(dir / "b" / "metrics.csv"));
  fs::remove_all(dir);
}
