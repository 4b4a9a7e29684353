#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gaussbsde/config.hpp"
#include "gaussbsde/errors.hpp"
#include "gaussbsde/experiment.hpp"

using namespace gaussbsde;
namespace fs = std::filesystem;

namespace {
const char* kSolveConfig = R"({
  "kind": "solve",
  "seed": 11,
  "driver": {"kind": "fbm", "hurst": 0.7, "T": 1.0},
  "solver": {"n_time": 16, "n_particles": 2000, "basis_degree": 3},
  "scenarios": [
    {"name": "tilted", "terminal": {"b": 1.0, "phi": "tanh", "c": 0.5},
     "generator": {"c2": -0.2, "rho_table": [[0.0, 1.0], [0.5, 2.0]]}}
  ],
  "experiment": {"scenario": "tilted"}
})";

std::string message_of(const std::string& text) {
  try {
    validate_config(parse_config(text));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ConfigInvalid);
    return e.what();
  }
  FAIL("expected ConfigInvalid");
  return {};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gaussbsde_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}
}  // namespace

TEST_CASE("config round trip through the canonical emitter") {
  const ExperimentConfig a = parse_config(kSolveConfig);
  CHECK(a.kind == ExperimentKind::Solve);
  CHECK(a.driver.hurst == 0.7);
  REQUIRE(a.scenarios.size() == 1);
  CHECK(a.scenarios[0].terminal.phi == Nonlinearity::Tanh);
  CHECK(a.scenarios[0].generator.rho.value == std::vector<double>{1.0, 2.0});
  const ExperimentConfig b = parse_config(emit_config(a));
  CHECK(a == b);
  CHECK(emit_config(a) == emit_config(b));
  CHECK(config_digest(a) == config_digest(b));
  ExperimentConfig moved = a;
  moved.output_dir = "elsewhere";
  CHECK(config_digest(moved) == config_digest(a));
  moved.seed = 12;
  CHECK(config_digest(moved) != config_digest(a));
  const ScenarioSpec s = resolve_scenario(a, "tilted");
  CHECK(s.driver.kind == DriverKind::Fbm);
  CHECK(resolve_scenario(a, "linear_decay").generator.c2 == -0.5);
}

TEST_CASE("shipped oracle pack spells out the built-in scenarios") {
  const ExperimentConfig pack = load_config(std::string(GAUSSBSDE_SOURCE_DIR) + "/scenarios/oracle_pack.json");
  REQUIRE(pack.scenarios.size() == 5);
  const auto& d = pack.driver;
  const std::vector<ScenarioSpec> builtin{scenarios::identity(d), scenarios::linear_decay(0.5, d),
                                          scenarios::mean_field(0.3, 1.0, d), scenarios::constant_terminal(1.0, d),
                                          scenarios::sine_terminal(d)};
  for (const auto& b : builtin) CHECK(pack.scenarios.at(&b - builtin.data()) == b);
}

TEST_CASE("validation messages name the offending field") {
  std::string bad = kSolveConfig;
  bad.replace(bad.find("0.7"), 3, "1.5");
  const std::string msg = message_of(bad);
  CHECK(msg.find("hurst must be in (0,1)") != std::string::npos);
  CHECK(msg.find("driver.hurst") != std::string::npos);

  std::string unknown = kSolveConfig;
  unknown.replace(unknown.find("\"seed\""), 6, "\"sede\"");
  CHECK(message_of(unknown).find("sede") != std::string::npos);

  std::string typed = kSolveConfig;
  typed.replace(typed.find("16"), 2, "\"16\"");
  CHECK(message_of(typed).find("n_time") != std::string::npos);

  std::string missing = kSolveConfig;
  missing.replace(missing.find("\"tilted\"}"), 8, "\"nowhere\"");
  CHECK(message_of(missing).find("nowhere") != std::string::npos);

  std::string comparison = kSolveConfig;
  comparison.replace(comparison.find("\"solve\""), 7, "\"comparison\"");
  CHECK(message_of(comparison).find("scenario2") != std::string::npos);

  CHECK_THROWS_AS(parse_config("{not json"), Error);
}

TEST_CASE("report JSON rounds floats to 12 significant digits") {
  CHECK(round12(0.1234567890123456) == 0.123456789012);
  TheoremReport r;
  r.theorem = "demo";
  r.record("x", 1.0 / 3.0);
  r.runtime_ms = 12.5;
  const std::string text = report_json(r);
  CHECK(text.find("0.333333333333") != std::string::npos);
  CHECK(text.find("0.3333333333333") == std::string::npos);
  CHECK(text.find("runtime") == std::string::npos);
}

TEST_CASE("emit_report is deterministic and rejects empty input") {
  TheoremReport r;
  r.theorem = "demo";
  r.record("x", 2.0);
  const std::vector<ReportArtifact> arts{{"demo", r, {{0.0, 0.0, "q50", 1.0, 2.0}}}};
  const fs::path a = scratch("emit_a");
  const fs::path b = scratch("emit_b");
  const auto files_a = emit_report(arts, a.string());
  const auto files_b = emit_report(arts, b.string());
  CHECK(files_a == files_b);
  for (const auto& f : files_a) {
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK_THROWS_AS(emit_report({}, scratch("emit_empty").string()), Error);
}

TEST_CASE("exit codes") {
  TheoremReport ok;
  TheoremReport bad;
  bad.assert_that("x", 1.0, 0.0, false);
  TheoremReport info = bad;
  info.report_only = true;
  CHECK(exit_code_for({{"a", ok, {}}}) == 0);
  CHECK(exit_code_for({{"a", ok, {}}, {"b", bad, {}}}) == 2);
  CHECK(exit_code_for({{"a", ok, {}}, {"c", info, {}}}) == 0);
}

TEST_CASE("run_experiment writes a manifest only on success") {
  std::string bad = kSolveConfig;
  bad.replace(bad.find("0.7"), 3, "1.5");
  const fs::path bad_dir = scratch("run_bad");
  const fs::path bad_cfg = fs::temp_directory_path() / "gaussbsde_test_bad.json";
  std::ofstream(bad_cfg) << bad;
  const RunResult failed = run_experiment(bad_cfg.string(), bad_dir.string(), std::nullopt, nullptr);
  CHECK(failed.exit_code == 1);
  CHECK(failed.error.find("hurst") != std::string::npos);
  CHECK_FALSE(fs::exists(bad_dir / "manifest.json"));

  const fs::path good_dir = scratch("run_good");
  const fs::path good_cfg = fs::temp_directory_path() / "gaussbsde_test_good.json";
  std::ofstream(good_cfg) << kSolveConfig;
  const RunResult done = run_experiment(good_cfg.string(), good_dir.string(), std::nullopt, nullptr);
  CHECK(done.exit_code == 0);
  REQUIRE(fs::exists(good_dir / "manifest.json"));
  const std::string manifest = slurp(good_dir / "manifest.json");
  CHECK(manifest.find("\"all_pass\": true") != std::string::npos);
  CHECK(fs::exists(good_dir / "reports" / "solve_tilted.json"));
  CHECK(fs::exists(good_dir / "series" / "solve_tilted.csv"));
  CHECK(fs::exists(good_dir / "timings.json"));
}
