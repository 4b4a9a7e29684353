#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gaussbsde/clock_driver.hpp"
#include "gaussbsde/scenario.hpp"
#include "gaussbsde/solver.hpp"

namespace gaussbsde {

enum class ExperimentKind { Solve, WickValidate, Comparison, Representation, Converse, Stability, T2, Lsi, ZBound, FullSuite };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

/// Kind-specific parameters; unused ones keep their defaults.
struct ExperimentParams {
  std::string scenario;
  std::string scenario2;
  std::vector<double> t_list{0.0, 0.25, 0.5, 0.75, 1.0};
  double t = 0.25;
  double y = 1.0;
  double z = 0.5;
  std::vector<double> eps_list{0.2, 0.1, 0.05};
  double eps = 0.05;
  std::vector<std::array<double, 3>> probes;  // (t, y, z); empty means the default 3 x 3 grid
  std::vector<double> shifts{0.0, 0.5, 1.0, 2.0};
  std::vector<double> lambdas{0.0, 0.5, 1.0, 2.0};
  double p = 1.0;
  int wick_n_time = 128;
  int wick_n_paths = 100000;
  std::vector<int> residual_n_times{32, 64, 128};
  int residual_n_paths = 20000;

  bool operator==(const ExperimentParams&) const = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Solve;
  std::uint64_t seed = 20240611;
  std::string output_dir = "gaussbsde_out";
  GaussianDriverSpec driver;
  SolverConfig solver;
  std::vector<ScenarioSpec> scenarios;
  ExperimentParams params;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses the JSON config text. ConfigInvalid names the offending key.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON form; parse_config(emit_config(c)) == c.
std::string emit_config(const ExperimentConfig& config);

/// Schema and cross-reference checks; ConfigInvalid names the offending key.
void validate_config(const ExperimentConfig& config);

/// Config-defined scenario by name, else the shipped pack bound to the
/// config driver: identity, linear_decay, mean_field, constant_terminal,
/// sine_terminal.
ScenarioSpec resolve_scenario(const ExperimentConfig& config, const std::string& name);

/// FNV-1a digest of the canonical config text, ignoring output_dir.
std::string config_digest(const ExperimentConfig& config);

}  // namespace gaussbsde
