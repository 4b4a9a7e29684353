#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gaussbsde/config.hpp"
#include "gaussbsde/theorem_lab.hpp"

namespace gaussbsde {

inline constexpr const char* kArtifactVersion = "1.0.0";

struct SeriesRow {
  double t = 0.0;
  double v_t = 0.0;
  std::string x_quantile_tag;
  double y = 0.0;
  double z = 0.0;
};

struct ReportArtifact {
  std::string stem;
  TheoremReport report;
  std::vector<SeriesRow> series;
};

/// Runs the configured experiment(s) and returns the reports in a fixed order.
std::vector<ReportArtifact> execute_experiment(const ExperimentConfig& config, std::ostream* progress = nullptr);

/// Solution series at the solver nodes: x at the 1, 10, 25, 50, 75, 90, 99
/// percent quantiles of N(0, V_t).
std::vector<SeriesRow> solution_series(const SolutionField& field);

/// Report JSON with sorted keys and floats rounded to 12 significant digits.
std::string report_json(const TheoremReport& report);
double round12(double v);

/// Writes reports/<stem>.json, series/<stem>.csv and measurements.csv.
/// Returns the relative paths written. IoFailure on write errors.
std::vector<std::string> emit_report(const std::vector<ReportArtifact>& artifacts, const std::string& out_dir);

/// 0 when every non-informational report passes, 2 otherwise.
int exit_code_for(const std::vector<ReportArtifact>& artifacts);

struct RunResult {
  int exit_code = 1;
  std::string out_dir;
  std::vector<ReportArtifact> artifacts;
  std::string error;
};

/// Full run: config, experiments, reports, manifest.json (written last) and
/// timings.json. Exit code 0 when every asserted check passes, 2 when one
/// fails, 1 on configuration or runtime errors (no manifest is written).
RunResult run_experiment(const std::string& config_path, const std::optional<std::string>& out_dir,
                         const std::optional<std::uint64_t>& seed, std::ostream* progress);

RunResult run_experiment(ExperimentConfig config, std::ostream* progress);

}  // namespace gaussbsde
