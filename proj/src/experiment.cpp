#include "gaussbsde/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gaussbsde/errors.hpp"
#include "gaussbsde/rng.hpp"

namespace gaussbsde {

using json = nlohmann::json;
namespace fs = std::filesystem;

double round12(double v) {
  if (!std::isfinite(v) || v == 0.0) return v == 0.0 ? 0.0 : v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

namespace {

std::string fmt12(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", round12(v));
  return buf;
}

json number(double v) {
  if (!std::isfinite(v)) return json(nullptr);
  return json(round12(v));
}

std::uint64_t derived_seed(std::uint64_t seed, std::uint64_t index) { return stream_key(seed, 0x5eed, index); }

ScenarioSpec named(ScenarioSpec s, const std::string& name) {
  s.name = name;
  return s;
}

struct Runner {
  const ExperimentConfig& config;
  std::ostream* progress;
  std::vector<ReportArtifact> out;

  template <class Fn>
  void add(const std::string& stem, Fn&& fn) {
    if (progress) *progress << "running " << stem << "..." << std::endl;
    const auto start = std::chrono::steady_clock::now();
    ReportArtifact artifact = fn();
    artifact.stem = stem;
    artifact.report.runtime_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    out.push_back(std::move(artifact));
  }

  ReportArtifact solve(const ScenarioSpec& s, std::uint64_t seed) {
    const VarianceClock clock = solver_clock(s.driver, config.solver);
    const auto [field, cloud] = solve_auxiliary(s, clock, config.solver, seed);
    return {"", solve_report(s, field, cloud, seed), solution_series(field)};
  }

  ReportArtifact zbound(const ScenarioSpec& s, std::uint64_t seed) {
    const VarianceClock clock = solver_clock(s.driver, config.solver);
    const auto [field, cloud] = solve_auxiliary(s, clock, config.solver, seed);
    TheoremReport r = z_bound_check(field, cloud, s);
    r.seed = seed;
    return {"", std::move(r), solution_series(field)};
  }

  std::vector<ConverseProbe> probes() const {
    if (config.params.probes.empty()) return default_probe_grid(config.driver.horizon);
    std::vector<ConverseProbe> out_probes;
    for (const auto& p : config.params.probes) out_probes.push_back({p[0], p[1], p[2]});
    return out_probes;
  }

  std::string label(double t) const {
    std::ostringstream s;
    s << t;
    return s.str();
  }

  void single() {
    const auto& e = config.params;
    const std::uint64_t seed = config.seed;
    auto pick = [&](const std::string& name, const char* fallback) {
      return resolve_scenario(config, name.empty() ? std::string(fallback) : name);
    };
    switch (config.kind) {
      case ExperimentKind::Solve: {
        const ScenarioSpec s = pick(e.scenario, "identity");
        add("solve_" + s.name, [&] { return solve(s, seed); });
        break;
      }
      case ExperimentKind::WickValidate: {
        add("wick_validate", [&] {
          return ReportArtifact{"", wick_validation(config.driver, {e.wick_n_time, e.wick_n_paths}, seed), {}};
        });
        const ScenarioSpec s = pick(e.scenario, "linear_decay");
        add("bsde_residual_" + s.name, [&] {
          return ReportArtifact{
              "", residual_refinement(s, config.solver, e.residual_n_times, e.residual_n_paths, seed), {}};
        });
        break;
      }
      case ExperimentKind::Comparison: {
        const ScenarioSpec a = pick(e.scenario, "");
        const ScenarioSpec b = pick(e.scenario2, "");
        add("comparison", [&] { return ReportArtifact{"", comparison_check(a, b, config.solver, e.t_list, seed), {}}; });
        break;
      }
      case ExperimentKind::Representation: {
        const ScenarioSpec s = pick(e.scenario, "mean_field");
        add("representation", [&] {
          return ReportArtifact{"", representation_limit_check(s, e.t, e.y, e.z, e.eps_list, config.solver, seed), {}};
        });
        break;
      }
      case ExperimentKind::Converse: {
        const ScenarioSpec a = pick(e.scenario, "");
        const ScenarioSpec b = pick(e.scenario2, "");
        add("converse", [&] {
          return ReportArtifact{"", converse_comparison_check(a, b, config.solver, probes(), e.eps, seed), {}};
        });
        break;
      }
      case ExperimentKind::Stability: {
        const ScenarioSpec a = pick(e.scenario, "");
        const ScenarioSpec b = pick(e.scenario2, "");
        add("stability", [&] { return ReportArtifact{"", stability_check(a, b, config.solver, seed), {}}; });
        break;
      }
      case ExperimentKind::T2:
      case ExperimentKind::Lsi: {
        const ScenarioSpec s = pick(e.scenario, "identity");
        const bool t2 = config.kind == ExperimentKind::T2;
        for (std::size_t k = 0; k < e.t_list.size(); ++k) {
          const double t = e.t_list[k];
          add(std::string(t2 ? "t2" : "lsi") + "_" + std::to_string(k), [&] {
            TheoremReport r = t2 ? t2_check(s, t, e.shifts) : lsi_check(s, t, e.lambdas);
            r.notes.push_back("t = " + label(t));
            return ReportArtifact{"", std::move(r), {}};
          });
        }
        break;
      }
      case ExperimentKind::ZBound: {
        const ScenarioSpec s = pick(e.scenario, "linear_decay");
        add("zbound_" + s.name, [&] { return zbound(s, seed); });
        break;
      }
      case ExperimentKind::FullSuite:
        suite();
        break;
    }
  }

  void suite() {
    const auto& d = config.driver;
    const auto& cfg = config.solver;
    const auto& e = config.params;
    const double T = d.horizon;
    const std::uint64_t seed = config.seed;
    std::uint64_t index = 0;
    auto next_seed = [&] { return derived_seed(seed, index++); };

    const ScenarioSpec identity = scenarios::identity(d);
    const ScenarioSpec decay = scenarios::linear_decay(0.5, d);
    const ScenarioSpec mean_field = scenarios::mean_field(0.3, 1.0, d);

    add("solve_identity", [&, s = next_seed()] { return solve(identity, s); });
    add("zbound_linear_decay", [&, s = next_seed()] { return zbound(decay, s); });
    add("mean_field_oracle", [&, s = next_seed()] {
      return ReportArtifact{"", mean_field_oracle(mean_field, cfg, s), {}};
    });
    add("wick_validate", [&, s = next_seed()] {
      return ReportArtifact{"", wick_validation(d, {e.wick_n_time, e.wick_n_paths}, s), {}};
    });
    add("bsde_residual_linear_decay", [&, s = next_seed()] {
      return ReportArtifact{"", residual_refinement(decay, cfg, e.residual_n_times, e.residual_n_paths, s), {}};
    });

    ScenarioSpec unit = named(identity, "constant_generator_one");
    unit.generator.c0 = 1.0;
    add("comparison_constant_generator", [&, s = next_seed()] {
      return ReportArtifact{"", comparison_check(identity, unit, cfg, e.t_list, s), {}};
    });
    const ScenarioSpec mf0 = named(scenarios::mean_field(0.3, 0.0, d), "mean_field_shift0");
    add("comparison_mean_field", [&, s = next_seed()] {
      return ReportArtifact{"", comparison_check(mf0, mean_field, cfg, e.t_list, s), {}};
    });
    add("comparison_hypothesis_gate", [&, s = next_seed()] {
      ScenarioSpec bad = named(mean_field, "mean_field_z");
      bad.generator.kappa_z = 0.5;
      TheoremReport r;
      r.theorem = "comparison_hypothesis_gate";
      r.scenario_digest = scenario_digest(bad);
      r.seed = s;
      bool refused = false;
      try {
        comparison_check(bad, bad, cfg, e.t_list, s);
      } catch (const Error& err) {
        refused = err.kind() == ErrorKind::HypothesisUnsatisfied;
        r.notes.push_back(err.what());
      }
      r.assert_that("refused with HypothesisUnsatisfied", refused ? 1.0 : 0.0, 1.0, refused);
      return ReportArtifact{"", std::move(r), {}};
    });

    ScenarioSpec rep = named(identity, "representation_linear");
    rep.generator.c2 = -1.0;
    rep.generator.kappa_y = 0.3;
    add("representation", [&, s = next_seed()] {
      return ReportArtifact{"", representation_limit_check(rep, 0.25 * T, 1.0, 0.5, {0.2 * T, 0.1 * T, 0.05 * T}, cfg, s),
                            {}};
    });

    const ScenarioSpec f1 = named(scenarios::mean_field(0.2, 0.0, d), "converse_f1");
    ScenarioSpec f2 = named(f1, "converse_f2");
    f2.generator.c0 = 0.1;
    add("converse", [&, s = next_seed()] {
      return ReportArtifact{"", converse_comparison_check(f1, f2, cfg, default_probe_grid(T), 0.05 * T, s), {}};
    });

    const ScenarioSpec shifted = named(scenarios::mean_field(0.3, 0.5, d), "mean_field_shift05");
    add("stability", [&, s = next_seed()] { return ReportArtifact{"", stability_check(mf0, shifted, cfg, s), {}}; });

    add("transport_constants", [&] { return ReportArtifact{"", transport_constants_report(1.0, 0.0, 1.0, 0.0, 1.0), {}}; });
    add("t2_terminal", [&] { return ReportArtifact{"", t2_check(identity, T, e.shifts), {}}; });
    add("t2_half", [&] { return ReportArtifact{"", t2_check(identity, 0.5 * T, e.shifts), {}}; });
    add("lsi_terminal", [&] { return ReportArtifact{"", lsi_check(identity, T, e.lambdas), {}}; });
    add("lsi_quarter", [&] { return ReportArtifact{"", lsi_check(identity, 0.25 * T, e.lambdas), {}}; });

    ScenarioSpec equi = named(scenarios::sine_terminal(GaussianDriverSpec::fbm(0.25, 1.0)), "equivariance_fbm");
    equi.generator.c2 = -0.5;
    equi.generator.rho = RhoTable{{0.0, 0.3, 0.7}, {1.0, 0.5, 1.5}};
    add("clock_equivariance", [&, s = next_seed()] { return ReportArtifact{"", clock_equivariance(equi, cfg, s), {}}; });
  }
};

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::IoFailure, "cannot write '" + path.string() + "'");
  out << content;
  out.flush();
  if (!out) fail(ErrorKind::IoFailure, "write failed for '" + path.string() + "'");
}

}  // namespace

int exit_code_for(const std::vector<ReportArtifact>& artifacts) {
  for (const auto& a : artifacts) {
    if (!a.report.report_only && !a.report.pass) return 2;
  }
  return 0;
}

std::vector<ReportArtifact> execute_experiment(const ExperimentConfig& config, std::ostream* progress) {
  validate_config(config);
  Runner runner{config, progress, {}};
  runner.single();
  return std::move(runner.out);
}

std::vector<SeriesRow> solution_series(const SolutionField& field) {
  static const std::array<std::pair<const char*, double>, 7> kQuantiles{{{"q01", -2.3263478740408408},
                                                                          {"q10", -1.2815515655446004},
                                                                          {"q25", -0.6744897501960817},
                                                                          {"q50", 0.0},
                                                                          {"q75", 0.6744897501960817},
                                                                          {"q90", 1.2815515655446004},
                                                                          {"q99", 2.3263478740408408}}};
  std::vector<SeriesRow> rows;
  for (std::size_t i = 0; i < field.s_grid.size(); ++i) {
    const double s = field.s_grid[i];
    const double t = field.clock.invert(s);
    for (const auto& [tag, q] : kQuantiles) {
      const double x = std::sqrt(s) * q;
      rows.push_back({t, s, tag, field.u_tilde(i, x), field.v_tilde(i, x)});
    }
  }
  return rows;
}

std::string report_json(const TheoremReport& report) {
  json j;
  j["theorem"] = report.theorem;
  j["scenario_digest"] = report.scenario_digest;
  j["pass"] = report.report_only ? json(nullptr) : json(report.pass);
  j["report_only"] = report.report_only;
  j["seed"] = report.seed;
  j["evidence_note"] = report.notes;
  json measurements = json::array();
  json tolerances = json::array();
  for (const auto& m : report.measurements) {
    json row;
    row["name"] = m.name;
    row["value"] = number(m.value);
    row["std_error"] = m.std_error ? number(*m.std_error) : json(nullptr);
    row["tolerance"] = m.tolerance ? number(*m.tolerance) : json(nullptr);
    row["asserted"] = m.asserted;
    row["pass"] = m.pass;
    measurements.push_back(row);
    if (m.tolerance) tolerances.push_back({{"name", m.name}, {"value", number(*m.tolerance)}});
  }
  j["measurements"] = measurements;
  j["tolerances"] = tolerances;
  return j.dump(2) + "\n";
}

std::vector<std::string> emit_report(const std::vector<ReportArtifact>& artifacts, const std::string& out_dir) {
  require(!artifacts.empty(), ErrorKind::InvalidArgument, "no reports to emit");
  const fs::path root(out_dir);
  std::error_code ec;
  fs::create_directories(root / "reports", ec);
  if (ec) fail(ErrorKind::IoFailure, "cannot create '" + (root / "reports").string() + "': " + ec.message());
  fs::create_directories(root / "series", ec);
  if (ec) fail(ErrorKind::IoFailure, "cannot create '" + (root / "series").string() + "': " + ec.message());

  std::vector<std::string> written;
  std::ostringstream flat;
  flat << "report,name,value,std_error,tolerance,asserted,pass\n";
  for (const auto& a : artifacts) {
    const std::string rel = "reports/" + a.stem + ".json";
    write_file(root / rel, report_json(a.report));
    written.push_back(rel);
    if (!a.series.empty()) {
      std::ostringstream csv;
      csv << "t,V_t,x_quantile_tag,Y,Z\n";
      for (const auto& r : a.series) {
        csv << fmt12(r.t) << ',' << fmt12(r.v_t) << ',' << r.x_quantile_tag << ',' << fmt12(r.y) << ','
            << fmt12(r.z) << '\n';
      }
      const std::string srel = "series/" + a.stem + ".csv";
      write_file(root / srel, csv.str());
      written.push_back(srel);
    }
    for (const auto& m : a.report.measurements) {
      flat << a.stem << ",\"" << m.name << "\"," << fmt12(m.value) << ','
           << (m.std_error ? fmt12(*m.std_error) : "") << ',' << (m.tolerance ? fmt12(*m.tolerance) : "") << ','
           << (m.asserted ? "true" : "false") << ',' << (m.pass ? "true" : "false") << '\n';
    }
  }
  write_file(root / "measurements.csv", flat.str());
  written.push_back("measurements.csv");
  return written;
}

RunResult run_experiment(ExperimentConfig config, std::ostream* progress) {
  RunResult result;
  result.out_dir = config.output_dir;
  try {
    result.artifacts = execute_experiment(config, progress);
    const fs::path root(config.output_dir);
    std::error_code ec;
    fs::remove(root / "manifest.json", ec);
    const std::vector<std::string> files = emit_report(result.artifacts, config.output_dir);

    const bool ok = exit_code_for(result.artifacts) == 0;
    json timings;
    json manifest;
    manifest["artifact_version"] = kArtifactVersion;
    manifest["config_digest"] = config_digest(config);
    manifest["kind"] = to_string(config.kind);
    manifest["seed"] = config.seed;
    json reports = json::array();
    for (const auto& a : result.artifacts) {
      json entry;
      entry["name"] = a.stem;
      entry["theorem"] = a.report.theorem;
      entry["path"] = "reports/" + a.stem + ".json";
      entry["pass"] = a.report.report_only ? json(nullptr) : json(a.report.pass);
      if (!a.series.empty()) entry["series"] = "series/" + a.stem + ".csv";
      reports.push_back(entry);
      timings[a.stem] = a.report.runtime_ms;
    }
    manifest["reports"] = reports;
    manifest["files"] = files;
    manifest["timings_path"] = "timings.json";
    manifest["all_pass"] = ok;
    manifest["exit_code"] = ok ? 0 : 2;
    write_file(root / "timings.json", json{{"runtime_ms", timings}}.dump(2) + "\n");
    write_file(root / "manifest.json", manifest.dump(2) + "\n");
    result.exit_code = ok ? 0 : 2;
  } catch (const Error& e) {
    result.error = std::string(to_string(e.kind())) + ": " + e.what();
    result.exit_code = 1;
  } catch (const std::exception& e) {
    result.error = std::string("runtime failure: ") + e.what();
    result.exit_code = 1;
  }
  return result;
}

RunResult run_experiment(const std::string& config_path, const std::optional<std::string>& out_dir,
                         const std::optional<std::uint64_t>& seed, std::ostream* progress) {
  ExperimentConfig config;
  try {
    config = load_config(config_path);
  } catch (const Error& e) {
    RunResult r;
    r.error = std::string(to_string(e.kind())) + ": " + e.what();
    return r;
  }
  if (out_dir) config.output_dir = *out_dir;
  if (seed) config.seed = *seed;
  return run_experiment(std::move(config), progress);
}

}  // namespace gaussbsde
