// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when all pass.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gaussbsde/errors.hpp"
#include "gaussbsde/experiment.hpp"
#include "gaussbsde/theorem_lab.hpp"

using namespace gaussbsde;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

SolverConfig desk_config() {
  SolverConfig c;
  c.n_time = 64;
  c.n_particles = 20000;
  return c;
}

void report_failures(Outcome& out, const TheoremReport& r) {
  if (r.pass) return;
  for (const auto& m : r.measurements) {
    if (m.asserted && !m.pass) out.detail << " [" << r.theorem << ": " << m.name << " = " << m.value << "]";
  }
}

void identity_transfer(Outcome& out) {
  for (const auto& d : {GaussianDriverSpec::brownian(), GaussianDriverSpec::fbm(0.7)}) {
    const SolverConfig c = desk_config();
    const auto [field, cloud] = solve_auxiliary(scenarios::identity(d), solver_clock(d, c), c, 101);
    double worst_y = 0.0, worst_z = 0.0;
    for (double t : {0.0, 0.5 * d.horizon, d.horizon}) {
      const double sd = std::sqrt(d.variance(t));
      for (int k = 0; k <= 40; ++k) {
        const double x = sd * (-2.3263478740408408 + 2.0 * 2.3263478740408408 * k / 40.0);
        const TransferValue v = transfer_evaluate(field, t, x);
        worst_y = std::max(worst_y, std::abs(v.y - x) / (1.0 + std::abs(x)));
        worst_z = std::max(worst_z, std::abs(v.z - 1.0));
      }
    }
    out.detail << ' ' << d.tag() << ": max|Y-x|/(1+|x|)=" << worst_y << " max|Z-1|=" << worst_z;
    out.expect(worst_y <= 0.02 && worst_z <= 0.02, d.tag());
  }
}

void linear_oracle(Outcome& out) {
  const auto d = GaussianDriverSpec::brownian();
  const SolverConfig c = desk_config();
  for (double c2 : {-0.5, 0.5}) {
    auto s = scenarios::linear_decay(0.5, d);
    s.generator.c2 = c2;
    const auto [field, cloud] = solve_auxiliary(s, solver_clock(d, c), c, 202);
    double worst = 0.0;
    for (std::size_t i = 0; i < field.s_grid.size(); ++i) {
      const double expect = std::exp(c2 * (field.s_grid.back() - field.s_grid[i]));
      const Eigen::VectorXd u = field.u_monomial(i);
      double gap = std::abs(u(1) - expect);
      for (Eigen::Index k = 0; k < u.size(); ++k) {
        if (k != 1) gap = std::max(gap, std::abs(u(k)));
      }
      worst = std::max(worst, gap / expect);
    }
    const TheoremReport zb = z_bound_check(field, cloud, s);
    out.detail << " c2=" << c2 << ": max rel coef err=" << worst << " z-margin=" << zb.find("min margin")->value;
    out.expect(worst <= 0.02, "coefficients c2=" + std::to_string(c2));
    out.expect(zb.pass && zb.find("min margin")->value > 0.0, "z_bound");
  }
}

void mean_field(Outcome& out) {
  const auto d = GaussianDriverSpec::brownian();
  const TheoremReport r = mean_field_oracle(scenarios::mean_field(0.3, 1.0, d), desk_config(), 303);
  out.detail << " max|mean-oracle|/SE=" << r.find("max |mean Y - oracle| / SE")->value
             << " Picard=" << r.find("Picard iterations")->value;
  report_failures(out, r);
  out.expect(r.pass, "mean_field_oracle");
}

void wick_layer(Outcome& out) {
  for (const auto& d : {GaussianDriverSpec::brownian(), GaussianDriverSpec::fbm(0.7)}) {
    const TheoremReport r = wick_validation(d, {128, 100000}, 404);
    report_failures(out, r);
    out.expect(r.pass, "wick " + d.tag());
  }
  const auto b = GaussianDriverSpec::brownian();
  const TheoremReport res = residual_refinement(scenarios::linear_decay(0.5, b), desk_config(), {32, 64, 128}, 20000, 405);
  report_failures(out, res);
  out.expect(res.pass, "residual refinement");
  if (const Measurement* m = res.find("RMS R n_time=128 t=0")) out.detail << " RMS(t=0,n=128)=" << m->value;
}

void comparison(Outcome& out) {
  const auto d = GaussianDriverSpec::brownian();
  const SolverConfig c = desk_config();
  const std::vector<double> ts{0.0, 0.25, 0.5, 0.75, 1.0};
  const auto zero = scenarios::identity(d);
  auto one = zero;
  one.generator.c0 = 1.0;
  const TheoremReport a = comparison_check(zero, one, c, ts, 505);
  report_failures(out, a);
  out.expect(a.pass, "f1=0 vs f2=1");
  const TheoremReport b = comparison_check(scenarios::mean_field(0.3, 0.0, d), scenarios::mean_field(0.3, 1.0, d), c, ts, 506);
  report_failures(out, b);
  out.expect(b.pass, "g2=g1+1 mean field");
  auto bad = scenarios::mean_field(0.3, 0.0, d);
  bad.generator.kappa_z = 0.5;
  bool refused = false;
  try {
    comparison_check(bad, scenarios::mean_field(0.3, 1.0, d), c, ts, 507);
  } catch (const Error& e) {
    refused = e.kind() == ErrorKind::HypothesisUnsatisfied;
  }
  out.expect(refused, "kappa_z refusal");
  out.detail << " refusal=" << (refused ? "HypothesisUnsatisfied" : "missing");
}

void representation(Outcome& out) {
  auto s = scenarios::identity(GaussianDriverSpec::brownian());
  s.generator.c2 = -1.0;
  s.generator.kappa_y = 0.3;
  const TheoremReport r = representation_limit_check(s, 0.25, 1.0, 0.5, {0.2, 0.1, 0.05}, desk_config(), 606);
  for (const char* eps : {"0.2", "0.1", "0.05"}) {
    if (const Measurement* m = r.find(std::string("|A-B_dV| eps=") + eps)) out.detail << " |A-B|(" << eps << ")=" << m->value;
  }
  if (const Measurement* m = r.find("|A-f| eps=0.05")) out.detail << " |A-f|=" << m->value;
  report_failures(out, r);
  out.expect(r.pass, "representation");
}

void converse(Outcome& out) {
  const auto d = GaussianDriverSpec::brownian();
  const auto f1 = scenarios::mean_field(0.2, 0.0, d);
  auto f2 = f1;
  f2.generator.c0 = 0.1;
  const auto probes = default_probe_grid(1.0);
  const TheoremReport r = converse_comparison_check(f1, f2, desk_config(), probes, 0.05, 707);
  const bool observed = r.find("hypothesis_observed")->value == 1.0;
  out.detail << " probes=" << probes.size() << " Y-ordering observed=" << (observed ? "yes" : "no");
  report_failures(out, r);
  out.expect(probes.size() == 9, "nine probes");
  out.expect(observed, "Y ordering");
  out.expect(r.pass, "generator ordering");
}

void inequalities(Outcome& out) {
  const auto d = GaussianDriverSpec::brownian();
  for (double lambda : {1.0, 0.5}) {
    auto s = scenarios::identity(d);
    s.terminal.b = lambda;
    for (double t : {0.5, 1.0}) {
      const TheoremReport t2 = t2_check(s, t, {0.0, 0.5, 1.0, 2.0});
      const TheoremReport lsi = lsi_check(s, t, {0.0, 0.5, 1.0, 2.0});
      report_failures(out, t2);
      report_failures(out, lsi);
      out.expect(t2.pass && !t2.report_only, "t2");
      out.expect(lsi.pass && !lsi.report_only, "lsi");
      if (t == 1.0 && lambda == 1.0) {
        const double ratio = t2.find("sharp ratio 2 sigma_t^2 / C_Tr_Y")->value;
        out.detail << " sharp ratio at T=" << ratio;
        out.expect(std::abs(ratio - 1.0) <= 1e-10, "equality at t=T");
      }
    }
  }
  const InequalityConstants c = transport_constants(1.0, 0.0, 1.0, 0.0);
  out.detail << " C_Tr_Y=" << c.c_tr_y << " C_LS=" << c.c_ls_y;
  out.expect(c.c_tr_y == 2.0 && c.c_ls_y == 2.0, "constants");
  out.expect(transport_constants_report(1.0, 0.0, 1.0, 0.0, 1.0).pass, "transport report");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void determinism(Outcome& out) {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::FullSuite;
  cfg.seed = 20240611;
  const fs::path root = fs::temp_directory_path() / "gaussbsde_acceptance";
  fs::remove_all(root);
  std::vector<RunResult> runs;
  for (const char* leg : {"a", "b"}) {
    cfg.output_dir = (root / leg).string();
    runs.push_back(run_experiment(cfg, nullptr));
  }
  out.detail << " exit codes " << runs[0].exit_code << "," << runs[1].exit_code << " reports=" << runs[0].artifacts.size();
  for (const auto& a : runs[0].artifacts) {
    if (!a.report.report_only && !a.report.pass) report_failures(out, a.report);
  }
  out.expect(runs[0].exit_code == 0 && runs[1].exit_code == 0, "full suite exit code");
  out.expect(runs[0].artifacts.size() >= 8, "report count");
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(root / "a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), root / "a");
    if (rel == "timings.json") continue;
    ++compared;
    out.expect(slurp(entry.path()) == slurp(root / "b" / rel), "bytes differ: " + rel.string());
  }
  out.expect(compared > 0 && fs::exists(root / "a" / "manifest.json"), "manifest present");
  out.detail << " files compared=" << compared;
}

void equivariance(Outcome& out) {
  auto s = scenarios::sine_terminal(GaussianDriverSpec::fbm(0.25));
  s.generator.c2 = -0.5;
  s.generator.rho = RhoTable{{0.0, 0.3, 0.7}, {1.0, 0.5, 1.5}};
  const TheoremReport r = clock_equivariance(s, desk_config(), 1010);
  out.detail << " coef gap=" << r.find("max coefficient difference")->value;
  report_failures(out, r);
  out.expect(r.pass, "clock equivariance");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"1 identity transfer", identity_transfer},
      {"2 linear oracle and Z bound", linear_oracle},
      {"3 mean-field oracle", mean_field},
      {"4 Wick layer and residual refinement", wick_layer},
      {"5 comparison", comparison},
      {"6 representation", representation},
      {"7 converse comparison", converse},
      {"8 functional inequalities", inequalities},
      {"9 determinism of full_suite", determinism},
      {"10 clock equivariance", equivariance},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      run(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!out.pass) ++failures;
    std::printf("%s criterion %s (%.1fs):%s\n", out.pass ? "PASS" : "FAIL", name.c_str(), secs, out.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
