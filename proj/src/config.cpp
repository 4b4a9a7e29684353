#include "gaussbsde/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gaussbsde/errors.hpp"

namespace gaussbsde {

using json = nlohmann::json;

namespace {

constexpr std::array<std::pair<ExperimentKind, const char*>, 10> kKindNames{{
    {ExperimentKind::Solve, "solve"},
    {ExperimentKind::WickValidate, "wick_validate"},
    {ExperimentKind::Comparison, "comparison"},
    {ExperimentKind::Representation, "representation"},
    {ExperimentKind::Converse, "converse"},
    {ExperimentKind::Stability, "stability"},
    {ExperimentKind::T2, "t2"},
    {ExperimentKind::Lsi, "lsi"},
    {ExperimentKind::ZBound, "zbound"},
    {ExperimentKind::FullSuite, "full_suite"},
}};

[[noreturn]] void invalid(const std::string& key, const std::string& msg) {
  fail(ErrorKind::ConfigInvalid, key + ": " + msg);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) invalid(path.empty() ? "config" : path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) invalid(join(path, item.key()), "unknown key");
  }
}

double get_number(const json& obj, const std::string& path, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) invalid(join(path, key), "expected a number");
  const double out = v.get<double>();
  if (!std::isfinite(out)) invalid(join(path, key), "expected a finite number");
  return out;
}

long long get_integer(const json& obj, const std::string& path, const char* key, long long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) invalid(join(path, key), "expected an integer");
  return v.get<long long>();
}

int get_int(const json& obj, const std::string& path, const char* key, int fallback) {
  const long long v = get_integer(obj, path, key, fallback);
  if (v < -1000000000LL || v > 1000000000LL) invalid(join(path, key), "integer out of range");
  return static_cast<int>(v);
}

std::string get_string(const json& obj, const std::string& path, const char* key, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) invalid(join(path, key), "expected a string");
  return v.get<std::string>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) invalid(join(path, key), "expected true or false");
  return v.get<bool>();
}

std::vector<double> get_numbers(const json& obj, const std::string& path, const char* key,
                                std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array()) invalid(join(path, key), "expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) invalid(join(path, key), "expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<int> get_ints(const json& obj, const std::string& path, const char* key, std::vector<int> fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array()) invalid(join(path, key), "expected an array of integers");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) invalid(join(path, key), "expected an array of integers");
    out.push_back(e.get<int>());
  }
  return out;
}

Nonlinearity get_phi(const json& obj, const std::string& path) {
  const std::string name = get_string(obj, path, "phi", "none");
  try {
    return nonlinearity_from_string(name);
  } catch (const Error&) {
    invalid(join(path, "phi"), "unknown nonlinearity '" + name + "' (none, sin, tanh, clip)");
  }
}

GaussianDriverSpec parse_driver(const json& obj, const std::string& path, const std::string& base_dir) {
  check_keys(obj, path, {"kind", "hurst", "T", "covariance_file", "covariance_table"});
  GaussianDriverSpec d;
  const std::string kind = get_string(obj, path, "kind", "brownian");
  try {
    d.kind = driver_kind_from_string(kind);
  } catch (const Error&) {
    invalid(join(path, "kind"), "unknown driver kind '" + kind + "' (brownian, fbm, custom)");
  }
  d.hurst = get_number(obj, path, "hurst", 0.5);
  d.horizon = get_number(obj, path, "T", 1.0);
  d.covariance_file = get_string(obj, path, "covariance_file", "");
  if (obj.contains("covariance_table")) {
    const json& t = obj.at("covariance_table");
    if (!t.is_array()) invalid(join(path, "covariance_table"), "expected an array of rows");
    for (const auto& row : t) {
      if (!row.is_array()) invalid(join(path, "covariance_table"), "expected an array of rows");
      std::vector<double> r;
      for (const auto& e : row) {
        if (!e.is_number()) invalid(join(path, "covariance_table"), "expected numbers");
        r.push_back(e.get<double>());
      }
      d.custom_table.push_back(std::move(r));
    }
  }
  if (d.kind == DriverKind::Custom && d.custom_table.empty()) {
    if (d.covariance_file.empty()) invalid(join(path, "covariance_file"), "required for a custom driver");
    std::filesystem::path file(d.covariance_file);
    if (file.is_relative() && !base_dir.empty()) file = std::filesystem::path(base_dir) / file;
    try {
      d.custom_table = read_covariance_csv(file.string());
    } catch (const Error& e) {
      invalid(join(path, "covariance_file"), e.what());
    }
  }
  return d;
}

json emit_driver(const GaussianDriverSpec& d) {
  json j;
  j["kind"] = to_string(d.kind);
  j["T"] = d.horizon;
  if (d.kind == DriverKind::Fbm) j["hurst"] = d.hurst;
  if (d.kind == DriverKind::Custom) {
    if (!d.covariance_file.empty()) {
      j["covariance_file"] = d.covariance_file;
    } else {
      j["covariance_table"] = d.custom_table;
    }
  }
  return j;
}

bool same_driver_text(const GaussianDriverSpec& a, const GaussianDriverSpec& b) {
  return emit_driver(a) == emit_driver(b);
}

ScenarioSpec parse_scenario(const json& obj, const std::string& path, const GaussianDriverSpec& driver,
                            const std::string& base_dir) {
  check_keys(obj, path, {"name", "terminal", "generator", "driver"});
  ScenarioSpec s;
  s.name = get_string(obj, path, "name", "");
  if (s.name.empty()) invalid(join(path, "name"), "scenario needs a name");
  s.driver = obj.contains("driver") ? parse_driver(obj.at("driver"), join(path, "driver"), base_dir) : driver;
  const json empty = json::object();
  {
    const std::string p = join(path, "terminal");
    const json& g = obj.contains("terminal") ? obj.at("terminal") : empty;
    check_keys(g, p, {"a", "b", "phi", "c", "lambda_mean"});
    s.terminal.a = get_number(g, p, "a", 0.0);
    s.terminal.b = get_number(g, p, "b", 0.0);
    s.terminal.phi = get_phi(g, p);
    s.terminal.c = get_number(g, p, "c", 0.0);
    s.terminal.lambda_mean = get_number(g, p, "lambda_mean", 0.0);
  }
  {
    const std::string p = join(path, "generator");
    const json& f = obj.contains("generator") ? obj.at("generator") : empty;
    check_keys(f, p, {"c0", "c1", "c2", "c3", "phi", "c4", "kappa_x", "kappa_y", "kappa_z", "rho_table"});
    auto& gen = s.generator;
    gen.c0 = get_number(f, p, "c0", 0.0);
    gen.c1 = get_number(f, p, "c1", 0.0);
    gen.c2 = get_number(f, p, "c2", 0.0);
    gen.c3 = get_number(f, p, "c3", 0.0);
    gen.phi = get_phi(f, p);
    gen.c4 = get_number(f, p, "c4", 0.0);
    gen.kappa_x = get_number(f, p, "kappa_x", 0.0);
    gen.kappa_y = get_number(f, p, "kappa_y", 0.0);
    gen.kappa_z = get_number(f, p, "kappa_z", 0.0);
    if (f.contains("rho_table")) {
      const json& rt = f.at("rho_table");
      const std::string rp = join(p, "rho_table");
      if (!rt.is_array()) invalid(rp, "expected [[start, value], ...]");
      for (const auto& pair : rt) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
          invalid(rp, "expected [[start, value], ...]");
        }
        gen.rho.start.push_back(pair[0].get<double>());
        gen.rho.value.push_back(pair[1].get<double>());
      }
    }
  }
  return s;
}

json emit_scenario(const ScenarioSpec& s, const GaussianDriverSpec& driver) {
  json j;
  j["name"] = s.name;
  j["terminal"] = {{"a", s.terminal.a},
                   {"b", s.terminal.b},
                   {"phi", to_string(s.terminal.phi)},
                   {"c", s.terminal.c},
                   {"lambda_mean", s.terminal.lambda_mean}};
  const auto& g = s.generator;
  json gen = {{"c0", g.c0},           {"c1", g.c1},           {"c2", g.c2},
              {"c3", g.c3},           {"phi", to_string(g.phi)}, {"c4", g.c4},
              {"kappa_x", g.kappa_x}, {"kappa_y", g.kappa_y}, {"kappa_z", g.kappa_z}};
  if (!g.rho.empty()) {
    json rt = json::array();
    for (std::size_t k = 0; k < g.rho.value.size(); ++k) rt.push_back({g.rho.start[k], g.rho.value[k]});
    gen["rho_table"] = rt;
  }
  j["generator"] = gen;
  if (!same_driver_text(s.driver, driver)) j["driver"] = emit_driver(s.driver);
  return j;
}

ExperimentConfig parse_json(const json& root, const std::string& base_dir) {
  check_keys(root, "", {"kind", "seed", "output_dir", "driver", "solver", "scenarios", "experiment"});
  ExperimentConfig c;
  if (!root.contains("kind")) invalid("kind", "required");
  const std::string kind = get_string(root, "", "kind", "");
  try {
    c.kind = experiment_kind_from_string(kind);
  } catch (const Error& e) {
    invalid("kind", e.what());
  }
  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (!s.is_number_integer() || (s.is_number_integer() && !s.is_number_unsigned() && s.get<long long>() < 0)) {
      invalid("seed", "expected a nonnegative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  c.output_dir = get_string(root, "", "output_dir", c.output_dir);
  const json empty = json::object();
  c.driver = parse_driver(root.contains("driver") ? root.at("driver") : empty, "driver", base_dir);

  const json& sv = root.contains("solver") ? root.at("solver") : empty;
  check_keys(sv, "solver",
             {"n_time", "n_particles", "basis_degree", "ridge", "picard_max_iter", "picard_tol", "antithetic"});
  c.solver.n_time = get_int(sv, "solver", "n_time", c.solver.n_time);
  c.solver.n_particles = get_int(sv, "solver", "n_particles", c.solver.n_particles);
  c.solver.basis_degree = get_int(sv, "solver", "basis_degree", c.solver.basis_degree);
  c.solver.ridge = get_number(sv, "solver", "ridge", c.solver.ridge);
  c.solver.picard_max_iter = get_int(sv, "solver", "picard_max_iter", c.solver.picard_max_iter);
  c.solver.picard_tol = get_number(sv, "solver", "picard_tol", c.solver.picard_tol);
  c.solver.antithetic = get_bool(sv, "solver", "antithetic", c.solver.antithetic);

  if (root.contains("scenarios")) {
    const json& arr = root.at("scenarios");
    if (!arr.is_array()) invalid("scenarios", "expected an array");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      c.scenarios.push_back(parse_scenario(arr[k], "scenarios[" + std::to_string(k) + "]", c.driver, base_dir));
    }
  }

  const json& ex = root.contains("experiment") ? root.at("experiment") : empty;
  const std::string p = "experiment";
  check_keys(ex, p,
             {"scenario", "scenario2", "t_list", "t", "y", "z", "eps_list", "eps", "probes", "shifts", "lambdas", "p",
              "wick_n_time", "wick_n_paths", "residual_n_times", "residual_n_paths"});
  auto& e = c.params;
  e.scenario = get_string(ex, p, "scenario", "");
  e.scenario2 = get_string(ex, p, "scenario2", "");
  e.t_list = get_numbers(ex, p, "t_list", e.t_list);
  e.t = get_number(ex, p, "t", e.t);
  e.y = get_number(ex, p, "y", e.y);
  e.z = get_number(ex, p, "z", e.z);
  e.eps_list = get_numbers(ex, p, "eps_list", e.eps_list);
  e.eps = get_number(ex, p, "eps", e.eps);
  if (ex.contains("probes")) {
    const json& pr = ex.at("probes");
    if (!pr.is_array()) invalid("experiment.probes", "expected [[t, y, z], ...]");
    for (const auto& row : pr) {
      if (!row.is_array() || row.size() != 3) invalid("experiment.probes", "expected [[t, y, z], ...]");
      std::array<double, 3> a{};
      for (std::size_t k = 0; k < 3; ++k) {
        if (!row[k].is_number()) invalid("experiment.probes", "expected numbers");
        a[k] = row[k].get<double>();
      }
      e.probes.push_back(a);
    }
  }
  e.shifts = get_numbers(ex, p, "shifts", e.shifts);
  e.lambdas = get_numbers(ex, p, "lambdas", e.lambdas);
  e.p = get_number(ex, p, "p", e.p);
  e.wick_n_time = get_int(ex, p, "wick_n_time", e.wick_n_time);
  e.wick_n_paths = get_int(ex, p, "wick_n_paths", e.wick_n_paths);
  e.residual_n_times = get_ints(ex, p, "residual_n_times", e.residual_n_times);
  e.residual_n_paths = get_int(ex, p, "residual_n_paths", e.residual_n_paths);
  return c;
}

ExperimentConfig parse_text(const std::string& text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    invalid("config", std::string("not valid JSON: ") + e.what());
  }
  ExperimentConfig c = parse_json(root, base_dir);
  validate_config(c);
  return c;
}

bool needs_pair(ExperimentKind k) {
  return k == ExperimentKind::Comparison || k == ExperimentKind::Converse || k == ExperimentKind::Stability;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "solve";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (const auto& [k, n] : kKindNames) {
    if (name == n) return k;
  }
  fail(ErrorKind::InvalidArgument, "unknown experiment kind '" + name +
                                       "' (solve, wick_validate, comparison, representation, converse, stability, "
                                       "t2, lsi, zbound, full_suite)");
}

ExperimentConfig parse_config(const std::string& text) { return parse_text(text, ""); }

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoFailure, "cannot read config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), std::filesystem::path(path).parent_path().string());
}

std::string emit_config(const ExperimentConfig& c) {
  json root;
  root["kind"] = to_string(c.kind);
  root["seed"] = c.seed;
  root["output_dir"] = c.output_dir;
  root["driver"] = emit_driver(c.driver);
  root["solver"] = {{"n_time", c.solver.n_time},
                    {"n_particles", c.solver.n_particles},
                    {"basis_degree", c.solver.basis_degree},
                    {"ridge", c.solver.ridge},
                    {"picard_max_iter", c.solver.picard_max_iter},
                    {"picard_tol", c.solver.picard_tol},
                    {"antithetic", c.solver.antithetic}};
  json scenarios = json::array();
  for (const auto& s : c.scenarios) scenarios.push_back(emit_scenario(s, c.driver));
  root["scenarios"] = scenarios;
  const auto& e = c.params;
  json probes = json::array();
  for (const auto& pr : e.probes) probes.push_back({pr[0], pr[1], pr[2]});
  root["experiment"] = {{"scenario", e.scenario},
                        {"scenario2", e.scenario2},
                        {"t_list", e.t_list},
                        {"t", e.t},
                        {"y", e.y},
                        {"z", e.z},
                        {"eps_list", e.eps_list},
                        {"eps", e.eps},
                        {"probes", probes},
                        {"shifts", e.shifts},
                        {"lambdas", e.lambdas},
                        {"p", e.p},
                        {"wick_n_time", e.wick_n_time},
                        {"wick_n_paths", e.wick_n_paths},
                        {"residual_n_times", e.residual_n_times},
                        {"residual_n_paths", e.residual_n_paths}};
  return root.dump(2) + "\n";
}

void validate_config(const ExperimentConfig& c) {
  const auto& d = c.driver;
  if (!(d.horizon > 0.0)) invalid("driver.T", "T must be positive");
  if (d.kind == DriverKind::Fbm && !(d.hurst > 0.0 && d.hurst < 1.0)) invalid("driver.hurst", "hurst must be in (0,1)");
  try {
    d.validate();
  } catch (const Error& e) {
    invalid("driver", e.what());
  }

  const auto& s = c.solver;
  if (s.n_time < 2) invalid("solver.n_time", "must be >= 2");
  if (s.basis_degree < 0 || s.basis_degree > 12) invalid("solver.basis_degree", "must be in [0, 12]");
  if (s.n_particles < 10 * (s.basis_degree + 1)) invalid("solver.n_particles", "must be >= 10 (basis_degree + 1)");
  if (!(s.ridge >= 0.0)) invalid("solver.ridge", "must be >= 0");
  if (s.picard_max_iter < 1) invalid("solver.picard_max_iter", "must be >= 1");
  if (!(s.picard_tol > 0.0)) invalid("solver.picard_tol", "must be > 0");

  std::set<std::string> names;
  for (std::size_t k = 0; k < c.scenarios.size(); ++k) {
    const std::string key = "scenarios[" + std::to_string(k) + "]";
    if (!names.insert(c.scenarios[k].name).second) invalid(key + ".name", "duplicate scenario name");
    try {
      c.scenarios[k].validate();
    } catch (const Error& e) {
      invalid(key, e.what());
    }
  }

  const auto& e = c.params;
  const double T = d.horizon;
  auto resolvable = [&](const std::string& key, const std::string& name) {
    try {
      resolve_scenario(c, name);
    } catch (const Error& err) {
      invalid(key, err.what());
    }
  };
  if (!e.scenario.empty()) resolvable("experiment.scenario", e.scenario);
  if (!e.scenario2.empty()) resolvable("experiment.scenario2", e.scenario2);
  if (needs_pair(c.kind)) {
    if (e.scenario.empty()) invalid("experiment.scenario", "required for kind " + to_string(c.kind));
    if (e.scenario2.empty()) invalid("experiment.scenario2", "required for kind " + to_string(c.kind));
  }
  const bool uses_times =
      c.kind == ExperimentKind::T2 || c.kind == ExperimentKind::Lsi || c.kind == ExperimentKind::Comparison;
  if (uses_times) {
    if (e.t_list.empty()) invalid("experiment.t_list", "must not be empty");
    for (double t : e.t_list) {
      if (!(t >= 0.0 && t <= T)) invalid("experiment.t_list", "times must lie in [0, T]");
    }
  }
  if (c.kind == ExperimentKind::Representation) {
    if (!(e.t > 0.0 && e.t < T)) invalid("experiment.t", "must lie in (0, T)");
    if (e.eps_list.empty()) invalid("experiment.eps_list", "must not be empty");
    for (std::size_t k = 0; k < e.eps_list.size(); ++k) {
      if (!(e.eps_list[k] > 0.0)) invalid("experiment.eps_list", "entries must be positive");
      if (k > 0 && !(e.eps_list[k] < e.eps_list[k - 1])) invalid("experiment.eps_list", "entries must decrease");
    }
    if (e.t + e.eps_list.front() > T) invalid("experiment.eps_list", "t + eps must not exceed T");
  }
  if (c.kind == ExperimentKind::Converse) {
    if (!(e.eps > 0.0)) invalid("experiment.eps", "must be positive");
    for (const auto& pr : e.probes) {
      if (!(pr[0] > 0.0 && pr[0] + e.eps <= T)) invalid("experiment.probes", "probe times need 0 < t and t + eps <= T");
    }
  }
  if (!(e.p >= 1.0)) invalid("experiment.p", "must be >= 1");
  if (e.wick_n_time < 4 || e.wick_n_time % 4 != 0) invalid("experiment.wick_n_time", "must be a positive multiple of 4");
  if (e.wick_n_paths < 2) invalid("experiment.wick_n_paths", "must be >= 2");
  if (e.residual_n_times.size() < 2) invalid("experiment.residual_n_times", "needs at least two grids");
  for (int n : e.residual_n_times) {
    if (n < 4 || n % 4 != 0) invalid("experiment.residual_n_times", "grids must be positive multiples of 4");
  }
  if (e.residual_n_paths < 2) invalid("experiment.residual_n_paths", "must be >= 2");
}

ScenarioSpec resolve_scenario(const ExperimentConfig& c, const std::string& name) {
  for (const auto& s : c.scenarios) {
    if (s.name == name) return s;
  }
  if (name == "identity") return scenarios::identity(c.driver);
  if (name == "linear_decay") return scenarios::linear_decay(0.5, c.driver);
  if (name == "mean_field") return scenarios::mean_field(0.3, 1.0, c.driver);
  if (name == "constant_terminal") return scenarios::constant_terminal(1.0, c.driver);
  if (name == "sine_terminal") return scenarios::sine_terminal(c.driver);
  fail(ErrorKind::ConfigInvalid, "unknown scenario '" + name + "'");
}

std::string config_digest(const ExperimentConfig& c) {
  ExperimentConfig located = c;
  located.output_dir.clear();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : emit_config(located)) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gaussbsde
