#include "gaussbsde/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "gaussbsde/errors.hpp"
#include "gaussbsde/rng.hpp"

namespace gaussbsde {

std::string to_string(Nonlinearity phi) {
  switch (phi) {
    case Nonlinearity::None: return "none";
    case Nonlinearity::Sin: return "sin";
    case Nonlinearity::Tanh: return "tanh";
    case Nonlinearity::Clip: return "clip";
  }
  return "none";
}

Nonlinearity nonlinearity_from_string(const std::string& name) {
  if (name == "none") return Nonlinearity::None;
  if (name == "sin") return Nonlinearity::Sin;
  if (name == "tanh") return Nonlinearity::Tanh;
  if (name == "clip") return Nonlinearity::Clip;
  fail(ErrorKind::InvalidArgument, "phi must be one of none, sin, tanh, clip (got '" + name + "')");
}

double apply(Nonlinearity phi, double v) {
  switch (phi) {
    case Nonlinearity::None: return 0.0;
    case Nonlinearity::Sin: return std::sin(v);
    case Nonlinearity::Tanh: return std::tanh(v);
    case Nonlinearity::Clip: return std::clamp(v, -1.0, 1.0);
  }
  return 0.0;
}

double TerminalSpec::lipschitz() const {
  return std::abs(b) + (phi == Nonlinearity::None ? 0.0 : std::abs(c)) + std::abs(lambda_mean);
}

double RhoTable::operator()(double t) const {
  if (value.empty()) return 1.0;
  const auto it = std::upper_bound(start.begin(), start.end(), t);
  if (it == start.begin()) return value.front();
  return value[static_cast<std::size_t>(it - start.begin()) - 1];
}

double RhoTable::sup_abs() const {
  if (value.empty()) return 1.0;
  double m = 0.0;
  for (double v : value) m = std::max(m, std::abs(v));
  return m;
}

double RhoTable::inf() const {
  if (value.empty()) return 1.0;
  return *std::min_element(value.begin(), value.end());
}

double GeneratorSpec::lipschitz() const {
  const double phi_term = phi == Nonlinearity::None ? 0.0 : std::abs(c4);
  return rho.sup_abs() * (std::abs(c1) + std::abs(c2) + std::abs(c3) + phi_term + std::abs(kappa_x) +
                          std::abs(kappa_y) + std::abs(kappa_z));
}

double GeneratorSpec::mean_dependence() const { return rho.sup_abs() * std::abs(kappa_y); }

void ScenarioSpec::validate() const {
  driver.validate();
  auto finite = [](double v) { return std::isfinite(v); };
  const auto& g = terminal;
  const auto& f = generator;
  for (double v : {g.a, g.b, g.c, g.lambda_mean}) {
    require(finite(v), ErrorKind::InvalidArgument, "terminal coefficients must be finite");
  }
  for (double v : {f.c0, f.c1, f.c2, f.c3, f.c4, f.kappa_x, f.kappa_y, f.kappa_z}) {
    require(finite(v), ErrorKind::InvalidArgument, "generator coefficients must be finite");
  }
  require(f.rho.start.size() == f.rho.value.size(), ErrorKind::InvalidArgument,
          "rho_table needs one start time per value");
  for (std::size_t k = 0; k < f.rho.start.size(); ++k) {
    require(finite(f.rho.value[k]), ErrorKind::InvalidArgument, "rho_table values must be finite");
    require(k == 0 ? f.rho.start[0] == 0.0 : f.rho.start[k] > f.rho.start[k - 1], ErrorKind::InvalidArgument,
            "rho_table starts must begin at 0 and increase");
  }
}

std::string scenario_digest(const ScenarioSpec& spec) {
  std::ostringstream text;
  text.precision(17);
  const auto& g = spec.terminal;
  const auto& f = spec.generator;
  text << spec.name << '|' << g.a << ',' << g.b << ',' << to_string(g.phi) << ',' << g.c << ',' << g.lambda_mean
       << '|' << f.c0 << ',' << f.c1 << ',' << f.c2 << ',' << f.c3 << ',' << to_string(f.phi) << ',' << f.c4 << ','
       << f.kappa_x << ',' << f.kappa_y << ',' << f.kappa_z;
  for (std::size_t k = 0; k < f.rho.value.size(); ++k) text << ';' << f.rho.start[k] << ':' << f.rho.value[k];
  text << '|' << spec.driver.tag();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text.str()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

double eval_terminal(const TerminalSpec& spec, double x, const LawFeatures& features) {
  return spec.a + spec.b * x + spec.c * apply(spec.phi, x) + spec.lambda_mean * features.mean_x;
}

double eval_generator(const GeneratorSpec& spec, double t, double x, double y, double z,
                      const LawFeatures& features) {
  const double base = spec.c0 + spec.c1 * x + spec.c2 * y + spec.c3 * z + spec.c4 * apply(spec.phi, y) +
                      spec.kappa_x * features.mean_x + spec.kappa_y * features.mean_y +
                      spec.kappa_z * features.mean_z;
  return spec.rho(t) * base;
}

namespace {

using Atom = std::array<double, 3>;
using Cloud = std::array<Atom, 3>;

// Optimal coupling of two equal-weight 3-atom clouds is a permutation.
double cloud_w2(const Cloud& a, const Cloud& b) {
  std::array<int, 3> perm{0, 1, 2};
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int i = 0; i < 3; ++i) {
      for (int d = 0; d < 3; ++d) {
        const double diff = a[i][d] - b[perm[i]][d];
        cost += diff * diff;
      }
    }
    best = std::min(best, cost / 3.0);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::sqrt(best);
}

LawFeatures cloud_features(const Cloud& c) {
  LawFeatures f;
  for (const auto& atom : c) {
    f.mean_x += atom[0] / 3.0;
    f.mean_y += atom[1] / 3.0;
    f.mean_z += atom[2] / 3.0;
  }
  return f;
}

Cloud random_cloud(CounterRng& rng, double scale) {
  Cloud c{};
  for (auto& atom : c) {
    for (auto& v : atom) v = scale * rng.normal();
  }
  return c;
}

}  // namespace

LipschitzAudit lipschitz_audit(const ScenarioSpec& spec, int n_probes, std::uint64_t seed) {
  spec.validate();
  LipschitzAudit audit;
  audit.lf = spec.generator.lipschitz();
  audit.lg = spec.terminal.lipschitz();
  audit.k = spec.generator.mean_dependence();
  audit.n_probes = n_probes;
  CounterRng rng(stream_key(seed, rng_domain::kProbe, 0));
  for (int p = 0; p < n_probes; ++p) {
    const double scale = p % 2 == 0 ? 1.0 : 5.0;
    const double t = rng.uniform() * spec.driver.horizon;
    const double x1 = scale * rng.normal(), y1 = scale * rng.normal(), z1 = scale * rng.normal();
    const double x2 = scale * rng.normal(), y2 = scale * rng.normal(), z2 = scale * rng.normal();
    const Cloud nu1 = random_cloud(rng, scale);
    const Cloud nu2 = random_cloud(rng, scale);
    const double df = std::abs(eval_generator(spec.generator, t, x1, y1, z1, cloud_features(nu1)) -
                               eval_generator(spec.generator, t, x2, y2, z2, cloud_features(nu2)));
    const double dist = std::abs(x1 - x2) + std::abs(y1 - y2) + std::abs(z1 - z2) + cloud_w2(nu1, nu2);
    if (dist > 0.0) audit.probe_ratio_f = std::max(audit.probe_ratio_f, df / dist);

    std::array<double, 3> mu1{}, mu2{};
    for (auto& v : mu1) v = scale * rng.normal();
    for (auto& v : mu2) v = scale * rng.normal();
    LawFeatures m1, m2;
    m1.mean_x = (mu1[0] + mu1[1] + mu1[2]) / 3.0;
    m2.mean_x = (mu2[0] + mu2[1] + mu2[2]) / 3.0;
    const double dg = std::abs(eval_terminal(spec.terminal, x1, m1) - eval_terminal(spec.terminal, x2, m2));
    const double dist_g = std::abs(x1 - x2) + wasserstein_1d(mu1, mu2, 2.0);
    if (dist_g > 0.0) audit.probe_ratio_g = std::max(audit.probe_ratio_g, dg / dist_g);
  }
  if (audit.probe_ratio_f > audit.lf + 1e-9) {
    fail(ErrorKind::ProbeViolation, "generator probe ratio " + std::to_string(audit.probe_ratio_f) +
                                        " exceeds symbolic L_f " + std::to_string(audit.lf));
  }
  if (audit.probe_ratio_g > audit.lg + 1e-9) {
    fail(ErrorKind::ProbeViolation, "terminal probe ratio " + std::to_string(audit.probe_ratio_g) +
                                        " exceeds symbolic L_g " + std::to_string(audit.lg));
  }
  return audit;
}

OrderProbeResult generator_order_probe(const GeneratorSpec& f1, const GeneratorSpec& f2, int n_probes,
                                       std::uint64_t seed, double horizon) {
  OrderProbeResult result;
  CounterRng rng(stream_key(seed, rng_domain::kProbe, 1));
  for (int p = 0; p < n_probes; ++p) {
    ProbePoint pt;
    pt.t = rng.uniform() * horizon;
    pt.x = 2.0 * rng.normal();
    pt.y = 2.0 * rng.normal();
    pt.z = 2.0 * rng.normal();
    pt.features.mean_x = 2.0 * rng.normal();
    pt.features.mean_y = 2.0 * rng.normal();
    pt.features.mean_z = 2.0 * rng.normal();
    pt.f1 = eval_generator(f1, pt.t, pt.x, pt.y, pt.z, pt.features);
    pt.f2 = eval_generator(f2, pt.t, pt.x, pt.y, pt.z, pt.features);
    if (pt.f1 > pt.f2 + 1e-12) {
      result.ordered = false;
      result.counterexample = pt;
      return result;
    }
  }
  return result;
}

OrderProbeResult terminal_order_probe(const TerminalSpec& g1, const TerminalSpec& g2, int n_probes,
                                      std::uint64_t seed) {
  OrderProbeResult result;
  CounterRng rng(stream_key(seed, rng_domain::kProbe, 2));
  for (int p = 0; p < n_probes; ++p) {
    ProbePoint pt;
    pt.x = 2.0 * rng.normal();
    pt.features.mean_x = 2.0 * rng.normal();
    pt.f1 = eval_terminal(g1, pt.x, pt.features);
    pt.f2 = eval_terminal(g2, pt.x, pt.features);
    if (pt.f1 > pt.f2 + 1e-12) {
      result.ordered = false;
      result.counterexample = pt;
      return result;
    }
  }
  return result;
}

LawFeatures law_features(std::span<const double> x, std::span<const double> y, std::span<const double> z) {
  require(!x.empty() && x.size() == y.size() && y.size() == z.size(), ErrorKind::EmptyCloud,
          "law features need a nonempty cloud with matching components");
  LawFeatures f;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    f.mean_x += x[i];
    f.mean_y += y[i];
    f.mean_z += z[i];
    f.second_x += x[i] * x[i];
    f.second_y += y[i] * y[i];
    f.second_z += z[i] * z[i];
  }
  f.mean_x /= n;
  f.mean_y /= n;
  f.mean_z /= n;
  f.second_x /= n;
  f.second_y /= n;
  f.second_z /= n;
  return f;
}

namespace scenarios {

ScenarioSpec identity(const GaussianDriverSpec& driver) {
  ScenarioSpec s;
  s.name = "identity";
  s.terminal.b = 1.0;
  s.driver = driver;
  return s;
}

ScenarioSpec linear_decay(double beta, const GaussianDriverSpec& driver) {
  ScenarioSpec s;
  s.name = "linear_decay";
  s.terminal.b = 1.0;
  s.generator.c2 = -beta;
  s.driver = driver;
  return s;
}

ScenarioSpec mean_field(double kappa, double shift, const GaussianDriverSpec& driver) {
  ScenarioSpec s;
  s.name = "mean_field";
  s.terminal.a = shift;
  s.terminal.b = 1.0;
  s.generator.kappa_y = kappa;
  s.driver = driver;
  return s;
}

ScenarioSpec constant_terminal(double c, const GaussianDriverSpec& driver) {
  ScenarioSpec s;
  s.name = "constant_terminal";
  s.terminal.a = c;
  s.driver = driver;
  return s;
}

ScenarioSpec sine_terminal(const GaussianDriverSpec& driver) {
  ScenarioSpec s;
  s.name = "sine_terminal";
  s.terminal.b = 2.0;
  s.terminal.phi = Nonlinearity::Sin;
  s.terminal.c = 1.0;
  s.driver = driver;
  return s;
}

}  // namespace scenarios

}  // namespace gaussbsde
