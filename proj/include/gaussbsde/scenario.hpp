#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gaussbsde/clock_driver.hpp"
#include "gaussbsde/measures.hpp"

namespace gaussbsde {

/// Fixed library of 1-Lipschitz nonlinearities.
enum class Nonlinearity { None, Sin, Tanh, Clip };

std::string to_string(Nonlinearity phi);
Nonlinearity nonlinearity_from_string(const std::string& name);
double apply(Nonlinearity phi, double v);

/// g(x, mu) = a + b x + c phi(x) + lambda_mean * mean_x(mu)
struct TerminalSpec {
  double a = 0.0;
  double b = 0.0;
  Nonlinearity phi = Nonlinearity::None;
  double c = 0.0;
  double lambda_mean = 0.0;

  double lipschitz() const;
  /// True when g is affine in x (phi absent or zero coefficient).
  bool is_affine() const { return phi == Nonlinearity::None || c == 0.0; }
  bool operator==(const TerminalSpec&) const = default;
};

/// Piecewise-constant time factor: value[k] on [start[k], start[k+1]).
/// An empty table means rho = 1.
struct RhoTable {
  std::vector<double> start;
  std::vector<double> value;

  double operator()(double t) const;
  double sup_abs() const;
  double inf() const;
  bool empty() const { return value.empty(); }
  bool operator==(const RhoTable&) const = default;
};

/// f(t,x,y,z,nu) = rho(t) * (c0 + c1 x + c2 y + c3 z + c4 phi(y)
///                          + kappa_x mean_x + kappa_y mean_y + kappa_z mean_z)
struct GeneratorSpec {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  Nonlinearity phi = Nonlinearity::None;
  double c4 = 0.0;
  double kappa_x = 0.0;
  double kappa_y = 0.0;
  double kappa_z = 0.0;
  RhoTable rho;

  double lipschitz() const;
  /// Bound on the Lions derivative component along the Y-marginal.
  double mean_dependence() const;
  bool law_free() const { return kappa_x == 0.0 && kappa_y == 0.0 && kappa_z == 0.0; }
  bool operator==(const GeneratorSpec&) const = default;
};

struct ScenarioSpec {
  std::string name;
  TerminalSpec terminal;
  GeneratorSpec generator;
  GaussianDriverSpec driver;

  void validate() const;
  bool operator==(const ScenarioSpec&) const = default;
};

/// Short hex digest of the canonical scenario text.
std::string scenario_digest(const ScenarioSpec& spec);

double eval_terminal(const TerminalSpec& spec, double x, const LawFeatures& features);
double eval_generator(const GeneratorSpec& spec, double t, double x, double y, double z,
                      const LawFeatures& features);

struct LipschitzAudit {
  double lf = 0.0;
  double lg = 0.0;
  double k = 0.0;
  double probe_ratio_f = 0.0;
  double probe_ratio_g = 0.0;
  int n_probes = 0;
};

/// Symbolic constants plus a random probe of the Lipschitz ratios over
/// small clouds (W2 of 3-atom clouds is computed by enumerating couplings).
/// ProbeViolation when a probe beats a symbolic constant by more than 1e-9.
LipschitzAudit lipschitz_audit(const ScenarioSpec& spec, int n_probes, std::uint64_t seed);

struct ProbePoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  LawFeatures features;
  double f1 = 0.0;
  double f2 = 0.0;
};

struct OrderProbeResult {
  bool ordered = true;
  std::optional<ProbePoint> counterexample;
};

/// Samples (t,x,y,z,nu) and reports whether f1 <= f2 + 1e-12 everywhere.
OrderProbeResult generator_order_probe(const GeneratorSpec& f1, const GeneratorSpec& f2, int n_probes,
                                       std::uint64_t seed, double horizon = 1.0);

/// Same for terminal functions, g1 <= g2 + 1e-12.
OrderProbeResult terminal_order_probe(const TerminalSpec& g1, const TerminalSpec& g2, int n_probes,
                                      std::uint64_t seed);

/// Component-wise sample moments of a cloud slice at one grid time.
LawFeatures law_features(std::span<const double> x, std::span<const double> y, std::span<const double> z);

/// The five oracle scenarios shipped with the laboratory.
namespace scenarios {
ScenarioSpec identity(const GaussianDriverSpec& driver);           // f = 0, g = x
ScenarioSpec linear_decay(double beta, const GaussianDriverSpec& driver);  // f = -beta y, g = x
ScenarioSpec mean_field(double kappa, double shift, const GaussianDriverSpec& driver);  // f = kappa mean_y, g = x + shift
ScenarioSpec constant_terminal(double c, const GaussianDriverSpec& driver);  // f = 0, g = c
ScenarioSpec sine_terminal(const GaussianDriverSpec& driver);       // f = 0, g = sin(x) + 2x
}  // namespace scenarios

}  // namespace gaussbsde
