#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gaussbsde {

/// Equal-weight atoms on the real line.
struct EmpiricalMeasure {
  std::vector<double> atoms;

  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(std::vector<double> a);

  std::size_t size() const { return atoms.size(); }
  double mean() const;
};

struct GaussianLaw1D {
  double mean = 0.0;
  double variance = 1.0;

  double sd() const;
};

/// First (and optionally second) moments of a joint law of (X, Y, Z); the
/// only statistics the generator DSL consumes.
struct LawFeatures {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double mean_z = 0.0;
  double second_x = 0.0;
  double second_y = 0.0;
  double second_z = 0.0;
};

/// W_p between two clouds through the sorted quantile coupling. Clouds of
/// unequal size are subsampled (without replacement, keyed by seed) to the
/// smaller size.
double wasserstein_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p,
                      std::uint64_t seed = 0);

/// Same, on raw spans of equal length.
double wasserstein_1d(std::span<const double> a, std::span<const double> b, double p);

/// Closed-form W_2 between two Gaussians.
double gaussian_w2(const GaussianLaw1D& a, const GaussianLaw1D& b);

/// H(nu | mu). Returns +infinity when mu is degenerate and the laws differ.
double gaussian_kl(const GaussianLaw1D& nu, const GaussianLaw1D& mu);

/// Ent_mu(F) = E[F log F] - E[F] log E[F] under a Gaussian, by composite
/// Simpson quadrature on mean +- 12 sd. A Dirac law is evaluated exactly.
double entropy_functional(const GaussianLaw1D& mu, const std::function<double(double)>& f);

/// Ent_mu(F) under an empirical measure.
double entropy_functional(const EmpiricalMeasure& mu, const std::function<double(double)>& f);

/// Ent of F(x) = exp(lambda x) under N(m, s^2), closed form.
double entropy_of_exponential(const GaussianLaw1D& mu, double lambda);

/// Law functionals of mean type, F(L_xi) = Phi(E[phi(xi)]).
enum class MeanFunctionalKind { Mean, MeanSquared, MeanOfSin, MeanOfTanh, MeanOfClip };

struct MeanFunctional {
  MeanFunctionalKind kind = MeanFunctionalKind::Mean;

  static MeanFunctional from_name(const std::string& name);

  double evaluate(std::span<const double> samples) const;
  /// E< D^L F(L_xi)(xi), eta >.
  double directional_derivative(std::span<const double> xi, std::span<const double> eta) const;
};

struct LionsDirectionalReport {
  std::vector<double> eps;
  std::vector<double> quotients;
  double analytic = 0.0;
  std::vector<double> abs_errors;
  bool converged = false;
};

/// Compares (F(L_{xi + eps eta}) - F(L_xi)) / eps with the analytic
/// directional derivative for each eps. Converged means the errors are
/// non-increasing as eps decreases, or already at round-off.
LionsDirectionalReport lions_directional_check(const MeanFunctional& functional,
                                               std::span<const double> xi,
                                               std::span<const double> eta,
                                               const std::vector<double>& eps_list);

double sample_mean(std::span<const double> x);
double sample_variance(std::span<const double> x);

}  // namespace gaussbsde
