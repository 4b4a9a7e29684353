#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gaussbsde/clock_driver.hpp"
#include "gaussbsde/scenario.hpp"
#include "gaussbsde/solver.hpp"

namespace gaussbsde {

/// Cameron-Martin direction h(t) = int_0^t hdot dV with a piecewise-constant
/// density: density[k] on [breakpoints[k], breakpoints[k+1]), the last piece
/// running to T. breakpoints[0] must be 0.
struct StepFunctionH {
  std::vector<double> breakpoints;
  std::vector<double> density;

  void validate() const;
  double density_at(double t) const;
  /// h(t), integrated against the exact variance function of the driver.
  double at(const GaussianDriverSpec& driver, double t) const;
};

/// Polynomial integrand v(t_i, .) at the nodes t_0 = 0 < ... < t_N; entries
/// exist for i < N. Coefficients are monomial in x.
struct FirstChaosIntegrand {
  std::vector<double> grid_t;
  std::vector<Eigen::VectorXd> coefficients;
  std::vector<Eigen::VectorXd> derivative;

  /// Same polynomial at every node.
  static FirstChaosIntegrand polynomial(std::vector<double> grid_t, const Eigen::VectorXd& monomial);
  /// v(t_i, x) = v~(V_{t_i}, x), held from the left clock node.
  static FirstChaosIntegrand from_field(const SolutionField& field, std::vector<double> grid_t);
};

/// p(X_{t_i}) * dX - p'(X_{t_i}) * (cov_cross - var_ti) per path.
/// DegenerateIncrement when the increments carry no variance.
Eigen::VectorXd wick_product_first_chaos(const Eigen::VectorXd& monomial, std::span<const double> x_samples,
                                         std::span<const double> increment_samples, double cov_cross,
                                         double var_ti);

/// Riemann-Wick sums over the cells of the path grid. The path grid must equal
/// integrand.grid_t without its leading 0 (X_0 = 0); GridMismatch otherwise.
Eigen::VectorXd riemann_wick_integral(const FirstChaosIntegrand& integrand, const PathBatch& paths,
                                      const GaussianDriverSpec& driver);

struct ResidualStats {
  std::vector<double> grid_t;  // 0 followed by the path grid
  std::vector<double> mean;
  std::vector<double> rms;
  std::vector<double> mean_se;
  std::vector<double> rms_se;
};

/// R_t = u(t, X_t) - g(X_T) - sum f dV + sum v wick dX over [t, T], per grid time.
ResidualStats bsde_residual(const SolutionField& field, const ScenarioSpec& scenario, const PathBatch& paths);

/// Samples of exp(I_h - Var(I_h) / 2) where I_h is the first-chaos variable on
/// the path grid with Cov(I_h, X_{t_k}) = h(t_k). Var(I_h) uses the exact
/// covariance matrix.
struct WickExponential {
  Eigen::VectorXd samples;
  double variance = 0.0;
};

WickExponential wick_exponential(const StepFunctionH& h, const PathBatch& paths, const GaussianDriverSpec& driver);

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// E[eta e^{wick h}] with its standard error.
McEstimate s_transform_mc(std::span<const double> eta, const WickExponential& exponential);

struct FactorizationCheck {
  double lhs = 0.0;          // S(p(X_ti) wick dX)(h)
  double lhs_se = 0.0;
  double rhs = 0.0;          // S(p(X_ti))(h) * S(dX)(h)
  double rhs_se = 0.0;
  double difference = 0.0;   // paired estimate of lhs - rhs
  double difference_se = 0.0;
  bool pass = false;         // |difference| <= 3 difference_se
};

/// Compares both sides of the S-transform factorization on paired samples;
/// S(dX)(h) = h(t_next) - h(t_i) is exact. col_i = -1 stands for t = 0.
FactorizationCheck factorization_check(const Eigen::VectorXd& monomial, const PathBatch& paths, int col_i,
                                       int col_next, const StepFunctionH& h, const WickExponential& exponential,
                                       const GaussianDriverSpec& driver);

}  // namespace gaussbsde
