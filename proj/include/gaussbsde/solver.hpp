#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gaussbsde/clock_driver.hpp"
#include "gaussbsde/measures.hpp"
#include "gaussbsde/scenario.hpp"

namespace gaussbsde {

struct SolverConfig {
  int n_time = 64;
  int n_particles = 20000;
  int basis_degree = 4;
  double ridge = 1e-8;
  int picard_max_iter = 20;
  double picard_tol = 1e-3;
  bool antithetic = false;

  /// Checks the static invariants plus the explicit-scheme step bound
  /// ds * L_f <= 0.5 on the variance clock.
  void validate(double lipschitz_f, double total_variance) const;
  bool operator==(const SolverConfig&) const = default;
};

/// Joint samples of (W~, Y~, Z~) on the variance-clock grid; column i holds
/// the particles at s_grid[i].
struct ParticleCloud {
  std::vector<double> s_grid;
  Eigen::MatrixXd w;
  Eigen::MatrixXd y;
  Eigen::MatrixXd z;

  Eigen::Index n_particles() const { return w.rows(); }
  LawFeatures features(Eigen::Index node) const;
};

/// Polynomial representation at one node: sum_k coef[k] He_k(w / scale).
/// A zero scale marks a degenerate (deterministic) state; only coef[0] is used.
struct NodeFit {
  Eigen::VectorXd coef;
  double scale = 0.0;

  double operator()(double w) const;
  Eigen::VectorXd monomial(int degree) const;
};

/// Computable form of the solution: u~(s_i, .) and v~(s_i, .) per node.
struct SolutionField {
  VarianceClock clock;
  std::vector<double> s_grid;
  std::vector<NodeFit> u;
  std::vector<NodeFit> v;
  int basis_degree = 4;
  std::vector<double> picard_log;
  int picard_iterations = 0;

  double u_tilde(std::size_t node, double w) const { return u.at(node)(w); }
  double v_tilde(std::size_t node, double w) const { return v.at(node)(w); }
  /// Coefficients of u~(s_i, .) in the monomial basis of w, length degree + 1.
  Eigen::VectorXd u_monomial(std::size_t node) const { return u.at(node).monomial(basis_degree); }
  Eigen::VectorXd v_monomial(std::size_t node) const { return v.at(node).monomial(basis_degree); }
  /// Index of the node equal to s (to 1e-12 relative), or -1.
  int node_of(double s) const;
};

/// Backward least-squares Monte Carlo for the Brownian auxiliary equation on
/// [0, V_T] with Picard iteration on the law features. Y~_N = g(W~_N); for
/// i = N-1..0 one joint regression of Y~_{i+1} on the basis of W~_i
/// (augmented with the martingale increments dW and dW^2 - ds) yields the
/// conditional mean and Z~_i; then
///   Y~_i = E[Y~_{i+1} | W~_i] + f(U(s_i), W~_i, E[Y~_{i+1} | W~_i], Z~_i, nu_i^(k)) ds.
std::pair<SolutionField, ParticleCloud> solve_auxiliary(const ScenarioSpec& scenario, const VarianceClock& clock,
                                                        const SolverConfig& config, std::uint64_t seed);

/// Clock used for a solve: node set containing the uniform V-grid of the
/// solver so that s_i are clock nodes.
VarianceClock solver_clock(const GaussianDriverSpec& driver, const SolverConfig& config);

struct TransferValue {
  double y = 0.0;
  double z = 0.0;
};

/// (Y_t, Z_t) = (u~(V_t, x), v~(V_t, x)); u~ blends linearly between nodes,
/// v~ is held from the left node.
TransferValue transfer_evaluate(const SolutionField& field, double t, double x);

struct RepresentationEstimate {
  double value = 0.0;           // Y^eps_t
  double std_error = 0.0;       // MC standard error of value
  double determinism_sd = 0.0;  // cross-particle sd of the fitted time-t value
  double v_start = 0.0;         // V_t
  double v_end = 0.0;           // V_{t+eps}
  int picard_iterations = 0;
};

/// Solves the auxiliary problem on [V_t, V_{t+eps}] with terminal
/// y + z (W~_{V_{t+eps}} - W~_{V_t}) and returns the time-t value. The
/// generator must not depend on x pointwise (c1 = 0). Particles are drawn in
/// antithetic pairs.
RepresentationEstimate representation_solve(const ScenarioSpec& scenario, const VarianceClock& clock, double t,
                                            double eps, double y, double z, const SolverConfig& config,
                                            std::uint64_t seed);

}  // namespace gaussbsde
