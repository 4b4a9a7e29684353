#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gaussbsde {

enum class DriverKind { Brownian, Fbm, Custom };

std::string to_string(DriverKind kind);
DriverKind driver_kind_from_string(const std::string& name);

/// Covariance model of the centered Gaussian driver X on [0, T].
///
/// For the custom kind the covariance is tabulated on the uniform grid
/// t_k = k T / n, k = 1..n (X_0 = 0 is implicit). Row k of the
/// lower-triangular table holds Cov(X_{t_k}, X_{t_j}) for j <= k.
/// Off-grid covariances are bilinear interpolations of the table.
struct GaussianDriverSpec {
  DriverKind kind = DriverKind::Brownian;
  double hurst = 0.5;
  double horizon = 1.0;
  std::vector<std::vector<double>> custom_table;
  std::string covariance_file;  // provenance only; the table is what counts

  static GaussianDriverSpec brownian(double horizon = 1.0);
  static GaussianDriverSpec fbm(double hurst, double horizon = 1.0);
  static GaussianDriverSpec custom(std::vector<std::vector<double>> table, double horizon = 1.0);

  /// Throws InvalidArgument with a message naming the offending field.
  void validate() const;

  /// Var X_t without going through a clock table.
  double variance(double t) const;

  std::string tag() const;
  bool operator==(const GaussianDriverSpec&) const = default;
};

/// Cov(X_s, X_t). Domain: s, t in [0, T].
double covariance(const GaussianDriverSpec& spec, double s, double t);

/// Covariance matrix on a grid of times.
Eigen::MatrixXd covariance_matrix(const GaussianDriverSpec& spec, const std::vector<double>& grid);

/// Reads a custom covariance table (row i has i+1 comma-separated entries).
std::vector<std::vector<double>> read_covariance_csv(const std::string& path);

/// Tabulated variance clock V and its inverse U, monotone piecewise-linear
/// between nodes.
class VarianceClock {
 public:
  VarianceClock(std::vector<double> grid_t, std::vector<double> grid_v);

  const std::vector<double>& grid_t() const { return grid_t_; }
  const std::vector<double>& grid_v() const { return grid_v_; }
  double horizon() const { return grid_t_.back(); }
  double total_variance() const { return grid_v_.back(); }

  /// V(t); OutOfRange outside [0, T].
  double value(double t) const;
  /// U(s) = inf{r : V(r) >= s}; OutOfRange outside [0, V_T].
  double invert(double s) const;

 private:
  std::vector<double> grid_t_;
  std::vector<double> grid_v_;
};

/// Builds the clock from the driver's diagonal covariance. The node set is
/// a uniform t-grid with n_nodes points; for the analytic kinds it also
/// contains the preimages of a uniform V-grid with n_nodes points, so that
/// uniform variance-time grids are hit exactly.
VarianceClock build_clock(const GaussianDriverSpec& spec, int n_nodes);

double invert_clock(const VarianceClock& clock, double s);

/// Sampled path ensemble. samples(p, j) = X_{grid_t[j]} on path p.
struct PathBatch {
  std::vector<double> grid_t;
  Eigen::MatrixXd samples;
  std::uint64_t seed = 0;
  std::string driver_tag;

  Eigen::Index n_paths() const { return samples.rows(); }
  Eigen::Index n_times() const { return samples.cols(); }
};

/// Exact joint Gaussian sampling on a strictly increasing grid inside (0, T].
/// Path p draws from its own counter-based stream keyed by (seed, p), so the
/// batch is bitwise reproducible. Brownian paths are cumulative sums of
/// independent increments; other kinds use a dense Cholesky factor (one
/// retry with jitter 1e-12 * trace, then CholeskyFailure).
PathBatch sample_paths(const GaussianDriverSpec& spec, const std::vector<double>& grid_t,
                       int n_paths, std::uint64_t seed,
                       std::uint64_t domain = 1 /* rng_domain::kDriverPaths */);

}  // namespace gaussbsde
