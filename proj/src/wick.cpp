#include "gaussbsde/wick.hpp"

#include <algorithm>
#include <cmath>

#include "gaussbsde/errors.hpp"
#include "gaussbsde/parallel.hpp"
#include "gaussbsde/regression.hpp"

namespace gaussbsde {

void StepFunctionH::validate() const {
  require(!breakpoints.empty() && breakpoints.size() == density.size(), ErrorKind::InvalidArgument,
          "step function needs one density value per breakpoint");
  require(breakpoints.front() == 0.0, ErrorKind::InvalidArgument, "step function must start at 0");
  for (std::size_t k = 1; k < breakpoints.size(); ++k) {
    require(breakpoints[k] > breakpoints[k - 1], ErrorKind::InvalidArgument,
            "step function breakpoints must increase");
  }
}

double StepFunctionH::density_at(double t) const {
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
  const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, it - breakpoints.begin() - 1));
  return density[k];
}

double StepFunctionH::at(const GaussianDriverSpec& driver, double t) const {
  double acc = 0.0;
  for (std::size_t k = 0; k < breakpoints.size() && breakpoints[k] < t; ++k) {
    const double hi = k + 1 < breakpoints.size() ? std::min(t, breakpoints[k + 1]) : t;
    acc += density[k] * (driver.variance(hi) - driver.variance(breakpoints[k]));
  }
  return acc;
}

FirstChaosIntegrand FirstChaosIntegrand::polynomial(std::vector<double> grid_t, const Eigen::VectorXd& monomial) {
  require(grid_t.size() >= 2, ErrorKind::GridMismatch, "integrand grid needs two nodes");
  FirstChaosIntegrand out;
  out.grid_t = std::move(grid_t);
  out.coefficients.assign(out.grid_t.size() - 1, monomial);
  out.derivative.assign(out.grid_t.size() - 1, polyder(monomial));
  return out;
}

FirstChaosIntegrand FirstChaosIntegrand::from_field(const SolutionField& field, std::vector<double> grid_t) {
  require(grid_t.size() >= 2, ErrorKind::GridMismatch, "integrand grid needs two nodes");
  FirstChaosIntegrand out;
  out.grid_t = std::move(grid_t);
  for (std::size_t i = 0; i + 1 < out.grid_t.size(); ++i) {
    const double s = field.clock.value(out.grid_t[i]);
    int node = field.node_of(s);
    if (node < 0) {
      const auto it = std::upper_bound(field.s_grid.begin(), field.s_grid.end(), s);
      node = static_cast<int>(it - field.s_grid.begin()) - 1;
    }
    node = std::clamp(node, 0, static_cast<int>(field.s_grid.size()) - 1);
    Eigen::VectorXd coef = field.v_monomial(static_cast<std::size_t>(node));
    out.derivative.push_back(polyder(coef));
    out.coefficients.push_back(std::move(coef));
  }
  return out;
}

Eigen::VectorXd wick_product_first_chaos(const Eigen::VectorXd& monomial, std::span<const double> x_samples,
                                         std::span<const double> increment_samples, double cov_cross,
                                         double var_ti) {
  require(x_samples.size() == increment_samples.size(), ErrorKind::InvalidArgument,
          "Wick product needs paired samples");
  const double inc_var = sample_variance(increment_samples);
  if (!(inc_var > 0.0)) fail(ErrorKind::DegenerateIncrement, "increment has zero variance");
  const Eigen::VectorXd deriv = polyder(monomial);
  const double correction = cov_cross - var_ti;
  Eigen::VectorXd out(static_cast<Eigen::Index>(x_samples.size()));
  for (std::size_t p = 0; p < x_samples.size(); ++p) {
    out(static_cast<Eigen::Index>(p)) =
        polyval(monomial, x_samples[p]) * increment_samples[p] - polyval(deriv, x_samples[p]) * correction;
  }
  return out;
}

namespace {

void check_grid(const FirstChaosIntegrand& integrand, const PathBatch& paths) {
  const auto& g = integrand.grid_t;
  bool ok = g.size() == paths.grid_t.size() + 1 && g.front() == 0.0 &&
            integrand.coefficients.size() + 1 == g.size() && integrand.derivative.size() + 1 == g.size();
  for (std::size_t j = 0; ok && j < paths.grid_t.size(); ++j) {
    ok = std::abs(g[j + 1] - paths.grid_t[j]) <= 1e-12 * std::max(1.0, paths.grid_t[j]);
  }
  if (!ok) fail(ErrorKind::GridMismatch, "integrand grid does not match the path grid");
}

// Per-path Wick increments v(t_i, X_i) wick dX_i, one column per cell.
Eigen::MatrixXd wick_cells(const FirstChaosIntegrand& integrand, const PathBatch& paths,
                           const GaussianDriverSpec& driver) {
  check_grid(integrand, paths);
  const Eigen::Index n = paths.n_paths();
  const Eigen::Index cells = paths.n_times();
  std::vector<double> correction(static_cast<std::size_t>(cells));
  for (Eigen::Index i = 0; i < cells; ++i) {
    const double ti = integrand.grid_t[static_cast<std::size_t>(i)];
    const double tn = integrand.grid_t[static_cast<std::size_t>(i) + 1];
    correction[static_cast<std::size_t>(i)] = covariance(driver, ti, tn) - driver.variance(ti);
  }
  Eigen::MatrixXd out(n, cells);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
    for (std::size_t pp = begin; pp < end; ++pp) {
      const auto p = static_cast<Eigen::Index>(pp);
      double prev = 0.0;
      for (Eigen::Index i = 0; i < cells; ++i) {
        const double next = paths.samples(p, i);
        const auto k = static_cast<std::size_t>(i);
        out(p, i) = polyval(integrand.coefficients[k], prev) * (next - prev) -
                    polyval(integrand.derivative[k], prev) * correction[k];
        prev = next;
      }
    }
  });
  return out;
}

}  // namespace

Eigen::VectorXd riemann_wick_integral(const FirstChaosIntegrand& integrand, const PathBatch& paths,
                                      const GaussianDriverSpec& driver) {
  const Eigen::MatrixXd cells = wick_cells(integrand, paths, driver);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(cells.rows());
  for (Eigen::Index i = 0; i < cells.cols(); ++i) out += cells.col(i);
  return out;
}

ResidualStats bsde_residual(const SolutionField& field, const ScenarioSpec& scenario, const PathBatch& paths) {
  const GaussianDriverSpec& driver = scenario.driver;
  std::vector<double> grid{0.0};
  grid.insert(grid.end(), paths.grid_t.begin(), paths.grid_t.end());
  require(std::abs(grid.back() - driver.horizon) <= 1e-12 * driver.horizon, ErrorKind::GridMismatch,
          "residual paths must end at the horizon");
  const auto integrand = FirstChaosIntegrand::from_field(field, grid);
  const Eigen::MatrixXd wick = wick_cells(integrand, paths, driver);

  const Eigen::Index n = paths.n_paths();
  const auto nodes = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd x(n, nodes);
  x.col(0).setZero();
  x.rightCols(nodes - 1) = paths.samples;
  Eigen::MatrixXd y(n, nodes);
  Eigen::MatrixXd z(n, nodes);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
    for (std::size_t pp = begin; pp < end; ++pp) {
      const auto p = static_cast<Eigen::Index>(pp);
      for (Eigen::Index j = 0; j < nodes; ++j) {
        const TransferValue v = transfer_evaluate(field, grid[static_cast<std::size_t>(j)], x(p, j));
        y(p, j) = v.y;
        z(p, j) = v.z;
      }
    }
  });

  const auto rows = static_cast<std::size_t>(n);
  LawFeatures terminal_law;
  terminal_law.mean_x = x.col(nodes - 1).mean();
  Eigen::MatrixXd r(n, nodes);
  for (Eigen::Index p = 0; p < n; ++p) r(p, nodes - 1) = y(p, nodes - 1) - eval_terminal(scenario.terminal, x(p, nodes - 1), terminal_law);
  for (Eigen::Index j = nodes - 2; j >= 0; --j) {
    const double t = grid[static_cast<std::size_t>(j)];
    const double dv = driver.variance(grid[static_cast<std::size_t>(j) + 1]) - driver.variance(t);
    const LawFeatures nu = law_features({x.col(j).data(), rows}, {y.col(j).data(), rows}, {z.col(j).data(), rows});
    for (Eigen::Index p = 0; p < n; ++p) {
      const double f = eval_generator(scenario.generator, t, x(p, j), y(p, j), z(p, j), nu);
      // Tail sums telescope through the next node's residual.
      const double tail_next = r(p, j + 1) - y(p, j + 1);
      r(p, j) = y(p, j) + tail_next - f * dv + wick(p, j);
    }
  }

  ResidualStats stats;
  stats.grid_t = grid;
  const double nn = static_cast<double>(n);
  for (Eigen::Index j = 0; j < nodes; ++j) {
    const Eigen::ArrayXd col = r.col(j).array();
    const double mean = col.mean();
    const Eigen::ArrayXd sq = col.square();
    const double ms = sq.mean();
    const double rms = std::sqrt(ms);
    const double sd = std::sqrt((col - mean).square().sum() / (nn - 1.0));
    const double sd_sq = std::sqrt((sq - ms).square().sum() / (nn - 1.0));
    stats.mean.push_back(mean);
    stats.rms.push_back(rms);
    stats.mean_se.push_back(sd / std::sqrt(nn));
    stats.rms_se.push_back(rms > 0.0 ? sd_sq / (2.0 * rms * std::sqrt(nn)) : 0.0);
  }
  return stats;
}

WickExponential wick_exponential(const StepFunctionH& h, const PathBatch& paths, const GaussianDriverSpec& driver) {
  h.validate();
  const auto m = static_cast<Eigen::Index>(paths.grid_t.size());
  Eigen::VectorXd target(m);
  for (Eigen::Index k = 0; k < m; ++k) target(k) = h.at(driver, paths.grid_t[static_cast<std::size_t>(k)]);
  const Eigen::MatrixXd cov = covariance_matrix(driver, paths.grid_t);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success) fail(ErrorKind::CholeskyFailure, "path covariance is singular");
  const Eigen::VectorXd weights = ldlt.solve(target);
  WickExponential out;
  out.variance = target.dot(weights);
  const Eigen::VectorXd ih = paths.samples * weights;
  out.samples = (ih.array() - 0.5 * out.variance).exp().matrix();
  return out;
}

McEstimate s_transform_mc(std::span<const double> eta, const WickExponential& exponential) {
  require(eta.size() == static_cast<std::size_t>(exponential.samples.size()) && eta.size() >= 2,
          ErrorKind::InvalidArgument, "S-transform needs paired samples");
  const Eigen::Map<const Eigen::ArrayXd> e(eta.data(), static_cast<Eigen::Index>(eta.size()));
  const Eigen::ArrayXd prod = e * exponential.samples.array();
  const double n = static_cast<double>(eta.size());
  const double mean = prod.mean();
  return {mean, std::sqrt((prod - mean).square().sum() / (n - 1.0) / n)};
}

FactorizationCheck factorization_check(const Eigen::VectorXd& monomial, const PathBatch& paths, int col_i,
                                       int col_next, const StepFunctionH& h, const WickExponential& exponential,
                                       const GaussianDriverSpec& driver) {
  require(col_next > col_i && col_next < paths.n_times() && col_i >= -1, ErrorKind::InvalidArgument,
          "factorization check needs increasing in-grid columns");
  const Eigen::Index n = paths.n_paths();
  const double ti = col_i < 0 ? 0.0 : paths.grid_t[static_cast<std::size_t>(col_i)];
  const double tn = paths.grid_t[static_cast<std::size_t>(col_next)];
  const Eigen::VectorXd x = col_i < 0 ? Eigen::VectorXd::Zero(n) : Eigen::VectorXd(paths.samples.col(col_i));
  const Eigen::VectorXd inc = paths.samples.col(col_next) - x;
  const auto rows = static_cast<std::size_t>(n);
  const Eigen::VectorXd prod =
      wick_product_first_chaos(monomial, {x.data(), rows}, {inc.data(), rows}, covariance(driver, ti, tn),
                               driver.variance(ti));
  Eigen::VectorXd px(n);
  for (Eigen::Index p = 0; p < n; ++p) px(p) = polyval(monomial, x(p));
  const double s_inc = h.at(driver, tn) - h.at(driver, ti);

  FactorizationCheck out;
  const McEstimate lhs = s_transform_mc({prod.data(), rows}, exponential);
  const McEstimate sp = s_transform_mc({px.data(), rows}, exponential);
  const Eigen::VectorXd paired = prod - s_inc * px;
  const McEstimate diff = s_transform_mc({paired.data(), rows}, exponential);
  out.lhs = lhs.value;
  out.lhs_se = lhs.std_error;
  out.rhs = sp.value * s_inc;
  out.rhs_se = sp.std_error * std::abs(s_inc);
  out.difference = diff.value;
  out.difference_se = diff.std_error;
  out.pass = std::abs(diff.value) <= 3.0 * diff.std_error;
  return out;
}

}  // namespace gaussbsde
