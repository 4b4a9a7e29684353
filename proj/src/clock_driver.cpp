#include "gaussbsde/clock_driver.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gaussbsde/errors.hpp"
#include "gaussbsde/parallel.hpp"
#include "gaussbsde/rng.hpp"

namespace gaussbsde {

std::string to_string(DriverKind kind) {
  switch (kind) {
    case DriverKind::Brownian: return "brownian";
    case DriverKind::Fbm: return "fbm";
    case DriverKind::Custom: return "custom";
  }
  return "unknown";
}

DriverKind driver_kind_from_string(const std::string& name) {
  if (name == "brownian") return DriverKind::Brownian;
  if (name == "fbm") return DriverKind::Fbm;
  if (name == "custom") return DriverKind::Custom;
  fail(ErrorKind::InvalidArgument, "driver kind must be one of brownian, fbm, custom (got '" + name + "')");
}

GaussianDriverSpec GaussianDriverSpec::brownian(double horizon) {
  GaussianDriverSpec spec;
  spec.kind = DriverKind::Brownian;
  spec.hurst = 0.5;
  spec.horizon = horizon;
  return spec;
}

GaussianDriverSpec GaussianDriverSpec::fbm(double hurst, double horizon) {
  GaussianDriverSpec spec;
  spec.kind = DriverKind::Fbm;
  spec.hurst = hurst;
  spec.horizon = horizon;
  return spec;
}

GaussianDriverSpec GaussianDriverSpec::custom(std::vector<std::vector<double>> table, double horizon) {
  GaussianDriverSpec spec;
  spec.kind = DriverKind::Custom;
  spec.horizon = horizon;
  spec.custom_table = std::move(table);
  return spec;
}

void GaussianDriverSpec::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    fail(ErrorKind::InvalidArgument, "T must be a positive finite number");
  }
  if (kind == DriverKind::Fbm && !(hurst > 0.0 && hurst < 1.0)) {
    fail(ErrorKind::InvalidArgument, "hurst must be in (0,1)");
  }
  if (kind == DriverKind::Custom) {
    if (custom_table.empty()) fail(ErrorKind::InvalidArgument, "custom covariance table is empty");
    for (std::size_t i = 0; i < custom_table.size(); ++i) {
      if (custom_table[i].size() != i + 1) {
        fail(ErrorKind::InvalidArgument, "covariance table row " + std::to_string(i) + " must have " +
                                             std::to_string(i + 1) + " entries");
      }
      for (double c : custom_table[i]) {
        if (!std::isfinite(c)) fail(ErrorKind::InvalidArgument, "covariance table has non-finite entry");
      }
    }
  }
}

namespace {

// Table entry with the implicit zero row/column for t_0 = 0.
double table_entry(const GaussianDriverSpec& spec, std::size_t i, std::size_t j) {
  if (i == 0 || j == 0) return 0.0;
  const auto [lo, hi] = std::minmax(i, j);
  return spec.custom_table[hi - 1][lo - 1];
}

double custom_covariance(const GaussianDriverSpec& spec, double s, double t) {
  const auto n = spec.custom_table.size();
  const double h = spec.horizon / static_cast<double>(n);
  auto locate = [&](double u, std::size_t& k, double& w) {
    const double pos = std::clamp(u / h, 0.0, static_cast<double>(n));
    k = std::min(static_cast<std::size_t>(pos), n - 1);
    w = pos - static_cast<double>(k);
  };
  std::size_t i = 0, j = 0;
  double wi = 0.0, wj = 0.0;
  locate(s, i, wi);
  locate(t, j, wj);
  return (1 - wi) * (1 - wj) * table_entry(spec, i, j) + wi * (1 - wj) * table_entry(spec, i + 1, j) +
         (1 - wi) * wj * table_entry(spec, i, j + 1) + wi * wj * table_entry(spec, i + 1, j + 1);
}

void check_time(const GaussianDriverSpec& spec, double t) {
  const double slack = 1e-12 * spec.horizon;
  if (!(t >= -slack && t <= spec.horizon + slack)) {
    fail(ErrorKind::OutOfRange, "time " + std::to_string(t) + " outside [0, T]");
  }
}

}  // namespace

double covariance(const GaussianDriverSpec& spec, double s, double t) {
  check_time(spec, s);
  check_time(spec, t);
  s = std::clamp(s, 0.0, spec.horizon);
  t = std::clamp(t, 0.0, spec.horizon);
  switch (spec.kind) {
    case DriverKind::Brownian:
      return std::min(s, t);
    case DriverKind::Fbm: {
      const double two_h = 2.0 * spec.hurst;
      return 0.5 * (std::pow(s, two_h) + std::pow(t, two_h) - std::pow(std::abs(t - s), two_h));
    }
    case DriverKind::Custom:
      return custom_covariance(spec, s, t);
  }
  return 0.0;
}

double GaussianDriverSpec::variance(double t) const {
  if (kind == DriverKind::Fbm) {
    check_time(*this, t);
    return std::pow(std::clamp(t, 0.0, horizon), 2.0 * hurst);
  }
  return covariance(*this, t, t);
}

std::string GaussianDriverSpec::tag() const {
  std::ostringstream out;
  out.precision(12);
  out << to_string(kind);
  if (kind == DriverKind::Fbm) out << "(H=" << hurst << ")";
  if (kind == DriverKind::Custom) out << "(n=" << custom_table.size() << ")";
  out << ",T=" << horizon;
  return out.str();
}

Eigen::MatrixXd covariance_matrix(const GaussianDriverSpec& spec, const std::vector<double>& grid) {
  const auto n = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      cov(i, j) = covariance(spec, grid[i], grid[j]);
      cov(j, i) = cov(i, j);
    }
  }
  return cov;
}

std::vector<std::vector<double>> read_covariance_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoFailure, "cannot open covariance file " + path);
  std::vector<std::vector<double>> table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(ErrorKind::InvalidArgument, "covariance file " + path + ": bad number '" + cell + "'");
      }
    }
    table.push_back(std::move(row));
  }
  return table;
}

VarianceClock::VarianceClock(std::vector<double> grid_t, std::vector<double> grid_v)
    : grid_t_(std::move(grid_t)), grid_v_(std::move(grid_v)) {
  require(grid_t_.size() == grid_v_.size() && grid_t_.size() >= 2, ErrorKind::InvalidArgument,
          "clock needs at least two (t, V) nodes of equal count");
  require(grid_t_.front() == 0.0, ErrorKind::InvalidArgument, "clock grid must start at t = 0");
  require(grid_v_.front() == 0.0, ErrorKind::NonMonotoneVariance, "V(0) must be 0");
  for (std::size_t i = 1; i < grid_t_.size(); ++i) {
    require(grid_t_[i] > grid_t_[i - 1], ErrorKind::InvalidArgument, "clock t-grid must be strictly increasing");
    if (!(grid_v_[i] > grid_v_[i - 1])) {
      fail(ErrorKind::NonMonotoneVariance,
           "variance step at t=" + std::to_string(grid_t_[i]) + " is not positive");
    }
  }
}

double VarianceClock::value(double t) const {
  const double slack = 1e-12 * horizon();
  if (!(t >= -slack && t <= horizon() + slack)) {
    fail(ErrorKind::OutOfRange, "time " + std::to_string(t) + " outside [0, T]");
  }
  if (t <= 0.0) return 0.0;
  if (t >= horizon()) return total_variance();
  const auto it = std::upper_bound(grid_t_.begin(), grid_t_.end(), t);
  const auto k = static_cast<std::size_t>(it - grid_t_.begin());
  const double w = (t - grid_t_[k - 1]) / (grid_t_[k] - grid_t_[k - 1]);
  return grid_v_[k - 1] + w * (grid_v_[k] - grid_v_[k - 1]);
}

double VarianceClock::invert(double s) const {
  const double slack = 1e-12 * std::max(1.0, total_variance());
  if (!(s >= -slack && s <= total_variance() + slack)) {
    fail(ErrorKind::OutOfRange, "variance " + std::to_string(s) + " outside [0, V_T]");
  }
  if (s <= 0.0) return 0.0;
  if (s >= total_variance()) return horizon();
  const auto it = std::lower_bound(grid_v_.begin(), grid_v_.end(), s);
  const auto k = static_cast<std::size_t>(it - grid_v_.begin());
  if (grid_v_[k] == s) return grid_t_[k];
  const double w = (s - grid_v_[k - 1]) / (grid_v_[k] - grid_v_[k - 1]);
  return grid_t_[k - 1] + w * (grid_t_[k] - grid_t_[k - 1]);
}

VarianceClock build_clock(const GaussianDriverSpec& spec, int n_nodes) {
  spec.validate();
  require(n_nodes >= 2, ErrorKind::InvalidArgument, "n_nodes must be >= 2");
  const double horizon = spec.horizon;
  std::vector<double> ts;
  ts.reserve(2 * static_cast<std::size_t>(n_nodes) + spec.custom_table.size() + 1);
  for (int i = 0; i < n_nodes; ++i) ts.push_back(horizon * i / (n_nodes - 1));

  if (spec.kind == DriverKind::Custom) {
    const auto n = spec.custom_table.size();
    for (std::size_t k = 1; k <= n; ++k) ts.push_back(horizon * static_cast<double>(k) / static_cast<double>(n));
  } else {
    // Preimages of a uniform V-grid; V_t = t^{2H} gives U_s = s^{1/(2H)}.
    const double two_h = spec.kind == DriverKind::Fbm ? 2.0 * spec.hurst : 1.0;
    const double total = spec.variance(horizon);
    for (int i = 1; i < n_nodes - 1; ++i) {
      const double s = total * i / (n_nodes - 1);
      ts.push_back(two_h == 1.0 ? s : std::pow(s, 1.0 / two_h));
    }
  }
  std::sort(ts.begin(), ts.end());
  std::vector<double> grid_t;
  const double merge_tol = 1e-13 * horizon;
  for (double t : ts) {
    t = std::clamp(t, 0.0, horizon);
    if (grid_t.empty() || t - grid_t.back() > merge_tol) grid_t.push_back(t);
  }
  grid_t.front() = 0.0;
  grid_t.back() = horizon;

  std::vector<double> grid_v;
  grid_v.reserve(grid_t.size());
  for (double t : grid_t) grid_v.push_back(spec.variance(t));
  grid_v.front() = 0.0;
  return VarianceClock(std::move(grid_t), std::move(grid_v));
}

double invert_clock(const VarianceClock& clock, double s) { return clock.invert(s); }

PathBatch sample_paths(const GaussianDriverSpec& spec, const std::vector<double>& grid_t, int n_paths,
                       std::uint64_t seed, std::uint64_t domain) {
  spec.validate();
  require(n_paths >= 1, ErrorKind::InvalidArgument, "n_paths must be positive");
  require(!grid_t.empty(), ErrorKind::InvalidArgument, "path grid is empty");
  for (std::size_t j = 0; j < grid_t.size(); ++j) {
    require(grid_t[j] > 0.0 && grid_t[j] <= spec.horizon * (1 + 1e-12), ErrorKind::InvalidArgument,
            "path grid must lie inside (0, T]");
    require(j == 0 || grid_t[j] > grid_t[j - 1], ErrorKind::InvalidArgument,
            "path grid must be strictly increasing");
  }
  const auto n = static_cast<Eigen::Index>(grid_t.size());
  Eigen::MatrixXd normals(n_paths, n);
  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      CounterRng rng(stream_key(seed, domain, p));
      for (Eigen::Index j = 0; j < n; ++j) normals(static_cast<Eigen::Index>(p), j) = rng.normal();
    }
  });

  PathBatch batch;
  batch.grid_t = grid_t;
  batch.seed = seed;
  batch.driver_tag = spec.tag();

  if (spec.kind == DriverKind::Brownian) {
    batch.samples.resize(n_paths, n);
    double prev_t = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double sd = std::sqrt(grid_t[j] - prev_t);
      if (j == 0) {
        batch.samples.col(0) = sd * normals.col(0);
      } else {
        batch.samples.col(j) = batch.samples.col(j - 1) + sd * normals.col(j);
      }
      prev_t = grid_t[j];
    }
    return batch;
  }

  Eigen::MatrixXd cov = covariance_matrix(spec, grid_t);
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    cov.diagonal().array() += 1e-12 * cov.trace();
    llt.compute(cov);
    if (llt.info() != Eigen::Success) {
      fail(ErrorKind::CholeskyFailure, "covariance matrix of " + spec.tag() + " is not numerically PSD");
    }
  }
  batch.samples = normals * llt.matrixL().transpose();
  return batch;
}

}  // namespace gaussbsde
