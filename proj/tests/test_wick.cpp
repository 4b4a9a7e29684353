#include <doctest.h>

#include <cmath>
#include <vector>

#include "gaussbsde/errors.hpp"
#include "gaussbsde/regression.hpp"
#include "gaussbsde/wick.hpp"

using namespace gaussbsde;

namespace {
std::vector<double> uniform_grid(int n, double horizon = 1.0) {
  std::vector<double> g;
  for (int k = 1; k <= n; ++k) g.push_back(horizon * k / n);
  return g;
}

Eigen::VectorXd mono(std::initializer_list<double> c) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(c.size()));
  Eigen::Index k = 0;
  for (double x : c) v(k++) = x;
  return v;
}

double mean_se(const Eigen::VectorXd& v) {
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / (v.size() - 1.0) / v.size());
}
}  // namespace

TEST_CASE("Wick product of a first-chaos polynomial on explicit numbers") {
  const std::vector<double> x{0.5, -1.0};
  const std::vector<double> dx{0.2, 0.3};
  const Eigen::VectorXd one = wick_product_first_chaos(mono({1.0}), x, dx, 0.4, 0.3);
  CHECK(one(0) == doctest::Approx(0.2));
  CHECK(one(1) == doctest::Approx(0.3));
  // p(x) = x^2: p dX - 2x (cov_cross - var_ti)
  const Eigen::VectorXd sq = wick_product_first_chaos(mono({0.0, 0.0, 1.0}), x, dx, 0.4, 0.3);
  CHECK(sq(0) == doctest::Approx(0.25 * 0.2 - 2 * 0.5 * 0.1));
  CHECK(sq(1) == doctest::Approx(1.0 * 0.3 + 2 * 1.0 * 0.1));
  const std::vector<double> flat{0.0, 0.0};
  try {
    wick_product_first_chaos(mono({1.0}), x, flat, 0.4, 0.3);
    FAIL("expected DegenerateIncrement");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateIncrement);
  }
}

TEST_CASE("fbm Wick product is centred while the plain product is not") {
  const auto d = GaussianDriverSpec::fbm(0.7);
  const PathBatch paths = sample_paths(d, {0.5, 0.75}, 50000, 21);
  const Eigen::VectorXd x = paths.samples.col(0);
  const Eigen::VectorXd inc = paths.samples.col(1) - x;
  const double cross = covariance(d, 0.5, 0.75);
  const double var = d.variance(0.5);
  CHECK(cross - var == doctest::Approx(0.07297974286751119).epsilon(1e-12));
  const Eigen::VectorXd w = wick_product_first_chaos(mono({0.0, 1.0}), {x.data(), 50000}, {inc.data(), 50000}, cross, var);
  CHECK(std::abs(w.mean()) <= 3.0 * mean_se(w));
  const Eigen::VectorXd naive = (x.array() * inc.array()).matrix();
  CHECK(std::abs(naive.mean()) > 3.0 * mean_se(naive));
}

TEST_CASE("Riemann-Wick sums") {
  const auto grid = uniform_grid(16);
  std::vector<double> full{0.0};
  full.insert(full.end(), grid.begin(), grid.end());
  for (const auto& d : {GaussianDriverSpec::brownian(), GaussianDriverSpec::fbm(0.3)}) {
    const PathBatch paths = sample_paths(d, grid, 2000, 8);
    const Eigen::VectorXd ones = riemann_wick_integral(FirstChaosIntegrand::polynomial(full, mono({1.0})), paths, d);
    CHECK((ones - paths.samples.col(15)).cwiseAbs().maxCoeff() < 1e-12);
  }
  const auto b = GaussianDriverSpec::brownian();
  const PathBatch paths = sample_paths(b, grid, 2000, 8);
  const Eigen::VectorXd xdx = riemann_wick_integral(FirstChaosIntegrand::polynomial(full, mono({0.0, 1.0})), paths, b);
  double worst = 0.0;
  for (Eigen::Index p = 0; p < 2000; ++p) {
    double ito = 0.0, prev = 0.0;
    for (Eigen::Index j = 0; j < 16; ++j) {
      ito += prev * (paths.samples(p, j) - prev);
      prev = paths.samples(p, j);
    }
    worst = std::max(worst, std::abs(ito - xdx(p)));
  }
  CHECK(worst < 1e-12);
  auto wrong = FirstChaosIntegrand::polynomial({0.0, 0.5, 1.0}, mono({1.0}));
  try {
    riemann_wick_integral(wrong, paths, b);
    FAIL("expected GridMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GridMismatch);
  }
}

TEST_CASE("S-transform of constants and of the driver") {
  const auto d = GaussianDriverSpec::fbm(0.7);
  const auto grid = uniform_grid(8);
  const PathBatch paths = sample_paths(d, grid, 40000, 2);
  const StepFunctionH h{{0.0, 0.5}, {1.0, -0.5}};
  CHECK(h.density_at(0.25) == 1.0);
  CHECK(h.density_at(0.75) == -0.5);
  CHECK(h.at(d, 0.5) == doctest::Approx(d.variance(0.5)));
  CHECK(h.at(d, 1.0) == doctest::Approx(d.variance(0.5) - 0.5 * (1.0 - d.variance(0.5))));
  const WickExponential e = wick_exponential(h, paths, d);
  const std::vector<double> ones(40000, 1.0);
  const McEstimate s1 = s_transform_mc(ones, e);
  CHECK(std::abs(s1.value - 1.0) <= 3.0 * s1.std_error);
  const Eigen::VectorXd x = paths.samples.col(3);
  const McEstimate sx = s_transform_mc({x.data(), 40000}, e);
  CHECK(std::abs(sx.value - h.at(d, 0.5)) <= 3.0 * sx.std_error);
  CHECK_THROWS_AS((StepFunctionH{{0.2}, {1.0}}.validate()), Error);
}

TEST_CASE("factorization of the S-transform over a Wick product") {
  const auto d = GaussianDriverSpec::fbm(0.7);
  const auto grid = uniform_grid(8);
  const PathBatch paths = sample_paths(d, grid, 40000, 6);
  const StepFunctionH h{{0.0}, {0.8}};
  const WickExponential e = wick_exponential(h, paths, d);
  for (const auto& p : {mono({1.0}), mono({0.0, 1.0}), mono({0.0, 0.0, 1.0}), mono({0.5, 0.0, 0.0, 1.0})}) {
    const FactorizationCheck fc = factorization_check(p, paths, 3, 5, h, e, d);
    CHECK(fc.pass);
  }
  const FactorizationCheck first = factorization_check(mono({0.0, 1.0}), paths, -1, 3, h, e, d);
  CHECK(first.pass);
}

TEST_CASE("residual vanishes identically for the identity field") {
  SolverConfig c;
  c.n_time = 16;
  c.n_particles = 2000;
  c.basis_degree = 2;
  c.ridge = 0.0;
  const auto d = GaussianDriverSpec::fbm(0.7);
  const auto s = scenarios::identity(d);
  const auto [field, cloud] = solve_auxiliary(s, solver_clock(d, c), c, 1);
  const PathBatch paths = sample_paths(d, uniform_grid(16), 1000, 3);
  const ResidualStats r = bsde_residual(field, s, paths);
  REQUIRE(r.grid_t.size() == 17);
  for (double v : r.rms) CHECK(v < 1e-9);
}

TEST_CASE("sine terminal residual on fbm is centred") {
  SolverConfig c;
  c.n_time = 64;
  c.n_particles = 20000;
  const auto d = GaussianDriverSpec::fbm(0.7);
  const auto s = scenarios::sine_terminal(d);
  const auto [field, cloud] = solve_auxiliary(s, solver_clock(d, c), c, 12);
  const PathBatch paths = sample_paths(d, uniform_grid(64), 20000, 13);
  const ResidualStats r = bsde_residual(field, s, paths);
  CHECK(std::abs(r.mean.front()) <= 3.0 * r.mean_se.front());
  CHECK(r.rms.back() < 0.1);
}
