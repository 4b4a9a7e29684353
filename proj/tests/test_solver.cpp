#include <doctest.h>

#include <cmath>
#include <string>

#include "gaussbsde/errors.hpp"
#include "gaussbsde/solver.hpp"

using namespace gaussbsde;

namespace {
SolverConfig small_config() {
  SolverConfig c;
  c.n_time = 16;
  c.n_particles = 4000;
  c.basis_degree = 3;
  return c;
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::IoFailure;
}
}  // namespace

TEST_CASE("identity terminal is reproduced exactly on every node") {
  for (const auto& driver : {GaussianDriverSpec::brownian(), GaussianDriverSpec::fbm(0.7)}) {
    SolverConfig c = small_config();
    c.ridge = 0.0;
    const auto s = scenarios::identity(driver);
    const auto [field, cloud] = solve_auxiliary(s, solver_clock(driver, c), c, 3);
    REQUIRE(field.s_grid.size() == 17);
    for (std::size_t i = 0; i < field.s_grid.size(); ++i) {
      const Eigen::VectorXd u = field.u_monomial(i);
      CHECK(std::abs(u(1) - 1.0) < 1e-9);
      CHECK(std::abs(u(0)) < 1e-9);
      for (int k = 2; k <= 3; ++k) CHECK(std::abs(u(k)) < 1e-9);
      if (i + 1 < field.s_grid.size()) CHECK(std::abs(field.v_tilde(i, 0.3) - 1.0) < 1e-9);
    }
    const TransferValue tv = transfer_evaluate(field, 0.5, 0.8);
    CHECK(tv.y == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(tv.z == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("constant terminal gives a constant field with zero Z") {
  SolverConfig c = small_config();
  c.ridge = 0.0;
  const auto d = GaussianDriverSpec::brownian();
  const auto [field, cloud] = solve_auxiliary(scenarios::constant_terminal(1.0, d), solver_clock(d, c), c, 1);
  for (std::size_t i = 0; i < field.s_grid.size(); ++i) {
    CHECK(field.u_tilde(i, 0.7) == doctest::Approx(1.0).epsilon(1e-9));
    if (i + 1 < field.s_grid.size()) CHECK(std::abs(field.v_tilde(i, -0.4)) < 1e-9);
  }
}

TEST_CASE("linear generator: both signs follow the exponential in clock time") {
  SolverConfig c = small_config();
  c.n_time = 64;
  const auto d = GaussianDriverSpec::brownian();
  for (double c2 : {-0.5, 0.5}) {
    auto s = scenarios::linear_decay(0.5, d);
    s.generator.c2 = c2;
    const auto [field, cloud] = solve_auxiliary(s, solver_clock(d, c), c, 9);
    const double slope0 = field.u_monomial(0)(1);
    CHECK(slope0 == doctest::Approx(std::exp(c2)).epsilon(0.02));
    const int mid = field.node_of(0.5);
    REQUIRE(mid >= 0);
    CHECK(field.u_monomial(static_cast<std::size_t>(mid))(1) == doctest::Approx(std::exp(0.5 * c2)).epsilon(0.02));
  }
  CHECK(std::exp(0.5) == doctest::Approx(1.6487212707001282));
}

TEST_CASE("transfer rejects times outside the horizon") {
  SolverConfig c = small_config();
  const auto d = GaussianDriverSpec::brownian();
  const auto [field, cloud] = solve_auxiliary(scenarios::identity(d), solver_clock(d, c), c, 1);
  CHECK(kind_of([&] { transfer_evaluate(field, 1.5, 0.0); }) == ErrorKind::OutOfRange);
}

TEST_CASE("configuration invariants") {
  SolverConfig c = small_config();
  c.n_time = 1;
  CHECK_THROWS_AS(c.validate(0.0, 1.0), Error);
  c = small_config();
  c.n_particles = 5;
  CHECK_THROWS_AS(c.validate(0.0, 1.0), Error);
  c = small_config();
  try {
    c.validate(10.0, 1.0);
    FAIL("expected step-bound error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("ds * L_f <= 0.5") != std::string::npos);
  }
  CHECK_NOTHROW(c.validate(8.0, 1.0));
}

TEST_CASE("Picard gives up when the tolerance cannot be met") {
  SolverConfig c = small_config();
  c.picard_max_iter = 1;
  c.picard_tol = 1e-14;
  const auto d = GaussianDriverSpec::brownian();
  const auto s = scenarios::mean_field(0.3, 1.0, d);
  CHECK(kind_of([&] { solve_auxiliary(s, solver_clock(d, c), c, 1); }) == ErrorKind::PicardDivergence);
}

TEST_CASE("mean-field Picard converges to the closed-form mean") {
  SolverConfig c = small_config();
  c.n_time = 32;
  const auto d = GaussianDriverSpec::brownian();
  const auto [field, cloud] = solve_auxiliary(scenarios::mean_field(0.3, 1.0, d), solver_clock(d, c), c, 2);
  CHECK(field.picard_iterations <= 10);
  CHECK(field.picard_log.back() < c.picard_tol);
  const double y0 = cloud.y.col(0).mean();
  CHECK(y0 == doctest::Approx(std::exp(0.3)).epsilon(0.02));
}

TEST_CASE("solves are bit-identical for a fixed seed") {
  SolverConfig c = small_config();
  const auto d = GaussianDriverSpec::fbm(0.3);
  const auto s = scenarios::sine_terminal(d);
  const auto a = solve_auxiliary(s, solver_clock(d, c), c, 17);
  const auto b = solve_auxiliary(s, solver_clock(d, c), c, 17);
  CHECK((a.second.y - b.second.y).cwiseAbs().maxCoeff() == 0.0);
  for (std::size_t i = 0; i < a.first.u.size(); ++i) CHECK(a.first.u[i].coef == b.first.u[i].coef);
}

TEST_CASE("zero generator propagates the terminal mean") {
  SolverConfig c = small_config();
  const auto d = GaussianDriverSpec::brownian();
  const auto [field, cloud] = solve_auxiliary(scenarios::sine_terminal(d), solver_clock(d, c), c, 5);
  const Eigen::Index last = cloud.y.cols() - 1;
  const Eigen::ArrayXd g = cloud.y.col(last).array();
  const double se = std::sqrt((g - g.mean()).square().mean() / static_cast<double>(g.size()));
  // E[sin W + 2W] = 0
  CHECK(std::abs(cloud.y(0, 0)) <= 3.0 * se);
  CHECK((cloud.y.col(0).array() - cloud.y(0, 0)).abs().maxCoeff() == 0.0);
}

TEST_CASE("representation with zero and constant generators") {
  SolverConfig c = small_config();
  c.ridge = 0.0;
  const auto d = GaussianDriverSpec::brownian();
  const VarianceClock clock = build_clock(d, 129);
  const auto zero = scenarios::identity(d);
  const RepresentationEstimate e0 = representation_solve(zero, clock, 0.25, 0.1, 1.0, 0.5, c, 4);
  CHECK(e0.value == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(e0.determinism_sd < 1e-9);
  auto constant = zero;
  constant.generator.c0 = 0.7;
  const RepresentationEstimate e1 = representation_solve(constant, clock, 0.25, 0.1, 1.0, 0.5, c, 4);
  CHECK(e1.value == doctest::Approx(1.0 + 0.7 * 0.1).epsilon(1e-9));
  CHECK(e1.v_end - e1.v_start == doctest::Approx(0.1));
}

TEST_CASE("representation preconditions") {
  SolverConfig c = small_config();
  const auto d = GaussianDriverSpec::brownian();
  const VarianceClock clock = build_clock(d, 129);
  auto s = scenarios::identity(d);
  CHECK(kind_of([&] { representation_solve(s, clock, 0.5, 1e-18, 1.0, 0.5, c, 1); }) ==
        ErrorKind::DegenerateInterval);
  CHECK(kind_of([&] { representation_solve(s, clock, 0.5, 0.6, 1.0, 0.5, c, 1); }) == ErrorKind::OutOfRange);
  s.generator.c1 = 1.0;
  CHECK(kind_of([&] { representation_solve(s, clock, 0.5, 0.1, 1.0, 0.5, c, 1); }) ==
        ErrorKind::UnsupportedScenario);
}
