#include <doctest.h>

#include <cmath>

#include "gaussbsde/errors.hpp"
#include "gaussbsde/theorem_lab.hpp"

using namespace gaussbsde;

namespace {
SolverConfig small_config() {
  SolverConfig c;
  c.n_time = 16;
  c.n_particles = 4000;
  c.basis_degree = 3;
  c.ridge = 0.0;
  return c;
}

double value_of(const TheoremReport& r, const std::string& name) {
  const Measurement* m = r.find(name);
  REQUIRE_MESSAGE(m != nullptr, name);
  return m->value;
}
}  // namespace

TEST_CASE("transport constants in closed form") {
  const InequalityConstants c = transport_constants(1.0, 0.0, 1.0, 0.0);
  CHECK(c.c_tr_y == doctest::Approx(2.0));
  CHECK(c.c_ls_y == doctest::Approx(2.0));
  CHECK(c.c_tr_z_limit == doctest::Approx(1.4142135623730951).epsilon(1e-14));
  CHECK(c.c_tr_z_grid >= c.c_tr_z_limit);
  const InequalityConstants d = transport_constants(0.5, 0.4, 2.0, 0.5);
  const double tau = 1.5;
  CHECK(d.c_tr_y == doctest::Approx(2.0 * std::pow(0.5 + 0.4 * tau, 2) * std::exp(0.8 * tau)).epsilon(1e-14));
  CHECK(d.c_ls_y == doctest::Approx(2.0 * d.c_tr_y).epsilon(1e-14));
  CHECK(transport_constants_report(0.5, 0.4, 2.0, 0.5, 1.0).pass);
}

TEST_CASE("Gaussian family law") {
  const auto d = GaussianDriverSpec::brownian();
  auto s = scenarios::linear_decay(0.5, d);
  const GaussianLaw1D law = gaussian_family_law(s, 0.25);
  CHECK(law.mean == doctest::Approx(0.0));
  CHECK(law.variance == doctest::Approx(std::exp(-0.75) * 0.25).epsilon(1e-14));
  CHECK_FALSE(in_gaussian_family(scenarios::sine_terminal(d)));
  CHECK_FALSE(in_gaussian_family(scenarios::mean_field(0.3, 1.0, d)));
  CHECK_THROWS_AS(gaussian_family_law(scenarios::sine_terminal(d), 0.5), Error);
}

TEST_CASE("T2 and LSI on the identity scenario") {
  const auto s = scenarios::identity(GaussianDriverSpec::brownian());
  const TheoremReport t2 = t2_check(s, 0.5, {0.0, 0.5, 1.0, 2.0});
  CHECK(t2.pass);
  CHECK_FALSE(t2.report_only);
  CHECK(value_of(t2, "sharp ratio 2 sigma_t^2 / C_Tr_Y") == doctest::Approx(0.5));
  const TheoremReport end = t2_check(s, 1.0, {1.0});
  CHECK(value_of(end, "sharp ratio 2 sigma_t^2 / C_Tr_Y") == doctest::Approx(1.0));
  CHECK(end.pass);
  const TheoremReport lsi = lsi_check(s, 1.0, {0.0, 0.5, 1.0, 2.0});
  CHECK(lsi.pass);
  CHECK(value_of(lsi, "C_LS_Y") == doctest::Approx(2.0));
}

TEST_CASE("long clocks are reported without a verdict") {
  const auto s = scenarios::identity(GaussianDriverSpec::brownian(2.0));
  CHECK(t2_check(s, 1.0, {1.0}).report_only);
  CHECK(lsi_check(s, 1.0, {1.0}).report_only);
}

TEST_CASE("Z bound holds for the linear scenario") {
  const auto d = GaussianDriverSpec::brownian();
  const auto s = scenarios::linear_decay(0.5, d);
  const SolverConfig c = small_config();
  const auto [field, cloud] = solve_auxiliary(s, solver_clock(d, c), c, 1);
  const TheoremReport r = z_bound_check(field, cloud, s);
  CHECK(r.pass);
  CHECK(value_of(r, "min margin") > 0.0);
}

TEST_CASE("comparison of identical scenarios and refusals") {
  const auto d = GaussianDriverSpec::brownian();
  const auto s = scenarios::sine_terminal(d);
  const TheoremReport same = comparison_check(s, s, small_config(), {0.0, 0.5}, 3);
  CHECK(same.pass);
  auto bad = s;
  bad.generator.kappa_z = 0.5;
  try {
    comparison_check(bad, s, small_config(), {0.0}, 3);
    FAIL("expected HypothesisUnsatisfied");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::HypothesisUnsatisfied);
  }
  auto higher = s;
  higher.generator.c0 = 1.0;
  CHECK_THROWS_AS(comparison_check(higher, s, small_config(), {0.0}, 3), Error);
}

TEST_CASE("representation of a constant generator") {
  auto s = scenarios::identity(GaussianDriverSpec::brownian());
  s.generator.c0 = 0.4;
  const TheoremReport r = representation_limit_check(s, 0.25, 1.0, 0.5, {0.2, 0.1}, small_config(), 2);
  for (const auto& m : r.measurements) CHECK_MESSAGE(m.pass, m.name << " = " << m.value);
  CHECK(r.pass);
  CHECK(value_of(r, "f(t,y,z,L)") == doctest::Approx(0.4));
  CHECK(value_of(r, "A eps=0.1") == doctest::Approx(0.4).epsilon(1e-8));
}

TEST_CASE("converse with equal generators") {
  const auto d = GaussianDriverSpec::brownian();
  auto s = scenarios::identity(d);
  s.generator.kappa_y = 0.2;
  const TheoremReport r = converse_comparison_check(s, s, small_config(), default_probe_grid(1.0), 0.05, 4);
  CHECK(r.pass);
  CHECK(value_of(r, "hypothesis_observed") == 1.0);
}

TEST_CASE("stability ratios") {
  const auto d = GaussianDriverSpec::brownian();
  const auto s = scenarios::identity(d);
  const TheoremReport same = stability_check(s, s, small_config(), 5);
  CHECK(same.pass);
  auto shifted = s;
  shifted.generator.c0 = 0.3;
  const TheoremReport r = stability_check(s, shifted, small_config(), 5);
  CHECK(r.pass);
  CHECK(value_of(r, "ratio n_time=16") == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(value_of(r, "ratio n_time=32") == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("report bookkeeping") {
  TheoremReport r;
  r.record("a", 1.0);
  CHECK(r.pass);
  r.assert_that("b", 2.0, 1.0, false);
  CHECK_FALSE(r.pass);
  CHECK(r.find("b")->asserted);
  CHECK(r.find("missing") == nullptr);
}
