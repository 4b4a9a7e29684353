#include <doctest.h>

#include <cmath>
#include <limits>

#include "gaussbsde/errors.hpp"
#include "gaussbsde/measures.hpp"
#include "gaussbsde/scenario.hpp"

using namespace gaussbsde;

TEST_CASE("sorted coupling on small clouds") {
  const std::vector<double> a{3.0, 0.0, 1.0};
  const std::vector<double> b{2.0, 1.0, 2.0};
  CHECK(wasserstein_1d(std::span<const double>(a), std::span<const double>(b), 1.0) == doctest::Approx(1.0));
  CHECK(wasserstein_1d(std::span<const double>(a), std::span<const double>(b), 2.0) == doctest::Approx(1.0));
  std::vector<double> shifted = a;
  for (double& v : shifted) v += 0.7;
  CHECK(wasserstein_1d(EmpiricalMeasure(a), EmpiricalMeasure(shifted), 2.0) == doctest::Approx(0.7));
}

TEST_CASE("empty measure is rejected") {
  try {
    EmpiricalMeasure(std::vector<double>{});
    FAIL("expected EmptyMeasure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyMeasure);
  }
}

TEST_CASE("Gaussian closed forms") {
  CHECK(gaussian_w2({0.0, 1.0}, {1.0, 4.0}) == doctest::Approx(std::sqrt(2.0)));
  CHECK(gaussian_kl({1.0, 1.0}, {0.0, 1.0}) == doctest::Approx(0.5));
  CHECK(gaussian_kl({0.0, 4.0}, {0.0, 1.0}) == doctest::Approx(0.8068528194400546));
  CHECK(gaussian_kl({0.0, 1.0}, {0.0, 1.0}) == 0.0);
  CHECK(std::isinf(gaussian_kl({1.0, 1.0}, {0.0, 0.0})));
}

TEST_CASE("entropy quadrature agrees with the exponential closed form") {
  const GaussianLaw1D mu{0.3, 0.5};
  for (double lambda : {0.5, 1.0, 2.0}) {
    const double exact = entropy_of_exponential(mu, lambda);
    const double quad = entropy_functional(mu, [lambda](double x) { return std::exp(lambda * x); });
    CHECK(quad == doctest::Approx(exact).epsilon(1e-8));
  }
  CHECK(entropy_functional(mu, [](double) { return 2.0; }) == doctest::Approx(0.0).epsilon(1e-12));
  // Ent(e^{lambda x}) = e^{lambda m + lambda^2 s^2/2} lambda^2 s^2 / 2
  CHECK(entropy_of_exponential({0.0, 1.0}, 1.0) == doctest::Approx(std::exp(0.5) * 0.5));
}

TEST_CASE("Lions directional derivatives of mean-type functionals") {
  std::vector<double> xi, eta;
  for (int k = 0; k < 200; ++k) {
    xi.push_back(std::sin(0.37 * k));
    eta.push_back(std::cos(0.11 * k) + 0.2);
  }
  const auto mean = MeanFunctional::from_name("mean");
  CHECK(mean.directional_derivative(xi, eta) == doctest::Approx(sample_mean(eta)).epsilon(1e-14));
  double expect = 0.0;
  for (std::size_t k = 0; k < xi.size(); ++k) expect += std::cos(xi[k]) * eta[k];
  expect /= static_cast<double>(xi.size());
  const auto msin = MeanFunctional::from_name("mean_sin");
  CHECK(msin.directional_derivative(xi, eta) == doctest::Approx(expect).epsilon(1e-12));
  const auto report = lions_directional_check(msin, xi, eta, {1e-1, 1e-2, 1e-3, 1e-4});
  CHECK(report.converged);
  CHECK(report.abs_errors.back() < 1e-4);
  CHECK_THROWS_AS(MeanFunctional::from_name("median"), Error);
}

TEST_CASE("Y-mean dependence of the generator equals kappa_y mean(eta)") {
  GeneratorSpec f;
  f.c2 = -0.4;
  f.kappa_y = 0.3;
  std::vector<double> x, y, z, eta;
  for (int k = 0; k < 100; ++k) {
    x.push_back(0.01 * k);
    y.push_back(std::sin(0.3 * k));
    z.push_back(0.5);
    eta.push_back(std::cos(0.7 * k));
  }
  const double eps = 1e-3;
  std::vector<double> moved = y;
  for (std::size_t k = 0; k < y.size(); ++k) moved[k] += eps * eta[k];
  const LawFeatures a = law_features(x, y, z);
  const LawFeatures b = law_features(x, moved, z);
  const double quotient = (eval_generator(f, 0.5, 0.2, 0.1, 0.3, b) - eval_generator(f, 0.5, 0.2, 0.1, 0.3, a)) / eps;
  CHECK(std::abs(quotient - 0.3 * sample_mean(eta)) <= 1e-10);
}

TEST_CASE("sample moments") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(sample_mean(v) == doctest::Approx(2.5));
  CHECK(sample_variance(v) == doctest::Approx(5.0 / 3.0));
}
