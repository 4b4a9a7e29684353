#include "gaussbsde/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "gaussbsde/errors.hpp"
#include "gaussbsde/rng.hpp"

namespace gaussbsde {

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> a) : atoms(std::move(a)) {
  require(!atoms.empty(), ErrorKind::EmptyMeasure, "empirical measure has no atoms");
  for (double x : atoms) require(std::isfinite(x), ErrorKind::InvalidArgument, "non-finite atom");
}

double EmpiricalMeasure::mean() const { return sample_mean(atoms); }

double GaussianLaw1D::sd() const { return std::sqrt(std::max(variance, 0.0)); }

double sample_mean(std::span<const double> x) {
  require(!x.empty(), ErrorKind::EmptyMeasure, "mean of empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  require(x.size() >= 2, ErrorKind::EmptyMeasure, "variance needs two samples");
  const double m = sample_mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(x.size() - 1);
}

double wasserstein_1d(std::span<const double> a, std::span<const double> b, double p) {
  require(!a.empty() && !b.empty(), ErrorKind::EmptyMeasure, "Wasserstein distance of an empty measure");
  require(a.size() == b.size(), ErrorKind::InvalidArgument, "sorted coupling needs equal atom counts");
  require(p >= 1.0, ErrorKind::InvalidArgument, "Wasserstein order p must be >= 1");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < sa.size(); ++i) acc += std::pow(std::abs(sa[i] - sb[i]), p);
  return std::pow(acc / static_cast<double>(sa.size()), 1.0 / p);
}

namespace {

std::vector<double> subsample(const std::vector<double>& atoms, std::size_t k, std::uint64_t seed) {
  // Partial Fisher-Yates driven by a counter-based stream.
  std::vector<double> pool = atoms;
  CounterRng rng(stream_key(seed, rng_domain::kSubsample, atoms.size()));
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_u64() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

double wasserstein_1d(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p, std::uint64_t seed) {
  require(!a.atoms.empty() && !b.atoms.empty(), ErrorKind::EmptyMeasure,
          "Wasserstein distance of an empty measure");
  if (a.size() == b.size()) return wasserstein_1d(a.atoms, b.atoms, p);
  if (a.size() < b.size()) return wasserstein_1d(a.atoms, subsample(b.atoms, a.size(), seed), p);
  return wasserstein_1d(subsample(a.atoms, b.size(), seed), b.atoms, p);
}

double gaussian_w2(const GaussianLaw1D& a, const GaussianLaw1D& b) {
  return std::hypot(a.mean - b.mean, a.sd() - b.sd());
}

double gaussian_kl(const GaussianLaw1D& nu, const GaussianLaw1D& mu) {
  if (mu.variance <= 0.0) {
    const bool equal = nu.variance <= 0.0 && nu.mean == mu.mean;
    return equal ? 0.0 : std::numeric_limits<double>::infinity();
  }
  if (nu.variance <= 0.0) return std::numeric_limits<double>::infinity();
  const double dm = nu.mean - mu.mean;
  return std::log(mu.sd() / nu.sd()) + (nu.variance + dm * dm) / (2.0 * mu.variance) - 0.5;
}

namespace {

double xlogx(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }

}  // namespace

double entropy_functional(const GaussianLaw1D& mu, const std::function<double(double)>& f) {
  if (mu.variance <= 0.0) {
    const double v = f(mu.mean);
    require(v > 0.0, ErrorKind::NonpositiveMass, "integral of F is not positive");
    return 0.0;
  }
  const double sd = mu.sd();
  const double lo = mu.mean - 12.0 * sd;
  const double hi = mu.mean + 12.0 * sd;
  constexpr int kIntervals = 20000;
  const double h = (hi - lo) / kIntervals;
  const double norm = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
  double mass = 0.0;
  double flogf = 0.0;
  for (int i = 0; i <= kIntervals; ++i) {
    const double x = lo + h * i;
    const double w = (i == 0 || i == kIntervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    const double z = (x - mu.mean) / sd;
    const double density = norm * std::exp(-0.5 * z * z);
    const double v = f(x);
    require(v >= 0.0, ErrorKind::InvalidArgument, "entropy test function must be nonnegative");
    mass += w * v * density;
    flogf += w * xlogx(v) * density;
  }
  mass *= h / 3.0;
  flogf *= h / 3.0;
  require(mass > 0.0, ErrorKind::NonpositiveMass, "integral of F is not positive");
  return flogf - mass * std::log(mass);
}

double entropy_functional(const EmpiricalMeasure& mu, const std::function<double(double)>& f) {
  require(!mu.atoms.empty(), ErrorKind::EmptyMeasure, "entropy under an empty measure");
  double mass = 0.0;
  double flogf = 0.0;
  for (double x : mu.atoms) {
    const double v = f(x);
    require(v >= 0.0, ErrorKind::InvalidArgument, "entropy test function must be nonnegative");
    mass += v;
    flogf += xlogx(v);
  }
  const double n = static_cast<double>(mu.size());
  mass /= n;
  flogf /= n;
  require(mass > 0.0, ErrorKind::NonpositiveMass, "integral of F is not positive");
  return std::max(0.0, flogf - mass * std::log(mass));
}

double entropy_of_exponential(const GaussianLaw1D& mu, double lambda) {
  // E[e^{lx}] = e^{lm + l^2 s^2/2}; E[l x e^{lx}] = l (m + l s^2) E[e^{lx}].
  const double s2 = std::max(mu.variance, 0.0);
  const double half = 0.5 * lambda * lambda * s2;
  return std::exp(lambda * mu.mean + half) * half;
}

MeanFunctional MeanFunctional::from_name(const std::string& name) {
  if (name == "mean") return {MeanFunctionalKind::Mean};
  if (name == "mean_squared") return {MeanFunctionalKind::MeanSquared};
  if (name == "mean_sin") return {MeanFunctionalKind::MeanOfSin};
  if (name == "mean_tanh") return {MeanFunctionalKind::MeanOfTanh};
  if (name == "mean_clip") return {MeanFunctionalKind::MeanOfClip};
  fail(ErrorKind::UnsupportedFunctional, "law functional '" + name + "' is not in the mean-type family");
}

namespace {

double apply_phi(MeanFunctionalKind kind, double x) {
  switch (kind) {
    case MeanFunctionalKind::MeanOfSin: return std::sin(x);
    case MeanFunctionalKind::MeanOfTanh: return std::tanh(x);
    case MeanFunctionalKind::MeanOfClip: return std::clamp(x, -1.0, 1.0);
    default: return x;
  }
}

double phi_derivative(MeanFunctionalKind kind, double x) {
  switch (kind) {
    case MeanFunctionalKind::MeanOfSin: return std::cos(x);
    case MeanFunctionalKind::MeanOfTanh: {
      const double th = std::tanh(x);
      return 1.0 - th * th;
    }
    case MeanFunctionalKind::MeanOfClip: return std::abs(x) < 1.0 ? 1.0 : 0.0;
    default: return 1.0;
  }
}

}  // namespace

double MeanFunctional::evaluate(std::span<const double> samples) const {
  require(!samples.empty(), ErrorKind::EmptyMeasure, "law functional of an empty sample");
  double acc = 0.0;
  for (double x : samples) acc += apply_phi(kind, x);
  const double m = acc / static_cast<double>(samples.size());
  return kind == MeanFunctionalKind::MeanSquared ? m * m : m;
}

double MeanFunctional::directional_derivative(std::span<const double> xi, std::span<const double> eta) const {
  require(xi.size() == eta.size() && !xi.empty(), ErrorKind::InvalidArgument,
          "directional derivative needs paired nonempty samples");
  const double n = static_cast<double>(xi.size());
  if (kind == MeanFunctionalKind::MeanSquared) {
    return 2.0 * sample_mean(xi) * sample_mean(eta);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i) acc += phi_derivative(kind, xi[i]) * eta[i];
  return acc / n;
}

LionsDirectionalReport lions_directional_check(const MeanFunctional& functional, std::span<const double> xi,
                                               std::span<const double> eta, const std::vector<double>& eps_list) {
  require(!eps_list.empty(), ErrorKind::InvalidArgument, "eps_list is empty");
  LionsDirectionalReport report;
  report.analytic = functional.directional_derivative(xi, eta);
  const double base = functional.evaluate(xi);
  std::vector<double> shifted(xi.size());
  for (double eps : eps_list) {
    require(eps > 0.0, ErrorKind::InvalidArgument, "eps must be positive");
    for (std::size_t i = 0; i < xi.size(); ++i) shifted[i] = xi[i] + eps * eta[i];
    const double q = (functional.evaluate(shifted) - base) / eps;
    report.eps.push_back(eps);
    report.quotients.push_back(q);
    report.abs_errors.push_back(std::abs(q - report.analytic));
  }
  const double roundoff = 1e-9 * (1.0 + std::abs(report.analytic));
  bool monotone = true;
  for (std::size_t k = 1; k < report.abs_errors.size(); ++k) {
    if (report.eps[k] < report.eps[k - 1] && report.abs_errors[k] > report.abs_errors[k - 1] + roundoff) {
      monotone = false;
    }
  }
  report.converged = monotone || report.abs_errors.back() <= roundoff;
  return report;
}

}  // namespace gaussbsde
