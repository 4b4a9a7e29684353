#include "gaussbsde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gaussbsde/errors.hpp"
#include "gaussbsde/parallel.hpp"
#include "gaussbsde/regression.hpp"
#include "gaussbsde/rng.hpp"

namespace gaussbsde {

void SolverConfig::validate(double lipschitz_f, double total_variance) const {
  require(n_time >= 2, ErrorKind::InvalidArgument, "n_time must be >= 2");
  require(basis_degree >= 0, ErrorKind::InvalidArgument, "basis_degree must be >= 0");
  require(n_particles >= 10 * (basis_degree + 1), ErrorKind::InvalidArgument,
          "n_particles must be >= 10 (basis_degree + 1)");
  require(ridge >= 0.0, ErrorKind::InvalidArgument, "ridge must be >= 0");
  require(picard_max_iter >= 1, ErrorKind::InvalidArgument, "picard_max_iter must be >= 1");
  require(picard_tol > 0.0, ErrorKind::InvalidArgument, "picard_tol must be > 0");
  const double ds = total_variance / n_time;
  if (ds * lipschitz_f > 0.5) {
    std::ostringstream msg;
    msg << "explicit scheme needs ds * L_f <= 0.5 (ds = " << ds << ", L_f = " << lipschitz_f
        << "); increase n_time";
    fail(ErrorKind::InvalidArgument, msg.str());
  }
}

LawFeatures ParticleCloud::features(Eigen::Index node) const {
  const auto n = static_cast<std::size_t>(w.rows());
  return law_features({w.col(node).data(), n}, {y.col(node).data(), n}, {z.col(node).data(), n});
}

double NodeFit::operator()(double w) const {
  if (scale <= 0.0 || coef.size() == 1) return coef(0);
  const auto m = static_cast<int>(coef.size());
  double he[16];
  hermite_values(w / scale, m - 1, he);
  double acc = 0.0;
  for (int k = 0; k < m; ++k) acc += coef(k) * he[k];
  return acc;
}

Eigen::VectorXd NodeFit::monomial(int degree) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(degree + 1);
  if (scale <= 0.0 || coef.size() == 1) {
    out(0) = coef(0);
    return out;
  }
  out.head(coef.size()) = hermite_to_monomial(coef, scale);
  return out;
}

int SolutionField::node_of(double s) const {
  const double tol = 1e-12 * std::max(1.0, s_grid.back());
  const auto it = std::lower_bound(s_grid.begin(), s_grid.end(), s - tol);
  if (it != s_grid.end() && std::abs(*it - s) <= tol) return static_cast<int>(it - s_grid.begin());
  return -1;
}

namespace {

// One backward sweep of the regression scheme with frozen law features.
struct BackwardEngine {
  const GeneratorSpec& generator;
  const SolverConfig& config;
  std::vector<double> s;                // clock nodes, size N + 1
  std::vector<double> generator_time;   // U(s_i)
  Eigen::MatrixXd state;                // regression state per node
  std::vector<double> state_scale;      // sd of the state; 0 when deterministic
  Eigen::MatrixXd x_arg;                // x argument of the generator
  Eigen::VectorXd terminal;

  struct Pass {
    Eigen::MatrixXd y;
    Eigen::MatrixXd z;
    std::vector<NodeFit> u;
    std::vector<NodeFit> v;
    Eigen::VectorXd first_residual;
  };

  int basis_size(Eigen::Index node) const {
    return state_scale[static_cast<std::size_t>(node)] > 0.0 ? config.basis_degree + 1 : 1;
  }

  Eigen::MatrixXd basis(Eigen::Index node) const {
    const Eigen::Index n = state.rows();
    const int m = basis_size(node);
    Eigen::MatrixXd h(n, m);
    const double scale = state_scale[static_cast<std::size_t>(node)];
    double he[16];
    for (Eigen::Index p = 0; p < n; ++p) {
      hermite_values(m > 1 ? state(p, node) / scale : 0.0, m - 1, he);
      for (int k = 0; k < m; ++k) h(p, k) = he[k];
    }
    return h;
  }

  NodeFit fit_values(Eigen::Index node, const Eigen::MatrixXd& h, const Eigen::VectorXd& values) const {
    NodeFit fit;
    fit.scale = h.cols() > 1 ? state_scale[static_cast<std::size_t>(node)] : 0.0;
    if (h.cols() == 1) {
      fit.coef = Eigen::VectorXd::Constant(1, values.mean());
    } else {
      fit.coef = ridge_least_squares(h, values, config.ridge).coef;
    }
    return fit;
  }

  Pass run(const std::vector<LawFeatures>& features, bool zero_generator) const {
    const Eigen::Index n = state.rows();
    const auto last = static_cast<Eigen::Index>(s.size()) - 1;
    Pass pass;
    pass.y.resize(n, last + 1);
    pass.z.resize(n, last + 1);
    pass.u.resize(static_cast<std::size_t>(last) + 1);
    pass.v.resize(static_cast<std::size_t>(last) + 1);
    pass.y.col(last) = terminal;
    {
      const Eigen::MatrixXd h = basis(last);
      pass.u[static_cast<std::size_t>(last)] = fit_values(last, h, terminal);
    }

    for (Eigen::Index i = last - 1; i >= 0; --i) {
      const double ds = s[static_cast<std::size_t>(i) + 1] - s[static_cast<std::size_t>(i)];
      const double root_ds = std::sqrt(ds);
      const Eigen::MatrixXd h = basis(i);
      const int m = static_cast<int>(h.cols());
      Eigen::MatrixXd design(n, 3 * m);
      design.leftCols(m) = h;
      for (Eigen::Index p = 0; p < n; ++p) {
        const double eta = (state(p, i + 1) - state(p, i)) / root_ds;
        const double eta2 = (eta * eta - 1.0) * M_SQRT1_2;
        for (int k = 0; k < m; ++k) {
          design(p, m + k) = h(p, k) * eta;
          design(p, 2 * m + k) = h(p, k) * eta2;
        }
      }
      const Eigen::VectorXd coef = ridge_least_squares(design, pass.y.col(i + 1), config.ridge).coef;
      const Eigen::VectorXd cond_mean = h * coef.head(m);
      const Eigen::VectorXd zcoef = coef.segment(m, m) / root_ds;
      pass.z.col(i) = h * zcoef;
      NodeFit vfit;
      vfit.coef = zcoef;
      vfit.scale = m > 1 ? state_scale[static_cast<std::size_t>(i)] : 0.0;
      pass.v[static_cast<std::size_t>(i)] = vfit;

      if (zero_generator) {
        pass.y.col(i) = cond_mean;
      } else {
        const double t = generator_time[static_cast<std::size_t>(i)];
        const LawFeatures& nu = features[static_cast<std::size_t>(i)];
        for (Eigen::Index p = 0; p < n; ++p) {
          pass.y(p, i) = cond_mean(p) + ds * eval_generator(generator, t, x_arg(p, i), cond_mean(p),
                                                            pass.z(p, i), nu);
        }
      }
      pass.u[static_cast<std::size_t>(i)] = fit_values(i, h, pass.y.col(i));
      if (m == 1) {
        // Deterministic node: first-order expansion u + Z w.
        NodeFit& u0 = pass.u[static_cast<std::size_t>(i)];
        u0.coef = Eigen::Vector2d(u0.coef(0), zcoef(0));
        u0.scale = 1.0;
      }
      if (i == 0) pass.first_residual = pass.y.col(1) - design * coef;
    }
    pass.z.col(last) = pass.z.col(last - 1);
    pass.v[static_cast<std::size_t>(last)] = pass.v[static_cast<std::size_t>(last) - 1];
    return pass;
  }
};

double column_w2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Eigen::Index col) {
  const auto n = static_cast<std::size_t>(a.rows());
  return wasserstein_1d(std::span<const double>(a.col(col).data(), n), std::span<const double>(b.col(col).data(), n),
                        2.0);
}

std::vector<LawFeatures> features_from(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const Eigen::MatrixXd* z) {
  std::vector<LawFeatures> out(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    auto& f = out[static_cast<std::size_t>(i)];
    f.mean_x = x.col(i).mean();
    f.mean_y = y.col(i).mean();
    f.mean_z = z ? z->col(i).mean() : 0.0;
    f.second_x = x.col(i).squaredNorm() / static_cast<double>(x.rows());
    f.second_y = y.col(i).squaredNorm() / static_cast<double>(y.rows());
    f.second_z = z ? z->col(i).squaredNorm() / static_cast<double>(z->rows()) : 0.0;
  }
  return out;
}

struct PicardResult {
  BackwardEngine::Pass pass;
  std::vector<double> log;
  int iterations = 0;
};

PicardResult picard_solve(const BackwardEngine& engine, const SolverConfig& config) {
  PicardResult result;
  const std::vector<LawFeatures> initial =
      features_from(engine.x_arg, Eigen::MatrixXd::Constant(engine.x_arg.rows(), engine.x_arg.cols(),
                                                             engine.terminal.mean()),
                    nullptr);
  if (engine.generator.law_free()) {
    result.pass = engine.run(initial, false);
    result.iterations = 1;
    return result;
  }
  // Iterate 0: terminal propagated backward with f = 0 and Z = 0.
  BackwardEngine::Pass prev = engine.run(initial, true);
  std::vector<LawFeatures> features = features_from(engine.x_arg, prev.y, nullptr);
  for (int k = 1; k <= config.picard_max_iter; ++k) {
    BackwardEngine::Pass cur = engine.run(features, false);
    double change = 0.0;
    for (Eigen::Index i = 0; i < cur.y.cols(); ++i) change = std::max(change, column_w2(cur.y, prev.y, i));
    result.log.push_back(change);
    features = features_from(engine.x_arg, cur.y, &cur.z);
    prev = std::move(cur);
    result.iterations = k;
    if (change < config.picard_tol) {
      result.pass = std::move(prev);
      return result;
    }
  }
  std::ostringstream msg;
  msg << "Picard iteration did not reach tol " << config.picard_tol << " in " << config.picard_max_iter
      << " iterations; last changes:";
  for (std::size_t k = result.log.size() >= 2 ? result.log.size() - 2 : 0; k < result.log.size(); ++k) {
    msg << ' ' << result.log[k];
  }
  fail(ErrorKind::PicardDivergence, msg.str());
}

// Brownian increments on the given node set, one stream per particle.
Eigen::MatrixXd brownian_particles(const std::vector<double>& s, int n_particles, bool antithetic,
                                   std::uint64_t seed, std::uint64_t domain, Eigen::VectorXd* offset,
                                   double offset_variance) {
  const auto cols = static_cast<Eigen::Index>(s.size());
  Eigen::MatrixXd w(n_particles, cols);
  if (offset) offset->resize(n_particles);
  const auto n = static_cast<std::size_t>(n_particles);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      const auto row = static_cast<Eigen::Index>(p);
      const bool mirror = antithetic && p % 2 == 1;
      const std::size_t source = mirror ? p - 1 : p;
      CounterRng rng(stream_key(seed, domain, source));
      const double sign = mirror ? -1.0 : 1.0;
      if (offset) (*offset)(row) = sign * std::sqrt(offset_variance) * rng.normal();
      w(row, 0) = 0.0;
      for (Eigen::Index i = 1; i < cols; ++i) {
        const double ds = s[static_cast<std::size_t>(i)] - s[static_cast<std::size_t>(i) - 1];
        w(row, i) = w(row, i - 1) + sign * std::sqrt(ds) * rng.normal();
      }
    }
  }, 1024);
  return w;
}

}  // namespace

VarianceClock solver_clock(const GaussianDriverSpec& driver, const SolverConfig& config) {
  return build_clock(driver, 8 * config.n_time + 1);
}

std::pair<SolutionField, ParticleCloud> solve_auxiliary(const ScenarioSpec& scenario, const VarianceClock& clock,
                                                        const SolverConfig& config, std::uint64_t seed) {
  scenario.validate();
  const double total = clock.total_variance();
  config.validate(scenario.generator.lipschitz(), total);
  const int steps = config.n_time;

  BackwardEngine engine{scenario.generator, config, {}, {}, {}, {}, {}, {}};
  engine.s.resize(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) engine.s[static_cast<std::size_t>(i)] = total * i / steps;
  engine.generator_time.resize(engine.s.size());
  for (std::size_t i = 0; i < engine.s.size(); ++i) engine.generator_time[i] = clock.invert(engine.s[i]);
  engine.state = brownian_particles(engine.s, config.n_particles, config.antithetic, seed,
                                    rng_domain::kSolverParticles, nullptr, 0.0);
  engine.state_scale.resize(engine.s.size());
  for (std::size_t i = 0; i < engine.s.size(); ++i) engine.state_scale[i] = std::sqrt(engine.s[i]);
  engine.x_arg = engine.state;

  LawFeatures terminal_law;
  terminal_law.mean_x = engine.state.col(steps).mean();
  engine.terminal.resize(config.n_particles);
  for (Eigen::Index p = 0; p < config.n_particles; ++p) {
    engine.terminal(p) = eval_terminal(scenario.terminal, engine.state(p, steps), terminal_law);
  }

  PicardResult solved = picard_solve(engine, config);

  SolutionField field{clock, engine.s, std::move(solved.pass.u), std::move(solved.pass.v), config.basis_degree,
                      std::move(solved.log), solved.iterations};
  ParticleCloud cloud{engine.s, std::move(engine.state), std::move(solved.pass.y), std::move(solved.pass.z)};
  return {std::move(field), std::move(cloud)};
}

TransferValue transfer_evaluate(const SolutionField& field, double t, double x) {
  const double s = field.clock.value(t);  // OutOfRange outside [0, T]
  const auto& grid = field.s_grid;
  const double tol = 1e-12 * std::max(1.0, grid.back());
  if (s > grid.back() + tol) fail(ErrorKind::OutOfRange, "clock time beyond the solved horizon");
  const int exact = field.node_of(s);
  if (exact >= 0) {
    const auto node = static_cast<std::size_t>(exact);
    return {field.u_tilde(node, x), field.v_tilde(node, x)};
  }
  const auto it = std::upper_bound(grid.begin(), grid.end(), s);
  const auto right = static_cast<std::size_t>(it - grid.begin());
  const auto left = right - 1;
  const double w = (s - grid[left]) / (grid[right] - grid[left]);
  return {(1.0 - w) * field.u_tilde(left, x) + w * field.u_tilde(right, x), field.v_tilde(left, x)};
}

RepresentationEstimate representation_solve(const ScenarioSpec& scenario, const VarianceClock& clock, double t,
                                            double eps, double y, double z, const SolverConfig& config,
                                            std::uint64_t seed) {
  scenario.validate();
  if (scenario.generator.c1 != 0.0) {
    fail(ErrorKind::UnsupportedScenario, "representation needs a generator without pointwise x dependence (c1 = 0)");
  }
  require(t >= 0.0 && eps > 0.0 && t + eps <= clock.horizon() * (1 + 1e-12), ErrorKind::OutOfRange,
          "representation needs 0 <= t < t + eps <= T");
  RepresentationEstimate out;
  out.v_start = clock.value(t);
  out.v_end = clock.value(std::min(t + eps, clock.horizon()));
  const double width = out.v_end - out.v_start;
  if (!(width > 0.0)) fail(ErrorKind::DegenerateInterval, "V_{t+eps} equals V_t");
  config.validate(scenario.generator.lipschitz(), width);

  const int steps = config.n_time;
  BackwardEngine engine{scenario.generator, config, {}, {}, {}, {}, {}, {}};
  engine.s.resize(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) engine.s[static_cast<std::size_t>(i)] = out.v_start + width * i / steps;
  engine.s.back() = out.v_end;
  engine.generator_time.resize(engine.s.size());
  for (std::size_t i = 0; i < engine.s.size(); ++i) engine.generator_time[i] = clock.invert(engine.s[i]);

  Eigen::VectorXd offset;
  engine.state = brownian_particles(engine.s, config.n_particles, true, seed, rng_domain::kRepresentation, &offset,
                                    out.v_start);
  engine.state_scale.resize(engine.s.size());
  for (std::size_t i = 0; i < engine.s.size(); ++i) engine.state_scale[i] = std::sqrt(engine.s[i] - engine.s[0]);
  engine.x_arg = engine.state.colwise() + offset;
  engine.terminal = (y + z * engine.state.col(steps).array()).matrix();

  PicardResult solved = picard_solve(engine, config);
  out.picard_iterations = solved.iterations;
  out.value = solved.pass.y.col(0).mean();

  // Per-particle control-variate corrected estimates of the time-t value.
  const Eigen::VectorXd estimate = solved.pass.y.col(0) + solved.pass.first_residual;
  const double n = static_cast<double>(estimate.size());
  const double var = (estimate.array() - estimate.mean()).square().sum() / (n - 1.0);
  out.std_error = std::sqrt(var / n);
  if (out.v_start > 0.0) {
    // Dependence of the time-t value on the F_{V_t}-measurable state.
    const Eigen::ArrayXd u = offset.array() / std::sqrt(out.v_start);
    const double mu = u.mean();
    const double su2 = (u - mu).square().mean();
    if (su2 > 0.0) {
      const double slope = ((u - mu) * (estimate.array() - estimate.mean())).mean() / su2;
      out.determinism_sd = std::abs(slope) * std::sqrt(su2);
    }
  }
  return out;
}

}  // namespace gaussbsde
