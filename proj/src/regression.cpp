#include "gaussbsde/regression.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gaussbsde/errors.hpp"

namespace gaussbsde {

void hermite_values(double u, int degree, double* out) {
  out[0] = 1.0;
  if (degree >= 1) out[1] = u;
  for (int k = 1; k < degree; ++k) out[k + 1] = u * out[k] - k * out[k - 1];
}

Eigen::VectorXd hermite_to_monomial(const Eigen::VectorXd& coef, double scale) {
  const auto m = coef.size();
  // table(k, j): coefficient of u^j in He_k(u)
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(m, m);
  table(0, 0) = 1.0;
  if (m > 1) table(1, 1) = 1.0;
  for (Eigen::Index k = 1; k + 1 < m; ++k) {
    for (Eigen::Index j = 0; j < m; ++j) {
      double v = -static_cast<double>(k) * table(k - 1, j);
      if (j > 0) v += table(k, j - 1);
      table(k + 1, j) = v;
    }
  }
  Eigen::VectorXd mono = table.transpose() * coef;
  if (m > 1) {
    require(scale > 0.0, ErrorKind::InvalidArgument, "Hermite scale must be positive");
    double factor = 1.0;
    for (Eigen::Index j = 1; j < m; ++j) {
      factor /= scale;
      mono(j) *= factor;
    }
  }
  return mono;
}

double polyval(const Eigen::VectorXd& monomial, double x) {
  double acc = 0.0;
  for (Eigen::Index j = monomial.size() - 1; j >= 0; --j) acc = acc * x + monomial(j);
  return acc;
}

Eigen::VectorXd polyder(const Eigen::VectorXd& monomial) {
  if (monomial.size() <= 1) return Eigen::VectorXd::Zero(1);
  Eigen::VectorXd d(monomial.size() - 1);
  for (Eigen::Index j = 1; j < monomial.size(); ++j) d(j - 1) = static_cast<double>(j) * monomial(j);
  return d;
}

LeastSquaresFit ridge_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& target, double ridge) {
  require(design.rows() == target.size(), ErrorKind::InvalidArgument, "design and target sizes differ");
  require(ridge >= 0.0, ErrorKind::InvalidArgument, "ridge must be nonnegative");
  const double n = static_cast<double>(design.rows());
  const auto m = design.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(design.transpose(), 1.0 / n);
  gram = gram.selfadjointView<Eigen::Lower>();
  gram.diagonal().array() += ridge;
  const Eigen::VectorXd rhs = design.transpose() * target / n;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  LeastSquaresFit fit;
  fit.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (!(fit.condition <= 1e12)) {
    fail(ErrorKind::RegressionIllConditioned,
         "normal equations condition estimate " + std::to_string(fit.condition) + " exceeds 1e12");
  }
  fit.coef = gram.ldlt().solve(rhs);
  return fit;
}

Eigen::VectorXd regress_conditional(int basis_degree, double ridge, std::span<const double> x_samples,
                                    std::span<const double> targets) {
  require(basis_degree >= 0, ErrorKind::InvalidArgument, "basis degree must be nonnegative");
  require(x_samples.size() == targets.size(), ErrorKind::InvalidArgument, "samples and targets differ in size");
  const auto n = static_cast<Eigen::Index>(x_samples.size());
  require(n >= 10 * (basis_degree + 1), ErrorKind::InvalidArgument,
          "regression needs at least 10 (degree + 1) samples");
  double second = 0.0;
  for (double x : x_samples) second += x * x;
  const double scale = std::sqrt(second / static_cast<double>(n));
  const int degree = scale > 0.0 ? basis_degree : 0;

  Eigen::MatrixXd design(n, degree + 1);
  Eigen::VectorXd y(n);
  std::vector<double> he(static_cast<std::size_t>(degree) + 1);
  for (Eigen::Index p = 0; p < n; ++p) {
    hermite_values(degree > 0 ? x_samples[p] / scale : 0.0, degree, he.data());
    for (int k = 0; k <= degree; ++k) design(p, k) = he[k];
    y(p) = targets[p];
  }
  const auto fit = ridge_least_squares(design, y, ridge);
  Eigen::VectorXd mono = Eigen::VectorXd::Zero(basis_degree + 1);
  mono.head(degree + 1) = hermite_to_monomial(fit.coef, degree > 0 ? scale : 1.0);
  return mono;
}

}  // namespace gaussbsde
