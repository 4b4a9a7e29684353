#pragma once

#include <span>

#include <Eigen/Dense>

namespace gaussbsde {

/// Probabilists' Hermite polynomials He_0..He_degree at u.
void hermite_values(double u, int degree, double* out);

/// Coefficients of sum_k coef[k] He_k(x / scale) in the monomial basis of x.
Eigen::VectorXd hermite_to_monomial(const Eigen::VectorXd& coef, double scale);

/// Evaluates a monomial-coefficient polynomial (Horner).
double polyval(const Eigen::VectorXd& monomial, double x);
/// Monomial coefficients of the derivative.
Eigen::VectorXd polyder(const Eigen::VectorXd& monomial);

struct LeastSquaresFit {
  Eigen::VectorXd coef;
  double condition = 1.0;
};

/// argmin_c (1/n)|A c - y|^2 + ridge |c|^2 through the normal equations.
/// RegressionIllConditioned when the condition number of the normal matrix
/// exceeds 1e12.
LeastSquaresFit ridge_least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                                    double ridge);

/// Conditional expectation of targets given x on a degree-d polynomial
/// basis. Returns monomial coefficients in x. Requires at least
/// 10 (d + 1) samples.
Eigen::VectorXd regress_conditional(int basis_degree, double ridge, std::span<const double> x_samples,
                                    std::span<const double> targets);

}  // namespace gaussbsde
