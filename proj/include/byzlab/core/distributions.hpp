#pragma once

namespace byzlab {

double std_normal_cdf(double z);
double std_normal_pdf(double z);

/// Inverse of the standard normal CDF for p in (0, 1). Acklam's rational
/// approximation refined by one Newton step; absolute error below 1e-9.
double std_normal_inv_cdf(double p);

/// Regularized lower incomplete gamma function P(a, x).
double regularized_gamma_p(double a, double x);

double chi_square_cdf(double x, int dof);

/// Quantile of the chi-square distribution by bisection on the CDF.
double chi_square_quantile(double q, int dof);

}  // namespace byzlab
