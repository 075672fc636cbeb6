#pragma once

namespace lcep {

/// Standard-normal special functions. normal_cdf and normal_quantile are
/// accurate to well under 1e-12 absolute over the full double range; the
/// log forms stay finite far into the tails where the plain forms
/// underflow.

double normal_pdf(double x);
double normal_logpdf(double x);

double normal_cdf(double x);
double normal_logcdf(double x);

/// Inverse standard-normal CDF on (0,1). Throws std::domain_error outside.
double normal_quantile(double p);

/// Inverse Mills ratio pdf(x)/cdf(x), stable for large negative x.
double inv_mills(double x);

double gaussian_pdf(double x, double mean, double var);
double gaussian_logpdf(double x, double mean, double var);

/// CDF of N(mean, var) evaluated at x.
double gaussian_cdf(double x, double mean, double var);

double log_sum_exp(double a, double b);

}  // namespace lcep
