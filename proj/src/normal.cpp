#include "lcep/normal.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lcep {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112353;
constexpr double kSqrtHalf = 0.70710678118654752440084436210485;

// Tail series for log Phi(x), x << 0:
//   Phi(x) = phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8 - ...)
double logcdf_tail(double x) {
    const double ix2 = 1.0 / (x * x);
    const double series = 1.0 + ix2 * (-1.0 + ix2 * (3.0 + ix2 * (-15.0 + ix2 * 105.0)));
    return -0.5 * x * x - 0.5 * kLogTwoPi - std::log(-x) + std::log(series);
}

}  // namespace

double normal_pdf(double x) { return std::exp(-0.5 * x * x - 0.5 * kLogTwoPi); }

double normal_logpdf(double x) { return -0.5 * x * x - 0.5 * kLogTwoPi; }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kSqrtHalf); }

double normal_logcdf(double x) {
    if (x < -35.0) return logcdf_tail(x);
    return std::log(0.5 * std::erfc(-x * kSqrtHalf));
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p outside (0,1)");

    // Acklam's rational approximation, then two Halley refinements with
    // the erfc-based CDF. The refinement brings the result to within a
    // few ulps of the true quantile.
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};

    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    for (int it = 0; it < 2; ++it) {
        const double e = normal_cdf(x) - p;
        const double u = e / normal_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double inv_mills(double x) { return std::exp(normal_logpdf(x) - normal_logcdf(x)); }

double gaussian_pdf(double x, double mean, double var) {
    return std::exp(gaussian_logpdf(x, mean, var));
}

double gaussian_logpdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (d * d / var + std::log(var) + kLogTwoPi);
}

double gaussian_cdf(double x, double mean, double var) {
    return normal_cdf((x - mean) / std::sqrt(var));
}

double log_sum_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = a > b ? a : b;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace lcep
