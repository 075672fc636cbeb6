#pragma once

#include <Eigen/Dense>

#include "lcep/errors.hpp"

namespace lcep {

/// Proper Gaussian density in mean/covariance form. The constructor
/// rejects asymmetric or non-positive-definite covariances; improper
/// factors live in GaussianNatural instead.
struct GaussianMoment {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    GaussianMoment(Eigen::VectorXd mean_in, Eigen::MatrixXd cov_in);

    static GaussianMoment scalar(double m, double v);

    int dim() const { return static_cast<int>(mean.size()); }

    /// Scalar accessors; valid only for dim() == 1.
    double m() const { return mean(0); }
    double v() const { return cov(0, 0); }
};

/// Gaussian factor in natural parameters (theta1, theta2) with density
/// proportional to exp(theta1' x + x' theta2 x), i.e. theta1 = Sigma^-1 mu
/// and theta2 = -1/2 Sigma^-1 for a proper density. No definiteness is
/// required: sites and cavities may be improper.
struct GaussianNatural {
    Eigen::VectorXd theta1;
    Eigen::MatrixXd theta2;

    GaussianNatural(Eigen::VectorXd t1, Eigen::MatrixXd t2);

    static GaussianNatural zero(int dim);
    static GaussianNatural scalar(double t1, double t2);

    int dim() const { return static_cast<int>(theta1.size()); }

    /// True iff -2*theta2 admits a Cholesky factorization. No jitter is
    /// applied; a failure means the factor is treated as improper.
    bool is_proper() const;
};

/// Mean parameters eta1 = E[x], eta2 = E[x x'].
struct GaussianMeanParams {
    Eigen::VectorXd eta1;
    Eigen::MatrixXd eta2;

    int dim() const { return static_cast<int>(eta1.size()); }
};

GaussianNatural to_natural(const GaussianMoment& g);

/// Throws ImproperDensity if g is not proper.
GaussianMoment to_moment(const GaussianNatural& g);

GaussianMeanParams to_mean_params(const GaussianMoment& g);
GaussianMeanParams to_mean_params(const GaussianNatural& g);

/// Throws ImproperDensity if eta2 - eta1 eta1' is not positive definite.
GaussianMoment moment_from_mean_params(const GaussianMeanParams& g);
GaussianNatural natural_from_mean_params(const GaussianMeanParams& g);

/// Componentwise natural-parameter sum (sign +1, site multiplication) or
/// difference (sign -1, cavity division). The result may be improper.
GaussianNatural factor_combine(const GaussianNatural& a, const GaussianNatural& b, int sign);

struct GaussianProductResult {
    double log_evidence;
    GaussianMoment posterior;
};

/// N(x; a, A) N(x; b, B) = N(a; b, A+B) N(x; posterior). Returns the log
/// evidence log N(a; b, A+B) together with the posterior factor.
GaussianProductResult gaussian_product(const GaussianMoment& a, const GaussianMoment& b);

double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const Eigen::MatrixXd& cov);

/// Gradient of a tilted log-normalizer with respect to the cavity's
/// natural parameters, in the convention where mean parameters satisfy
/// eta_new = eta_cavity + grad.
struct NaturalGradient {
    Eigen::VectorXd g1;
    Eigen::MatrixXd g2;
};

/// Chain rule from moment-space gradients (d logZ / d mean, d logZ / d cov)
/// to natural-parameter gradients at the given cavity.
NaturalGradient natural_gradient(const GaussianMoment& cavity, const Eigen::VectorXd& grad_mean,
                                 const Eigen::MatrixXd& grad_cov);

/// Scalar special case of the chain rule above.
NaturalGradient natural_gradient_scalar(double m, double v, double grad_m, double grad_v);

/// Projection step: mean parameters of the tilted distribution,
/// eta_new = eta(cavity) + grad. Throws NonPosteriorizableMoments when the
/// implied covariance is not positive definite.
GaussianMeanParams moment_match(const GaussianNatural& cavity, const NaturalGradient& grad);

}  // namespace lcep
