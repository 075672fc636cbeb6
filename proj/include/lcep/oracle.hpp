#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lcep/gaussian.hpp"
#include "lcep/gpc.hpp"

namespace lcep {

struct ESSConfig {
    int n_samples = 20000;
    int n_burnin = 2000;
    std::uint64_t seed = 0;
};

/// Elliptical slice sampling for targets N(f; 0, L L') exp(loglik(f)).
/// Rejection-free, tuning-free, deterministic under the seed. Returns one
/// post-burn-in draw per row.
Eigen::MatrixXd ess_sample(const Eigen::MatrixXd& prior_chol_lower,
                           const std::function<double(const Eigen::VectorXd&)>& loglik,
                           const ESSConfig& config);

struct EstimateSE {
    double value;
    double se;
};

/// Sample-based predictive probability at predictive point c: the mean
/// over draws f of Phi(alpha_c' f). The standard error uses batch means
/// to absorb chain autocorrelation.
EstimateSE mc_predictive_prob(const Eigen::MatrixXd& samples, const PredictiveSet& pred, int c);

/// All predictive points at once.
std::vector<EstimateSE> mc_predictive_probs(const Eigen::MatrixXd& samples,
                                            const PredictiveSet& pred);

/// a_opt per point: +1 iff p_hat >= threshold(u); ties toward +1.
std::vector<int> bayes_optimal_actions(const std::vector<double>& p_hat, const BinaryUtility4& u);

struct UtilityEvalReport {
    double u_opt;
    double u_q;
    double u_antiopt;
    double discrepancy;  // u_opt - u_q
    double metric;       // (u_opt - u_q) / (u_opt - u_antiopt)
    double mc_stderr;
};

/// Comb-averaged expected utilities of the q-actions, the optimal actions
/// and their flip, all under the same p_hat estimates, plus the
/// normalized discrepancy metric. Throws DegenerateMetric when best and
/// worst coincide.
UtilityEvalReport evaluate(const std::vector<int>& q_actions, const std::vector<double>& p_hat,
                           const BinaryUtility4& u, const std::vector<double>* p_se = nullptr);

// Quadrature oracles for low-dimensional ground truth.

double trapezoid(const std::function<double(double)>& f, double lo, double hi, int n);

double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi,
                        double tol = 1e-12);

struct GridMoments1D {
    double mass;
    double mean;
    double var;
};

GridMoments1D grid_moments_1d(const std::function<double(double)>& unnorm_pdf, double lo,
                              double hi, int n);

struct GridMoments2D {
    double mass;
    Eigen::Vector2d mean;
    Eigen::Matrix2d cov;
};

GridMoments2D grid_moments_2d(const std::function<double(double, double)>& unnorm_pdf, double lo,
                              double hi, int n);

/// Same moments from precomputed grid values (vals(i, j) at x_i, y_j).
GridMoments2D grid_moments_2d(const Eigen::MatrixXd& vals, double lo, double hi);

/// Central finite differences of a tilted log-normalizer with respect to
/// the cavity natural parameters, in the same convention as
/// NaturalGradient (off-diagonal theta2 entries perturbed as symmetric
/// pairs).
NaturalGradient fd_natural_gradient(const std::function<double(const GaussianNatural&)>& log_z,
                                    const GaussianNatural& at, double eps = 1e-5);

/// Max-norm relative error between an analytic gradient and a reference.
double gradient_rel_error(const NaturalGradient& analytic, const NaturalGradient& reference);

}  // namespace lcep
