#pragma once

#include <utility>
#include <vector>

#include "lcep/ep.hpp"

namespace lcep {

struct RBFKernelParams {
    double sigma2;
    double ell;
    double jitter;

    /// log sigma = 1.5, log ell = 1.0 (natural logs), jitter 1e-8 sigma2.
    static RBFKernelParams defaults();
    static RBFKernelParams from_log(double log_sigma, double log_ell);

    void validate() const;
};

struct GPCDataset {
    Eigen::MatrixXd X;  // N x D inputs
    Eigen::VectorXi y;  // labels, strictly +/-1

    int n() const { return static_cast<int>(X.rows()); }
    void validate() const;
};

/// u_ij is the utility of selecting action i when outcome j occurred,
/// with actions and outcomes coded -1 -> 0, +1 -> 1.
struct BinaryUtility4 {
    double u00;
    double u01;
    double u10;
    double u11;

    /// (u00 - u10) / ((u00 - u10) - (u01 - u11)); must lie strictly in
    /// (0,1), otherwise BiasUndefined.
    double threshold() const;

    /// Probit-scale decision bias b = Phi^-1(threshold).
    double bias() const;
};

/// K_ij = sigma2 exp(-||x_i - x_j||^2 / (2 ell^2)) + jitter on the
/// diagonal. Throws CholeskyFailure if the result is not numerically
/// positive definite.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const RBFKernelParams& params);

/// Cross-covariances k(x*_c, x_j), one row per point in Xstar.
Eigen::MatrixXd cross_kernel(const Eigen::MatrixXd& Xstar, const Eigen::MatrixXd& X,
                             const RBFKernelParams& params);

/// Fixed predictive locations with precomputed geometry against the
/// training kernel: columns of kinv_k hold K^-1 k_c, vbar holds the
/// conditional prior variances k** - k_c' K^-1 k_c, and columns of alpha
/// hold K^-1 k_c / sqrt(1 + vbar_c).
struct PredictiveSet {
    Eigen::MatrixXd points;  // C x D
    Eigen::MatrixXd kinv_k;  // N x C
    Eigen::VectorXd vbar;    // C
    Eigen::MatrixXd alpha;   // N x C

    int size() const { return static_cast<int>(vbar.size()); }
};

PredictiveSet make_predictive_set(const Eigen::MatrixXd& Xtrain, const RBFKernelParams& params,
                                  const Eigen::MatrixXd& points);

struct GPCPosteriorApprox {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
};

/// Latent predictive moments (m_f*, v_f*) at predictive point c:
/// m = k* K^-1 mu, v = k** - k* K^-1 k*' + k* K^-1 Sigma K^-1 k*'.
/// Negative v from roundoff is clamped to 0 and counted.
std::pair<double, double> posterior_predictive(const GPCPosteriorApprox& approx,
                                               const PredictiveSet& pred, int c,
                                               long* clamp_count = nullptr);

/// p(y* = +1) = Phi(m / sqrt(1 + v)).
double predictive_prob(double m, double v);

/// Expected utility of action a (+1 or -1) when p_plus = p(y* = +1).
double conditional_expected_utility(double p_plus, const BinaryUtility4& u, int action);

/// a_q = sign(m / sqrt(1+v) - b); exact ties break toward +1.
int q_action(double m, double v, const BinaryUtility4& u);

/// Probit data-site log-normalizer log Phi(y m / sqrt(1+v)) and gradients.
TiltedScalar probit_site(double cav_mean, double cav_var, int label);

struct UtilitySiteEval {
    double log_z;
    Eigen::VectorXd grad_mean;
    Eigen::MatrixXd grad_cov;
};

/// Comb-averaged utility-site log-normalizer under the cavity over the
/// training latents, with analytic moment-space gradients. Throws
/// ZeroUtilityMass when the averaged utility is not positive.
UtilitySiteEval utility_site(const GaussianMoment& cavity, const BinaryUtility4& u,
                             const std::vector<int>& actions, const PredictiveSet& pred);

/// GP probit classification model: one probit site per training point
/// (scalar support on its own coordinate), optionally one full-rank
/// utility site over the predictive comb.
class GPCModel : public TiltedModel {
  public:
    /// Standard EP model (no utility site).
    GPCModel(GPCDataset data, const RBFKernelParams& kernel);

    /// Loss-calibrated model with the utility site over `pred`.
    GPCModel(GPCDataset data, const RBFKernelParams& kernel, BinaryUtility4 u, PredictiveSet pred);

    int dim() const override { return data_.n(); }
    int n_data_sites() const override { return data_.n(); }
    bool has_utility_site() const override { return with_utility_; }

    SiteProjection project_data_site(int i, const GaussianMoment& cavity) const override;
    SiteProjection project_utility_site(const GaussianMoment& cavity,
                                        std::vector<int>& actions) const override;

    GaussianNatural prior() const;
    const Eigen::MatrixXd& kernel() const { return K_; }
    const GPCDataset& data() const { return data_; }
    const PredictiveSet& predictive_set() const { return pred_; }
    long clamped_predictive_variances() const { return clamp_count_; }

  private:
    GPCDataset data_;
    Eigen::MatrixXd K_;
    GaussianNatural prior_;
    bool with_utility_ = false;
    BinaryUtility4 utility_{1.0, 0.0, 0.0, 1.0};
    PredictiveSet pred_;
    mutable long clamp_count_ = 0;
};

struct GPCRunResult {
    /// Data-site product: the approximation to the posterior.
    GPCPosteriorApprox q;
    /// Full product including the utility site (equals q for standard EP).
    GPCPosteriorApprox q_bar;
    std::vector<int> actions;
    Diagnostics diagnostics;
    long clamped_predictive_variances = 0;
};

GPCRunResult ep_gpc(const GPCDataset& data, const RBFKernelParams& kernel, const EPConfig& config);

GPCRunResult loss_ep_gpc(const GPCDataset& data, const RBFKernelParams& kernel,
                         const BinaryUtility4& u, const PredictiveSet& pred,
                         const EPConfig& config);

/// q_action applied at every predictive point of `pred` under `approx`.
std::vector<int> q_actions_for(const GPCPosteriorApprox& approx, const PredictiveSet& pred,
                               const BinaryUtility4& u, long* clamp_count = nullptr);

}  // namespace lcep
