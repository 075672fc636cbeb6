#include "lcep/gpc.hpp"

#include <cmath>

#include "lcep/normal.hpp"

namespace lcep {

RBFKernelParams RBFKernelParams::defaults() { return from_log(1.5, 1.0); }

RBFKernelParams RBFKernelParams::from_log(double log_sigma, double log_ell) {
    const double sigma2 = std::exp(2.0 * log_sigma);
    return RBFKernelParams{sigma2, std::exp(log_ell), 1e-8 * sigma2};
}

void RBFKernelParams::validate() const {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("RBFKernelParams: sigma2 must be positive");
    if (!(ell > 0.0)) throw std::invalid_argument("RBFKernelParams: ell must be positive");
    if (!(jitter >= 0.0)) throw std::invalid_argument("RBFKernelParams: jitter must be >= 0");
}

void GPCDataset::validate() const {
    if (X.rows() != y.size()) throw DimensionMismatch("GPCDataset: X/y size mismatch");
    for (int i = 0; i < y.size(); ++i)
        if (y(i) != 1 && y(i) != -1)
            throw std::invalid_argument("GPCDataset: labels must be +/-1");
}

double BinaryUtility4::threshold() const {
    const double num = u00 - u10;
    const double den = (u00 - u10) - (u01 - u11);
    if (den == 0.0) throw BiasUndefined("BinaryUtility4: utility gaps cancel");
    const double t = num / den;
    if (!(t > 0.0 && t < 1.0)) throw BiasUndefined("BinaryUtility4: threshold outside (0,1)");
    return t;
}

double BinaryUtility4::bias() const { return normal_quantile(threshold()); }

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& X, const RBFKernelParams& params) {
    params.validate();
    const Eigen::MatrixXd K =
        cross_kernel(X, X, params) +
        params.jitter * Eigen::MatrixXd::Identity(X.rows(), X.rows());
    if (Eigen::LLT<Eigen::MatrixXd>(K).info() != Eigen::Success)
        throw CholeskyFailure("kernel_matrix: K + jitter I not positive definite");
    return K;
}

Eigen::MatrixXd cross_kernel(const Eigen::MatrixXd& Xstar, const Eigen::MatrixXd& X,
                             const RBFKernelParams& params) {
    if (Xstar.cols() != X.cols()) throw DimensionMismatch("cross_kernel: input dims differ");
    Eigen::MatrixXd out(Xstar.rows(), X.rows());
    const double inv2l2 = 1.0 / (2.0 * params.ell * params.ell);
    for (int i = 0; i < Xstar.rows(); ++i)
        for (int j = 0; j < X.rows(); ++j)
            out(i, j) = params.sigma2 *
                        std::exp(-(Xstar.row(i) - X.row(j)).squaredNorm() * inv2l2);
    return out;
}

PredictiveSet make_predictive_set(const Eigen::MatrixXd& Xtrain, const RBFKernelParams& params,
                                  const Eigen::MatrixXd& points) {
    const Eigen::MatrixXd K = kernel_matrix(Xtrain, params);
    const Eigen::LLT<Eigen::MatrixXd> llt(K);
    const Eigen::MatrixXd ks = cross_kernel(points, Xtrain, params);  // C x N

    PredictiveSet pred;
    pred.points = points;
    pred.kinv_k = llt.solve(ks.transpose());  // N x C
    pred.vbar.resize(points.rows());
    pred.alpha.resize(Xtrain.rows(), points.rows());
    for (int c = 0; c < points.rows(); ++c) {
        const double kss = params.sigma2;
        double v = kss - ks.row(c).dot(pred.kinv_k.col(c));
        if (v < 0.0) v = 0.0;
        pred.vbar(c) = v;
        pred.alpha.col(c) = pred.kinv_k.col(c) / std::sqrt(1.0 + v);
    }
    return pred;
}

std::pair<double, double> posterior_predictive(const GPCPosteriorApprox& approx,
                                               const PredictiveSet& pred, int c,
                                               long* clamp_count) {
    const auto w = pred.kinv_k.col(c);
    const double m = w.dot(approx.mu);
    double v = pred.vbar(c) + w.dot(approx.sigma * w);
    if (v < 0.0) {
        v = 0.0;
        if (clamp_count) ++*clamp_count;
    }
    return {m, v};
}

double predictive_prob(double m, double v) { return normal_cdf(m / std::sqrt(1.0 + v)); }

double conditional_expected_utility(double p_plus, const BinaryUtility4& u, int action) {
    if (action >= 0) return u.u10 * (1.0 - p_plus) + u.u11 * p_plus;
    return u.u00 * (1.0 - p_plus) + u.u01 * p_plus;
}

int q_action(double m, double v, const BinaryUtility4& u) {
    const double z = m / std::sqrt(1.0 + v);
    return z - u.bias() >= 0.0 ? +1 : -1;
}

TiltedScalar probit_site(double cav_mean, double cav_var, int label) {
    const double y = label >= 0 ? 1.0 : -1.0;
    const double s = std::sqrt(1.0 + cav_var);
    const double z = y * cav_mean / s;
    const double ratio = inv_mills(z);
    const double d_mean = y * ratio / s;
    const double d_var = -0.5 * ratio * z / (1.0 + cav_var);
    return TiltedScalar{normal_logcdf(z), d_mean, d_var};
}

UtilitySiteEval utility_site(const GaussianMoment& cavity, const BinaryUtility4& u,
                             const std::vector<int>& actions, const PredictiveSet& pred) {
    const int n = cavity.dim();
    const int c_count = pred.size();
    if (static_cast<int>(actions.size()) != c_count)
        throw DimensionMismatch("utility_site: one action per predictive point required");

    // Per point: E_cavity[Phi(alpha' f)] = Phi(alpha' mu / sqrt(1 + alpha' Sigma alpha)).
    const Eigen::MatrixXd sigma_alpha = cavity.cov * pred.alpha;      // N x C
    const Eigen::VectorXd h = pred.alpha.transpose() * cavity.mean;   // C

    double z_bar = 0.0;
    Eigen::VectorXd pdf_coef(c_count);
    Eigen::VectorXd cov_coef(c_count);
    Eigen::VectorXd inv_s(c_count);
    for (int c = 0; c < c_count; ++c) {
        const double s2 = 1.0 + pred.alpha.col(c).dot(sigma_alpha.col(c));
        const double s = std::sqrt(s2);
        const double zc = h(c) / s;
        const double pc = normal_cdf(zc);
        const double base = actions[c] >= 0 ? u.u10 : u.u00;
        const double slope = actions[c] >= 0 ? u.u11 - u.u10 : u.u01 - u.u00;
        z_bar += base + slope * pc;
        const double phi = normal_pdf(zc);
        pdf_coef(c) = slope * phi / s;
        cov_coef(c) = -0.5 * slope * phi * zc / s2;
        inv_s(c) = 1.0 / s;
    }
    z_bar /= static_cast<double>(c_count);
    if (!(z_bar > 0.0)) throw ZeroUtilityMass("utility_site: averaged utility not positive");

    const double scale = 1.0 / (z_bar * static_cast<double>(c_count));
    Eigen::VectorXd grad_mean = Eigen::VectorXd::Zero(n);
    for (int c = 0; c < c_count; ++c) grad_mean += (scale * pdf_coef(c)) * pred.alpha.col(c);
    const Eigen::MatrixXd grad_cov =
        pred.alpha * (scale * cov_coef).asDiagonal() * pred.alpha.transpose();

    return UtilitySiteEval{std::log(z_bar), std::move(grad_mean),
                           0.5 * (grad_cov + grad_cov.transpose())};
}

GPCModel::GPCModel(GPCDataset data, const RBFKernelParams& kernel)
    : data_(std::move(data)),
      K_(kernel_matrix(data_.X, kernel)),
      prior_(GaussianNatural::zero(data_.n())) {
    data_.validate();
    const Eigen::LLT<Eigen::MatrixXd> llt(K_);
    const Eigen::MatrixXd prec = llt.solve(Eigen::MatrixXd::Identity(data_.n(), data_.n()));
    prior_ = GaussianNatural(Eigen::VectorXd::Zero(data_.n()),
                             -0.25 * (prec + prec.transpose()));
}

GPCModel::GPCModel(GPCDataset data, const RBFKernelParams& kernel, BinaryUtility4 u,
                   PredictiveSet pred)
    : GPCModel(std::move(data), kernel) {
    with_utility_ = true;
    utility_ = u;
    utility_.threshold();  // validates the bias argument up front
    pred_ = std::move(pred);
}

SiteProjection GPCModel::project_data_site(int i, const GaussianMoment& cavity) const {
    const TiltedScalar t = probit_site(cavity.mean(i), cavity.cov(i, i), data_.y(i));
    return SiteProjection::make_scalar(t.log_z, i, t.d_mean, t.d_var);
}

SiteProjection GPCModel::project_utility_site(const GaussianMoment& cavity,
                                              std::vector<int>& actions) const {
    const GPCPosteriorApprox cav{cavity.mean, cavity.cov};
    actions = q_actions_for(cav, pred_, utility_, &clamp_count_);
    const UtilitySiteEval e = utility_site(cavity, utility_, actions, pred_);
    return SiteProjection::make_full(e.log_z, e.grad_mean, e.grad_cov);
}

GaussianNatural GPCModel::prior() const { return prior_; }

namespace {

GPCPosteriorApprox approx_from_natural(const GaussianNatural& g) {
    const GaussianMoment m = to_moment(g);
    return GPCPosteriorApprox{m.mean, m.cov};
}

}  // namespace

GPCRunResult ep_gpc(const GPCDataset& data, const RBFKernelParams& kernel,
                    const EPConfig& config) {
    const GPCModel model(data, kernel);
    EPResult r = run_ep(model, model.prior(), config);
    GPCRunResult out;
    out.q = approx_from_natural(r.state.q);
    out.q_bar = out.q;
    out.diagnostics = std::move(r.diagnostics);
    out.clamped_predictive_variances = model.clamped_predictive_variances();
    return out;
}

GPCRunResult loss_ep_gpc(const GPCDataset& data, const RBFKernelParams& kernel,
                         const BinaryUtility4& u, const PredictiveSet& pred,
                         const EPConfig& config) {
    const GPCModel model(data, kernel, u, pred);
    LossEPResult r = run_loss_ep(model, model.prior(), config);

    GPCRunResult out;
    out.q_bar = approx_from_natural(r.state.q);
    const int uidx = r.state.utility_index();
    const GaussianNatural q_data = factor_combine(
        r.state.q, r.state.sites[static_cast<std::size_t>(uidx)].params, -1);
    if (q_data.is_proper())
        out.q = approx_from_natural(q_data);
    else
        out.q = out.q_bar;  // degenerate run; surfaced via diagnostics
    out.actions = std::move(r.actions);
    out.diagnostics = std::move(r.diagnostics);
    out.clamped_predictive_variances = model.clamped_predictive_variances();
    return out;
}

std::vector<int> q_actions_for(const GPCPosteriorApprox& approx, const PredictiveSet& pred,
                               const BinaryUtility4& u, long* clamp_count) {
    std::vector<int> actions(static_cast<std::size_t>(pred.size()));
    for (int c = 0; c < pred.size(); ++c) {
        const auto [m, v] = posterior_predictive(approx, pred, c, clamp_count);
        actions[static_cast<std::size_t>(c)] = q_action(m, v, u);
    }
    return actions;
}

}  // namespace lcep
