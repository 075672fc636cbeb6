#include "lcep/clutter.hpp"

#include <cmath>
#include <limits>

#include "lcep/normal.hpp"

namespace lcep {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void ClutterParams::validate() const {
    if (!(pi > 0.0 && pi < 1.0)) throw std::invalid_argument("ClutterParams: pi outside (0,1)");
    if (!(v_c > 0.0)) throw std::invalid_argument("ClutterParams: v_c must be positive");
    if (!(v_0 > 0.0)) throw std::invalid_argument("ClutterParams: v_0 must be positive");
}

void ReactorUtility::validate() const {
    if (!(H0 < L1 && L1 <= L0 && L0 < H1))
        throw std::invalid_argument("ReactorUtility: requires H0 < L1 <= L0 < H1");
}

TiltedScalar clutter_site(double cav_mean, double cav_var, double y, const ClutterParams& params) {
    const double s = 1.0 + cav_var;
    const double log_signal =
        params.pi < 1.0 ? std::log1p(-params.pi) + gaussian_logpdf(y, cav_mean, s) : kNegInf;
    const double log_clutter =
        params.pi > 0.0 ? std::log(params.pi) + gaussian_logpdf(y, 0.0, params.v_c) : kNegInf;
    const double log_z = log_sum_exp(log_signal, log_clutter);

    // Responsibility of the signal component.
    const double r = std::exp(log_signal - log_z);
    const double d = y - cav_mean;
    const double d_mean = r * d / s;
    const double d_var = 0.5 * r * (d * d / (s * s) - 1.0 / s);
    return TiltedScalar{log_z, d_mean, d_var};
}

double clutter_log_z(double cav_mean, double cav_var, double y, const ClutterParams& params) {
    return clutter_site(cav_mean, cav_var, y, params).log_z;
}

std::pair<double, double> clutter_tilted_moments(double cav_mean, double cav_var, double y,
                                                 const ClutterParams& params) {
    const double s = 1.0 + cav_var;
    const double log_signal =
        params.pi < 1.0 ? std::log1p(-params.pi) + gaussian_logpdf(y, cav_mean, s) : kNegInf;
    const double log_clutter =
        params.pi > 0.0 ? std::log(params.pi) + gaussian_logpdf(y, 0.0, params.v_c) : kNegInf;
    const double r = std::exp(log_signal - log_sum_exp(log_signal, log_clutter));

    const double d = y - cav_mean;
    const double mean = cav_mean + cav_var * r * d / s;
    const double var =
        cav_var - cav_var * cav_var * (r / s - r * (1.0 - r) * d * d / (s * s));
    return {mean, var};
}

TiltedScalar reactor_site(double cav_mean, double cav_var, const ReactorUtility& u,
                          ReactorAction a) {
    const double sd = std::sqrt(cav_var);
    const double z = (u.tau_crit - cav_mean) / sd;
    const double below = normal_cdf(z);
    const double la = u.low(a);
    const double ha = u.high(a);
    const double mass = la * below + ha * (1.0 - below);
    if (!(mass > 0.0)) throw NonpositiveUtilityMass("reactor_site: utility mass not positive");

    // d/d mean Phi(tau; m, v) = -N(tau; m, v); d/d var via the pdf again.
    const double pdf = normal_pdf(z) / sd;
    const double d_mean = (ha - la) * pdf / mass;
    const double d_var = (ha - la) * pdf * (u.tau_crit - cav_mean) / (2.0 * cav_var) / mass;
    return TiltedScalar{std::log(mass), d_mean, d_var};
}

double reactor_log_z(double cav_mean, double cav_var, const ReactorUtility& u, ReactorAction a) {
    return reactor_site(cav_mean, cav_var, u, a).log_z;
}

double reactor_expected_utility(double p_above, const ReactorUtility& u, ReactorAction a) {
    return u.low(a) * (1.0 - p_above) + u.high(a) * p_above;
}

ReactorAction reactor_action_from_prob(double p_above, const ReactorUtility& u) {
    const double keep = reactor_expected_utility(p_above, u, ReactorAction::keep_on);
    const double shut = reactor_expected_utility(p_above, u, ReactorAction::shut_down);
    return shut >= keep ? ReactorAction::shut_down : ReactorAction::keep_on;
}

ReactorAction select_reactor_action(double cav_mean, double cav_var, const ReactorUtility& u) {
    const double p_above = 1.0 - gaussian_cdf(u.tau_crit, cav_mean, cav_var);
    return reactor_action_from_prob(p_above, u);
}

MixturePosterior::MixturePosterior(std::vector<double> log_weights, std::vector<double> means,
                                   std::vector<double> vars)
    : log_weights_(std::move(log_weights)), means_(std::move(means)), vars_(std::move(vars)) {
    if (log_weights_.size() != means_.size() || means_.size() != vars_.size() || means_.empty())
        throw DimensionMismatch("MixturePosterior: component vectors mismatch");
    double lse = kNegInf;
    for (double lw : log_weights_) lse = log_sum_exp(lse, lw);
    for (double& lw : log_weights_) lw -= lse;
}

double MixturePosterior::mean() const {
    double m = 0.0;
    for (int k = 0; k < size(); ++k) m += std::exp(log_weights_[k]) * means_[k];
    return m;
}

double MixturePosterior::variance() const {
    const double m = mean();
    double e2 = 0.0;
    for (int k = 0; k < size(); ++k)
        e2 += std::exp(log_weights_[k]) * (vars_[k] + means_[k] * means_[k]);
    return e2 - m * m;
}

double MixturePosterior::prob_above(double tau) const {
    double p = 0.0;
    for (int k = 0; k < size(); ++k)
        p += std::exp(log_weights_[k]) * (1.0 - gaussian_cdf(tau, means_[k], vars_[k]));
    return p;
}

double MixturePosterior::pdf(double x) const {
    double f = 0.0;
    for (int k = 0; k < size(); ++k)
        f += std::exp(log_weights_[k] + gaussian_logpdf(x, means_[k], vars_[k]));
    return f;
}

MixturePosterior exact_clutter_posterior(const ClutterDataset& data, const ClutterParams& params) {
    // The enumeration also accepts the boundary mixture weights 0 and 1;
    // the branches then carry -inf log weight and drop out.
    if (!(params.pi >= 0.0 && params.pi <= 1.0) || !(params.v_c > 0.0) || !(params.v_0 > 0.0))
        throw std::invalid_argument("exact_clutter_posterior: bad parameters");
    const int n = data.n();
    if (n > 20) throw TooManyPoints("exact_clutter_posterior: N > 20");

    std::vector<double> log_w{0.0};
    std::vector<double> means{0.0};
    std::vector<double> vars{params.v_0};

    const double log_pi = std::log(params.pi);
    const double log_1mpi = std::log1p(-params.pi);

    for (int i = 0; i < n; ++i) {
        const double y = data.y[i];
        const std::size_t m = log_w.size();
        log_w.resize(2 * m);
        means.resize(2 * m);
        vars.resize(2 * m);
        for (std::size_t k = 0; k < m; ++k) {
            // Clutter branch: the likelihood factor is constant in the
            // latent mean, so the component is unchanged.
            log_w[m + k] = log_w[k] + log_pi + gaussian_logpdf(y, 0.0, params.v_c);
            means[m + k] = means[k];
            vars[m + k] = vars[k];
            // Signal branch: conjugate update against N(y; mean, 1).
            const auto prod = gaussian_product(GaussianMoment::scalar(means[k], vars[k]),
                                               GaussianMoment::scalar(y, 1.0));
            log_w[k] += log_1mpi + prod.log_evidence;
            means[k] = prod.posterior.m();
            vars[k] = prod.posterior.v();
        }
    }
    return MixturePosterior(std::move(log_w), std::move(means), std::move(vars));
}

ClutterModel::ClutterModel(ClutterDataset data, ClutterParams params)
    : data_(std::move(data)), params_(params) {
    params_.validate();
}

SiteProjection ClutterModel::project_data_site(int i, const GaussianMoment& cavity) const {
    const TiltedScalar t = clutter_site(cavity.m(), cavity.v(), data_.y.at(static_cast<std::size_t>(i)),
                                        params_);
    return SiteProjection::make_scalar(t.log_z, 0, t.d_mean, t.d_var);
}

GaussianNatural ClutterModel::prior() const {
    return GaussianNatural::scalar(0.0, -0.5 / params_.v_0);
}

ClutterReactorModel::ClutterReactorModel(ClutterDataset data, ClutterParams params,
                                         ReactorUtility utility)
    : ClutterModel(std::move(data), params), utility_(utility) {
    utility_.validate();
}

SiteProjection ClutterReactorModel::project_utility_site(const GaussianMoment& cavity,
                                                         std::vector<int>& actions) const {
    const ReactorAction a = select_reactor_action(cavity.m(), cavity.v(), utility_);
    actions.assign(1, static_cast<int>(a));
    const TiltedScalar t = reactor_site(cavity.m(), cavity.v(), utility_, a);
    return SiteProjection::make_scalar(t.log_z, 0, t.d_mean, t.d_var);
}

}  // namespace lcep
