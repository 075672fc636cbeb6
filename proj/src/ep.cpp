#include "lcep/ep.hpp"

#include <cmath>
#include <numeric>

#include "lcep/rng.hpp"

namespace lcep {

namespace {

double max_abs_diff(const GaussianNatural& a, const GaussianNatural& b) {
    const double d1 = (a.theta1 - b.theta1).cwiseAbs().maxCoeff();
    const double d2 = (a.theta2 - b.theta2).cwiseAbs().maxCoeff();
    return d1 > d2 ? d1 : d2;
}

// Tilted scalar moments from marginal cavity moments and marginal
// log-normalizer gradients.
struct ScalarMoments {
    double mean;
    double var;
};

ScalarMoments scalar_tilted_moments(double m, double v, const SiteProjection& p) {
    const double mean = m + v * p.grad_m;
    const double var = v + v * v * (2.0 * p.grad_v - p.grad_m * p.grad_m);
    return {mean, var};
}

}  // namespace

void EPConfig::validate() const {
    if (!(damping >= 0.0 && damping <= 1.0))
        throw std::invalid_argument("EPConfig: damping must be in [0,1]");
    if (!(tol > 0.0)) throw std::invalid_argument("EPConfig: tol must be positive");
    if (max_sweeps < 1) throw std::invalid_argument("EPConfig: max_sweeps must be >= 1");
}

SiteProjection SiteProjection::make_scalar(double log_z, int coord, double grad_m, double grad_v) {
    SiteProjection p;
    p.log_z = log_z;
    p.scalar = true;
    p.coord = coord;
    p.grad_m = grad_m;
    p.grad_v = grad_v;
    return p;
}

SiteProjection SiteProjection::make_full(double log_z, Eigen::VectorXd grad_mean,
                                         Eigen::MatrixXd grad_cov) {
    SiteProjection p;
    p.log_z = log_z;
    p.grad_mean = std::move(grad_mean);
    p.grad_cov = std::move(grad_cov);
    return p;
}

SiteProjection TiltedModel::project_utility_site(const GaussianMoment&, std::vector<int>&) const {
    throw std::logic_error("TiltedModel: no utility site registered");
}

EPState EPState::init(const GaussianNatural& prior, int n_data_sites, bool utility_site) {
    if (!prior.is_proper()) throw ImproperDensity("EPState: prior must be proper");
    EPState s{prior, {}, prior, 0};
    s.sites.reserve(static_cast<std::size_t>(n_data_sites) + (utility_site ? 1 : 0));
    for (int i = 0; i < n_data_sites; ++i)
        s.sites.push_back(Site{i, SiteKind::data, GaussianNatural::zero(prior.dim())});
    if (utility_site)
        s.sites.push_back(Site{n_data_sites, SiteKind::utility, GaussianNatural::zero(prior.dim())});
    s.recompute_q();
    return s;
}

void EPState::recompute_q() {
    GaussianNatural acc = prior;
    for (const Site& s : sites) acc = factor_combine(acc, s.params, +1);
    q = std::move(acc);
}

GaussianNatural EPState::cavity(int i) const {
    return factor_combine(q, sites.at(static_cast<std::size_t>(i)).params, -1);
}

GaussianMoment EPState::cavity_moment(int i) const {
    const GaussianNatural c = cavity(i);
    if (!c.is_proper()) throw ImproperCavity("cavity_moment: cavity is improper");
    return to_moment(c);
}

int EPState::utility_index() const {
    for (std::size_t i = 0; i < sites.size(); ++i)
        if (sites[i].kind == SiteKind::utility) return static_cast<int>(i);
    return -1;
}

GaussianNatural damped_site_update(const GaussianNatural& old_site, const GaussianNatural& q_new,
                                   const GaussianNatural& cavity, double damping) {
    const GaussianNatural undamped = factor_combine(q_new, cavity, -1);
    return GaussianNatural(damping * undamped.theta1 + (1.0 - damping) * old_site.theta1,
                           damping * undamped.theta2 + (1.0 - damping) * old_site.theta2);
}

Site site_update(const Site& old_site, const GaussianNatural& q_new, const GaussianNatural& cavity,
                 double damping) {
    return Site{old_site.id, old_site.kind,
                damped_site_update(old_site.params, q_new, cavity, damping)};
}

namespace {

struct RunOutput {
    EPState state;
    std::vector<int> actions;
    Diagnostics diag;
};

RunOutput run_impl(const TiltedModel& model, const GaussianNatural& prior, const EPConfig& config,
                   bool with_utility) {
    config.validate();
    if (prior.dim() != model.dim()) throw DimensionMismatch("run_ep: prior/model dimension");

    RunOutput out{EPState::init(prior, model.n_data_sites(), with_utility), {}, {}};
    EPState& state = out.state;
    Diagnostics& diag = out.diag;
    Rng rng(config.seed);

    std::vector<int> order(state.sites.size());
    std::iota(order.begin(), order.end(), 0);

    for (int sweep = 1; sweep <= config.max_sweeps; ++sweep) {
        if (config.shuffle) rng.shuffle(order);
        double max_delta = 0.0;
        int skips = 0;
        int accepted = 0;

        for (int idx : order) {
            Site& site = state.sites[static_cast<std::size_t>(idx)];
            const GaussianNatural cav = state.cavity(idx);
            if (!cav.is_proper()) {
                ++skips;
                continue;
            }
            const GaussianMoment cav_m = to_moment(cav);

            SiteProjection proj;
            if (site.kind == SiteKind::utility)
                proj = model.project_utility_site(cav_m, out.actions);
            else
                proj = model.project_data_site(site.id, cav_m);

            GaussianNatural new_params = site.params;
            if (proj.scalar) {
                const int c = proj.coord;
                const double m = cav_m.mean(c);
                const double v = cav_m.cov(c, c);
                const auto tilted = scalar_tilted_moments(m, v, proj);
                if (!(tilted.var > 0.0) || !std::isfinite(tilted.var) ||
                    !std::isfinite(tilted.mean)) {
                    ++skips;
                    continue;
                }
                // Scalar slice of theta_new = d*(q_new - cavity) + (1-d)*old.
                const double dt1 = tilted.mean / tilted.var - m / v;
                const double dt2 = -0.5 / tilted.var + 0.5 / v;
                new_params.theta1(c) =
                    config.damping * dt1 + (1.0 - config.damping) * site.params.theta1(c);
                new_params.theta2(c, c) =
                    config.damping * dt2 + (1.0 - config.damping) * site.params.theta2(c, c);
            } else {
                GaussianMeanParams projected;
                try {
                    projected = moment_match(cav, natural_gradient(cav_m, proj.grad_mean,
                                                                   proj.grad_cov));
                } catch (const NonPosteriorizableMoments&) {
                    ++skips;
                    continue;
                }
                const GaussianNatural q_new = natural_from_mean_params(projected);
                new_params = damped_site_update(site.params, q_new, cav, config.damping);
            }

            const GaussianNatural saved = site.params;
            const double delta = max_abs_diff(new_params, saved);
            site.params = std::move(new_params);
            state.recompute_q();
            if (!state.q.is_proper()) {
                site.params = saved;
                state.recompute_q();
                diag.divergence_detected = true;
                ++diag.rejected_updates;
                continue;
            }
            if (delta > max_delta) max_delta = delta;
            ++accepted;
        }

        state.sweep = sweep;
        diag.sweeps = sweep;
        diag.sweep_max_delta.push_back(max_delta);
        diag.sweep_skips.push_back(skips);
        diag.total_skips += skips;

        if (!state.sites.empty() && accepted == 0) {
            diag.stalled = true;
            break;
        }
        if (max_delta < config.tol) {
            diag.converged = true;
            break;
        }
    }
    return out;
}

}  // namespace

EPResult run_ep(const TiltedModel& model, const GaussianNatural& prior, const EPConfig& config) {
    if (model.has_utility_site())
        throw std::logic_error("run_ep: model registers a utility site; use run_loss_ep");
    RunOutput out = run_impl(model, prior, config, false);
    return EPResult{std::move(out.state), std::move(out.diag)};
}

LossEPResult run_loss_ep(const TiltedModel& model, const GaussianNatural& prior,
                         const EPConfig& config) {
    if (!model.has_utility_site())
        throw std::logic_error("run_loss_ep: model registers no utility site");
    RunOutput out = run_impl(model, prior, config, true);
    return LossEPResult{std::move(out.state), std::move(out.actions), std::move(out.diag)};
}

double self_consistency_residual(const TiltedModel& model, const EPState& state) {
    const GaussianMeanParams q_eta = to_mean_params(state.q);
    double residual = 0.0;
    std::vector<int> actions;

    for (std::size_t i = 0; i < state.sites.size(); ++i) {
        const GaussianNatural cav = state.cavity(static_cast<int>(i));
        if (!cav.is_proper()) continue;
        const GaussianMoment cav_m = to_moment(cav);

        const Site& site = state.sites[i];
        SiteProjection proj;
        if (site.kind == SiteKind::utility)
            proj = model.project_utility_site(cav_m, actions);
        else
            proj = model.project_data_site(site.id, cav_m);

        if (proj.scalar) {
            const int c = proj.coord;
            const auto tilted = scalar_tilted_moments(cav_m.mean(c), cav_m.cov(c, c), proj);
            const double q_m = q_eta.eta1(c);
            const double q_e2 = q_eta.eta2(c, c);
            const double gap_m = std::abs(tilted.mean - q_m);
            const double gap_e2 = std::abs(tilted.var + tilted.mean * tilted.mean - q_e2);
            residual = std::max({residual, gap_m, gap_e2});
        } else {
            const GaussianMeanParams tilted =
                moment_match(cav, natural_gradient(cav_m, proj.grad_mean, proj.grad_cov));
            residual = std::max(residual, (tilted.eta1 - q_eta.eta1).cwiseAbs().maxCoeff());
            residual = std::max(residual, (tilted.eta2 - q_eta.eta2).cwiseAbs().maxCoeff());
        }
    }
    return residual;
}

}  // namespace lcep
