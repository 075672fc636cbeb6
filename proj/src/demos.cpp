#include <cmath>
#include <sstream>

#include <json.hpp>

#include "lcep/bench.hpp"
#include "lcep/normal.hpp"
#include "svg.hpp"

namespace lcep::bench {

namespace {

const char* action_name(ReactorAction a) {
    return a == ReactorAction::shut_down ? "shut_down" : "keep_on";
}

}  // namespace

ClutterDemoConfig pinned_clutter_demo() {
    // Found by search_clutter_seed under the default config: five
    // observations cluster near 0.6 and one lands at 9.9, giving a
    // bimodal exact posterior whose upper mode crosses tau_crit.
    ClutterDemoConfig cfg;
    cfg.seed = 5060;
    return cfg;
}

ClutterDemoResult clutter_demo(const ClutterDemoConfig& config) {
    ClutterDemoResult r;
    r.data = simulate_clutter_dataset(config.seed, config.n_obs, config.true_mean, config.params);

    const MixturePosterior exact = exact_clutter_posterior(r.data, config.params);
    r.exact_mean = exact.mean();
    r.exact_var = exact.variance();
    r.exact_p_above = exact.prob_above(config.utility.tau_crit);
    r.a_bayes = reactor_action_from_prob(r.exact_p_above, config.utility);

    const ClutterModel ep_model(r.data, config.params);
    const EPResult ep = run_ep(ep_model, ep_model.prior(), config.ep);
    const GaussianMoment ep_q = to_moment(ep.state.q);
    r.ep_mean = ep_q.m();
    r.ep_var = ep_q.v();
    r.ep_p_above = 1.0 - gaussian_cdf(config.utility.tau_crit, r.ep_mean, r.ep_var);
    r.a_ep = select_reactor_action(r.ep_mean, r.ep_var, config.utility);
    r.ep_diag = ep.diagnostics;

    const ClutterReactorModel loss_model(r.data, config.params, config.utility);
    const LossEPResult loss = run_loss_ep(loss_model, loss_model.prior(), config.ep);
    const int uidx = loss.state.utility_index();
    const GaussianNatural q_data = factor_combine(
        loss.state.q, loss.state.sites[static_cast<std::size_t>(uidx)].params, -1);
    const GaussianMoment loss_q = to_moment(q_data);
    r.lossep_mean = loss_q.m();
    r.lossep_var = loss_q.v();
    r.lossep_p_above = 1.0 - gaussian_cdf(config.utility.tau_crit, r.lossep_mean, r.lossep_var);
    r.a_lossep = loss.actions.empty() ? select_reactor_action(r.lossep_mean, r.lossep_var,
                                                              config.utility)
                                      : static_cast<ReactorAction>(loss.actions[0]);
    r.lossep_diag = loss.diagnostics;

    const double sd = std::sqrt(r.exact_var);
    double lo = std::min(r.exact_mean - 8.0 * sd, config.utility.tau_crit - 2.0);
    double hi = std::max(r.exact_mean + 8.0 * sd, config.utility.tau_crit + 2.0);
    r.grid_x.resize(config.grid_n);
    r.exact_density.resize(config.grid_n);
    r.ep_density.resize(config.grid_n);
    r.lossep_density.resize(config.grid_n);
    for (int i = 0; i < config.grid_n; ++i) {
        const double x = lo + (hi - lo) * i / (config.grid_n - 1);
        r.grid_x(i) = x;
        r.exact_density(i) = exact.pdf(x);
        r.ep_density(i) = gaussian_pdf(x, r.ep_mean, r.ep_var);
        r.lossep_density(i) = gaussian_pdf(x, r.lossep_mean, r.lossep_var);
    }
    return r;
}

namespace {

// True when the density has at least two separated modes and the upper
// one sits past the threshold.
bool bimodal_with_upper_mode(const MixturePosterior& exact, double tau) {
    const double mean = exact.mean();
    const double sd = std::sqrt(exact.variance());
    const double lo = std::min(mean - 6.0 * sd, tau - 2.0);
    const double hi = std::max(mean + 6.0 * sd, tau + 2.0);
    const int n = 601;
    std::vector<double> pdf(n);
    double peak = 0.0;
    for (int i = 0; i < n; ++i) {
        pdf[static_cast<std::size_t>(i)] = exact.pdf(lo + (hi - lo) * i / (n - 1));
        peak = std::max(peak, pdf[static_cast<std::size_t>(i)]);
    }
    int modes = 0;
    double top_mode = lo;
    for (int i = 1; i + 1 < n; ++i) {
        const double x = lo + (hi - lo) * i / (n - 1);
        if (pdf[i] > pdf[i - 1] && pdf[i] > pdf[i + 1] && pdf[i] > 0.02 * peak) {
            ++modes;
            top_mode = std::max(top_mode, x);
        }
    }
    return modes >= 2 && top_mode > tau;
}

}  // namespace

std::uint64_t search_clutter_seed(const ClutterDemoConfig& base, std::uint64_t budget) {
    for (std::uint64_t seed = 0; seed < budget; ++seed) {
        ClutterDemoConfig cfg = base;
        cfg.seed = seed;
        const ClutterDataset data =
            simulate_clutter_dataset(seed, cfg.n_obs, cfg.true_mean, cfg.params);
        const MixturePosterior exact = exact_clutter_posterior(data, cfg.params);
        const double p_above = exact.prob_above(cfg.utility.tau_crit);
        if (!(p_above > 0.1 && p_above < 0.4)) continue;
        if (reactor_action_from_prob(p_above, cfg.utility) != ReactorAction::shut_down) continue;
        if (!bimodal_with_upper_mode(exact, cfg.utility.tau_crit)) continue;

        const ClutterDemoResult r = clutter_demo(cfg);
        if (r.a_ep == ReactorAction::keep_on && r.a_lossep == ReactorAction::shut_down &&
            r.a_bayes == ReactorAction::shut_down && r.ep_diag.converged &&
            r.lossep_diag.converged)
            return seed;
    }
    throw SearchExhausted("search_clutter_seed: no qualifying dataset within budget");
}

void write_clutter_demo_outputs(const ClutterDemoResult& result, const ClutterDemoConfig& config,
                                const std::string& out_dir) {
    std::ostringstream densities;
    densities << "x,exact,ep,lossep\n";
    for (int i = 0; i < result.grid_x.size(); ++i)
        densities << fmt(result.grid_x(i)) << "," << fmt(result.exact_density(i)) << ","
                  << fmt(result.ep_density(i)) << "," << fmt(result.lossep_density(i)) << "\n";
    write_text_file(out_dir + "/clutter_densities.csv", densities.str());

    std::ostringstream actions;
    actions << "method,mean,var,p_above,action\n";
    actions << "exact," << fmt(result.exact_mean) << "," << fmt(result.exact_var) << ","
            << fmt(result.exact_p_above) << "," << action_name(result.a_bayes) << "\n";
    actions << "EP," << fmt(result.ep_mean) << "," << fmt(result.ep_var) << ","
            << fmt(result.ep_p_above) << "," << action_name(result.a_ep) << "\n";
    actions << "LossEP," << fmt(result.lossep_mean) << "," << fmt(result.lossep_var) << ","
            << fmt(result.lossep_p_above) << "," << action_name(result.a_lossep) << "\n";
    write_text_file(out_dir + "/clutter_actions.csv", actions.str());

    std::ostringstream observations;
    observations << "y\n";
    for (double y : result.data.y) observations << fmt(y) << "\n";
    write_text_file(out_dir + "/clutter_observations.csv", observations.str());

    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["config"] = {{"seed", config.seed},
                          {"n_obs", config.n_obs},
                          {"true_mean", config.true_mean},
                          {"pi", config.params.pi},
                          {"v_c", config.params.v_c},
                          {"v_0", config.params.v_0},
                          {"L0", config.utility.L0},
                          {"L1", config.utility.L1},
                          {"H0", config.utility.H0},
                          {"H1", config.utility.H1},
                          {"tau_crit", config.utility.tau_crit},
                          {"damping", config.ep.damping},
                          {"tol", config.ep.tol},
                          {"max_sweeps", config.ep.max_sweeps}};
    manifest["outputs"] = nlohmann::json::array(
        {"clutter_densities.csv", "clutter_actions.csv", "clutter_observations.csv",
         "clutter_demo.svg"});
    write_text_file(out_dir + "/clutter_manifest.json", manifest.dump(2) + "\n");

    double ymax = result.exact_density.maxCoeff();
    ymax = std::max({ymax, result.ep_density.maxCoeff(), result.lossep_density.maxCoeff()});
    SvgPlot plot(result.grid_x(0), result.grid_x(result.grid_x.size() - 1), 0.0, 1.1 * ymax);
    const std::vector<double> xs(result.grid_x.data(), result.grid_x.data() + result.grid_x.size());
    auto col = [](const Eigen::VectorXd& v) {
        return std::vector<double>(v.data(), v.data() + v.size());
    };
    plot.axes("latent mean", "density");
    plot.polyline(xs, col(result.exact_density), "#222222", 2.0);
    plot.polyline(xs, col(result.ep_density), "#e58b8b", 2.0);
    plot.polyline(xs, col(result.lossep_density), "#8b1a1a", 2.0);
    plot.label(xs.front() + 0.02 * (xs.back() - xs.front()), 1.05 * ymax,
               "exact (black), EP (pale red), LossEP (dark red)");
    write_text_file(out_dir + "/clutter_demo.svg", plot.finish());
}

TwoPointResult two_point_demo(const TwoPointConfig& config) {
    TwoPointResult r;
    r.data.X.resize(2, 1);
    r.data.X << -std::sqrt(2.0), std::sqrt(2.0);
    r.data.y.resize(2);
    r.data.y << -1, 1;

    const RBFKernelParams kernel = RBFKernelParams::from_log(config.log_sigma, config.log_ell);
    Eigen::MatrixXd comb(config.n_comb, 1);
    for (int c = 0; c < config.n_comb; ++c)
        comb(c, 0) =
            config.comb_lo + (config.comb_hi - config.comb_lo) * c / (config.n_comb - 1);
    const PredictiveSet pred = make_predictive_set(r.data.X, kernel, comb);

    const GPCRunResult ep = ep_gpc(r.data, kernel, config.ep);
    const GPCRunResult loss = loss_ep_gpc(r.data, kernel, config.utility, pred, config.ep);
    r.ep = ep.q;
    r.lossep_q = loss.q;
    r.lossep_qbar = loss.q_bar;
    r.actions = loss.actions;
    r.trace_ep = ep.q.sigma.trace();
    r.trace_lossep_q = loss.q.sigma.trace();
    r.trace_lossep_qbar = loss.q_bar.sigma.trace();

    const Eigen::MatrixXd K = kernel_matrix(r.data.X, kernel);
    const auto log_posterior = [&](double f1, double f2) {
        Eigen::VectorXd f(2);
        f << f1, f2;
        return mvn_logpdf(f, Eigen::VectorXd::Zero(2), K) + normal_logcdf(r.data.y(0) * f1) +
               normal_logcdf(r.data.y(1) * f2);
    };
    const auto comb_utility = [&](double f1, double f2) {
        Eigen::VectorXd f(2);
        f << f1, f2;
        double util = 0.0;
        for (int c = 0; c < pred.size(); ++c) {
            const double p = normal_cdf(pred.alpha.col(c).dot(f));
            util += conditional_expected_utility(p, config.utility,
                                                 r.actions[static_cast<std::size_t>(c)]);
        }
        return util / pred.size();
    };

    r.grid_lo = config.grid_lo;
    r.grid_hi = config.grid_hi;
    const int n = config.grid_n;
    r.grid_posterior.resize(n, n);
    r.grid_utility_weighted.resize(n, n);
    const double h = (config.grid_hi - config.grid_lo) / (n - 1);
    for (int i = 0; i < n; ++i) {
        const double f1 = config.grid_lo + i * h;
        for (int j = 0; j < n; ++j) {
            const double f2 = config.grid_lo + j * h;
            const double density = std::exp(log_posterior(f1, f2));
            r.grid_posterior(i, j) = density;
            r.grid_utility_weighted(i, j) = density * comb_utility(f1, f2);
        }
    }
    r.posterior_moments = grid_moments_2d(r.grid_posterior, config.grid_lo, config.grid_hi);
    r.tilted_moments = grid_moments_2d(r.grid_utility_weighted, config.grid_lo, config.grid_hi);
    r.grid_posterior /= r.posterior_moments.mass;
    r.grid_utility_weighted /= r.tilted_moments.mass;
    return r;
}

void write_two_point_outputs(const TwoPointResult& result, const TwoPointConfig& config,
                             const std::string& out_dir) {
    const int n = static_cast<int>(result.grid_posterior.rows());
    const double h = (result.grid_hi - result.grid_lo) / (n - 1);
    std::ostringstream grid;
    grid << "f1,f2,posterior,utility_weighted\n";
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            grid << fmt(result.grid_lo + i * h) << "," << fmt(result.grid_lo + j * h) << ","
                 << fmt(result.grid_posterior(i, j)) << ","
                 << fmt(result.grid_utility_weighted(i, j)) << "\n";
    write_text_file(out_dir + "/two_point_grid.csv", grid.str());

    std::ostringstream approx;
    approx << "method,mean1,mean2,cov11,cov12,cov22,trace\n";
    const auto row = [&](const char* name, const GPCPosteriorApprox& a) {
        approx << name << "," << fmt(a.mu(0)) << "," << fmt(a.mu(1)) << "," << fmt(a.sigma(0, 0))
               << "," << fmt(a.sigma(0, 1)) << "," << fmt(a.sigma(1, 1)) << ","
               << fmt(a.sigma.trace()) << "\n";
    };
    row("EP", result.ep);
    row("LossEP_q", result.lossep_q);
    row("LossEP_qbar", result.lossep_qbar);
    write_text_file(out_dir + "/two_point_approx.csv", approx.str());

    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["config"] = {{"log_sigma", config.log_sigma},
                          {"log_ell", config.log_ell},
                          {"u00", config.utility.u00},
                          {"u01", config.utility.u01},
                          {"u10", config.utility.u10},
                          {"u11", config.utility.u11},
                          {"grid_lo", config.grid_lo},
                          {"grid_hi", config.grid_hi},
                          {"grid_n", config.grid_n},
                          {"n_comb", config.n_comb},
                          {"comb_lo", config.comb_lo},
                          {"comb_hi", config.comb_hi},
                          {"damping", config.ep.damping},
                          {"tol", config.ep.tol},
                          {"max_sweeps", config.ep.max_sweeps}};
    manifest["outputs"] = nlohmann::json::array(
        {"two_point_grid.csv", "two_point_approx.csv", "two_point.svg"});
    write_text_file(out_dir + "/two_point_manifest.json", manifest.dump(2) + "\n");

    SvgPlot plot(result.grid_lo, result.grid_hi, result.grid_lo, result.grid_hi, 640, 640);
    const double vmax = result.grid_posterior.maxCoeff();
    const int stride = std::max(1, n / 96);
    for (int i = 0; i + stride <= n; i += stride) {
        for (int j = 0; j + stride <= n; j += stride) {
            const double v = result.grid_posterior(i, j) / vmax;
            if (v < 0.002) continue;
            const int shade = 255 - static_cast<int>(205.0 * v);
            std::ostringstream color;
            color << "rgb(" << shade << "," << shade << ",255)";
            plot.rect(result.grid_lo + i * h, result.grid_lo + (i + stride) * h,
                      result.grid_lo + j * h, result.grid_lo + (j + stride) * h, color.str());
        }
    }
    plot.axes("f1", "f2");
    plot.cov_ellipse(result.ep.mu, result.ep.sigma, 2.0, "#e58b8b");
    plot.cov_ellipse(result.lossep_q.mu, result.lossep_q.sigma, 2.0, "#8b1a1a");
    plot.cov_ellipse(result.lossep_qbar.mu, result.lossep_qbar.sigma, 2.0, "#b8860b");
    plot.label(result.grid_lo + 0.5, result.grid_hi - 1.5,
               "posterior heat, EP (pale red), LossEP q (dark red), LossEP q-bar (gold)");
    write_text_file(out_dir + "/two_point.svg", plot.finish());
}

}  // namespace lcep::bench
