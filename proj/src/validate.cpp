#include <cmath>
#include <sstream>

#include "lcep/bench.hpp"
#include "lcep/normal.hpp"
#include "lcep/rng.hpp"

namespace lcep::bench {

namespace {

struct Accumulator {
    double worst = 0.0;

    void add(double err) {
        if (err > worst) worst = err;
    }
};

CheckResult make_result(const std::string& name, double worst, double tol) {
    std::ostringstream detail;
    detail << "max err " << worst << " (tol " << tol << ")";
    return CheckResult{name, worst < tol, detail.str()};
}

GaussianNatural scalar_cavity(double m, double v) {
    return GaussianNatural::scalar(m / v, -0.5 / v);
}

// Random proper scalar cavity with moderate conditioning.
std::pair<double, double> random_cavity(Rng& rng) {
    const double m = -5.0 + 10.0 * rng.uniform();
    const double v = 0.05 + 30.0 * rng.uniform();
    return {m, v};
}

CheckResult check_clutter_gradients(Rng& rng) {
    const ClutterParams params;
    Accumulator acc;
    for (int t = 0; t < 100; ++t) {
        const auto [m, v] = random_cavity(rng);
        const double y = -8.0 + 16.0 * rng.uniform();
        const TiltedScalar site = clutter_site(m, v, y, params);
        const NaturalGradient analytic = natural_gradient_scalar(m, v, site.d_mean, site.d_var);
        const auto f = [&](const GaussianNatural& g) {
            const GaussianMoment gm = to_moment(g);
            return clutter_log_z(gm.m(), gm.v(), y, params);
        };
        acc.add(gradient_rel_error(analytic, fd_natural_gradient(f, scalar_cavity(m, v))));
    }
    return make_result("gradients: clutter site vs finite differences", acc.worst, 1e-5);
}

CheckResult check_reactor_gradients(Rng& rng) {
    ReactorUtility u;
    Accumulator acc;
    for (int t = 0; t < 100; ++t) {
        const auto [m, v] = random_cavity(rng);
        u.tau_crit = -2.0 + 6.0 * rng.uniform();
        const ReactorAction a =
            t % 2 == 0 ? ReactorAction::keep_on : ReactorAction::shut_down;
        const TiltedScalar site = reactor_site(m, v, u, a);
        const NaturalGradient analytic = natural_gradient_scalar(m, v, site.d_mean, site.d_var);
        const auto f = [&](const GaussianNatural& g) {
            const GaussianMoment gm = to_moment(g);
            return reactor_log_z(gm.m(), gm.v(), u, a);
        };
        acc.add(gradient_rel_error(analytic, fd_natural_gradient(f, scalar_cavity(m, v))));
    }
    return make_result("gradients: reactor utility site vs finite differences", acc.worst, 1e-5);
}

CheckResult check_probit_gradients(Rng& rng) {
    Accumulator acc;
    for (int t = 0; t < 100; ++t) {
        const auto [m, v] = random_cavity(rng);
        const int label = rng.uniform() < 0.5 ? -1 : 1;
        const TiltedScalar site = probit_site(m, v, label);
        const NaturalGradient analytic = natural_gradient_scalar(m, v, site.d_mean, site.d_var);
        const auto f = [&](const GaussianNatural& g) {
            const GaussianMoment gm = to_moment(g);
            return probit_site(gm.m(), gm.v(), label).log_z;
        };
        acc.add(gradient_rel_error(analytic, fd_natural_gradient(f, scalar_cavity(m, v))));
    }
    return make_result("gradients: probit site vs finite differences", acc.worst, 1e-5);
}

CheckResult check_utility_site_gradients(Rng& rng) {
    const int n = 4;
    const int c = 3;
    Accumulator acc;
    for (int t = 0; t < 100; ++t) {
        Eigen::MatrixXd x(n, 1), points(c, 1);
        for (int i = 0; i < n; ++i) x(i, 0) = -5.0 + 10.0 * rng.uniform();
        for (int i = 0; i < c; ++i) points(i, 0) = -5.0 + 10.0 * rng.uniform();
        const RBFKernelParams kernel{4.0, 2.0, 1e-8};
        const PredictiveSet pred = make_predictive_set(x, kernel, points);

        Eigen::MatrixXd a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
        const Eigen::MatrixXd sigma =
            a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
        Eigen::VectorXd mu(n);
        for (int i = 0; i < n; ++i) mu(i) = 2.0 * rng.normal();
        const GaussianMoment cavity(mu, sigma);

        const BinaryUtility4 u{1.0, 0.1 + 0.5 * rng.uniform(), 0.1 + 0.5 * rng.uniform(), 1.0};
        std::vector<int> actions(c);
        for (int i = 0; i < c; ++i) actions[static_cast<std::size_t>(i)] = rng.uniform() < 0.5 ? -1 : 1;

        const UtilitySiteEval eval = utility_site(cavity, u, actions, pred);
        const NaturalGradient analytic = natural_gradient(cavity, eval.grad_mean, eval.grad_cov);
        const auto f = [&](const GaussianNatural& g) {
            return utility_site(to_moment(g), u, actions, pred).log_z;
        };
        acc.add(gradient_rel_error(analytic, fd_natural_gradient(f, to_natural(cavity))));
    }
    return make_result("gradients: GPC utility site vs finite differences", acc.worst, 1e-5);
}

CheckResult check_predictive_prob_quadrature(Rng& rng) {
    Accumulator acc;
    for (int t = 0; t < 40; ++t) {
        const double m = -5.0 + 10.0 * rng.uniform();
        const double v = 0.05 + 24.95 * rng.uniform();
        const double sd = std::sqrt(v);
        const double quad = trapezoid(
            [&](double f) { return normal_cdf(f) * gaussian_pdf(f, m, v); }, m - 8.0 * sd,
            m + 8.0 * sd, 20001);
        acc.add(std::abs(quad - predictive_prob(m, v)));
    }
    return make_result("closed form: probit predictive vs quadrature", acc.worst, 1e-8);
}

CheckResult check_gaussian_product_quadrature(Rng& rng) {
    Accumulator acc;
    for (int t = 0; t < 40; ++t) {
        const auto [ma, va] = random_cavity(rng);
        const auto [mb, vb] = random_cavity(rng);
        const auto prod = gaussian_product(GaussianMoment::scalar(ma, va),
                                           GaussianMoment::scalar(mb, vb));
        const double lo = std::min(ma - 8.0 * std::sqrt(va), mb - 8.0 * std::sqrt(vb));
        const double hi = std::max(ma + 8.0 * std::sqrt(va), mb + 8.0 * std::sqrt(vb));
        const auto density = [&](double x) {
            return gaussian_pdf(x, ma, va) * gaussian_pdf(x, mb, vb);
        };
        const GridMoments1D g = grid_moments_1d(density, lo, hi, 40001);
        acc.add(std::abs(g.mass - std::exp(prod.log_evidence)));
        acc.add(std::abs(g.mean - prod.posterior.m()));
        acc.add(std::abs(g.var - prod.posterior.v()));
    }
    return make_result("closed form: Gaussian product vs quadrature", acc.worst, 1e-8);
}

CheckResult check_clutter_z_quadrature(Rng& rng) {
    const ClutterParams params;
    Accumulator acc;
    for (int t = 0; t < 40; ++t) {
        const auto [m, v] = random_cavity(rng);
        const double y = -8.0 + 16.0 * rng.uniform();
        const double sd = std::sqrt(v);
        const double lo = std::min(m - 8.0 * sd, y - 10.0);
        const double hi = std::max(m + 8.0 * sd, y + 10.0);
        const auto integrand = [&](double phi) {
            const double lik = (1.0 - params.pi) * gaussian_pdf(y, phi, 1.0) +
                               params.pi * gaussian_pdf(y, 0.0, params.v_c);
            return gaussian_pdf(phi, m, v) * lik;
        };
        const double quad = trapezoid(integrand, lo, hi, 40001);
        acc.add(std::abs(quad - std::exp(clutter_log_z(m, v, y, params))));
    }
    return make_result("closed form: clutter tilted normalizer vs quadrature", acc.worst, 1e-8);
}

CheckResult check_reactor_z_quadrature(Rng& rng) {
    ReactorUtility u;
    Accumulator acc;
    for (int t = 0; t < 40; ++t) {
        const auto [m, v] = random_cavity(rng);
        u.tau_crit = -2.0 + 6.0 * rng.uniform();
        const ReactorAction a =
            t % 2 == 0 ? ReactorAction::keep_on : ReactorAction::shut_down;
        const double sd = std::sqrt(v);
        const double lo = std::min(m - 9.0 * sd, u.tau_crit - 1.0);
        const double hi = std::max(m + 9.0 * sd, u.tau_crit + 1.0);
        const auto density = [&](double phi) { return gaussian_pdf(phi, m, v); };
        // Piecewise-constant utility: integrate each side of tau separately.
        const double quad = u.low(a) * adaptive_simpson(density, lo, u.tau_crit) +
                            u.high(a) * adaptive_simpson(density, u.tau_crit, hi);
        acc.add(std::abs(quad - std::exp(reactor_log_z(m, v, u, a))));
    }
    return make_result("closed form: reactor tilted normalizer vs quadrature", acc.worst, 1e-8);
}

CheckResult check_enumeration_vs_grid(Rng& rng) {
    const ClutterParams params;
    const double tau = 2.0;
    Accumulator acc;
    for (int t = 0; t < 6; ++t) {
        const int n = 4 + static_cast<int>(rng.uniform_below(7));  // 4..10
        ClutterDataset data;
        for (int i = 0; i < n; ++i) data.y.push_back(-6.0 + 12.0 * rng.uniform());
        const MixturePosterior exact = exact_clutter_posterior(data, params);

        const auto unnorm = [&](double phi) {
            double log_p = gaussian_logpdf(phi, 0.0, params.v_0);
            for (double y : data.y)
                log_p += std::log((1.0 - params.pi) * gaussian_pdf(y, phi, 1.0) +
                                  params.pi * gaussian_pdf(y, 0.0, params.v_c));
            return std::exp(log_p);
        };
        const double prior_sd = std::sqrt(params.v_0);
        const double lo = -8.0 * prior_sd;
        const double hi = 8.0 * prior_sd;
        const GridMoments1D g = grid_moments_1d(unnorm, lo, hi, 200001);
        // Normalize first so the quadrature tolerance is absolute.
        const double p_above =
            adaptive_simpson([&](double phi) { return unnorm(phi) / g.mass; }, tau, hi);

        acc.add(std::abs(g.mean - exact.mean()));
        acc.add(std::abs(g.var - exact.variance()));
        acc.add(std::abs(p_above - exact.prob_above(tau)));
    }
    return make_result("oracle: 2^N enumeration vs grid quadrature", acc.worst, 1e-8);
}

CheckResult check_ess_vs_grid(std::uint64_t seed) {
    GPCDataset data;
    data.X.resize(2, 1);
    data.X << -std::sqrt(2.0), std::sqrt(2.0);
    data.y.resize(2);
    data.y << -1, 1;
    const RBFKernelParams kernel = RBFKernelParams::defaults();
    const Eigen::MatrixXd k = kernel_matrix(data.X, kernel);

    const auto unnorm = [&](double f1, double f2) {
        Eigen::VectorXd f(2);
        f << f1, f2;
        return std::exp(mvn_logpdf(f, Eigen::VectorXd::Zero(2), k) + normal_logcdf(-f1) +
                        normal_logcdf(f2));
    };
    const GridMoments2D grid = grid_moments_2d(unnorm, -18.0, 18.0, 481);

    ESSConfig cfg;
    cfg.seed = seed;
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(k).matrixL();
    const Eigen::MatrixXd samples = ess_sample(
        chol,
        [](const Eigen::VectorXd& f) { return normal_logcdf(-f(0)) + normal_logcdf(f(1)); },
        cfg);

    // Batch-means standard errors absorb the chain autocorrelation.
    const int n_batches = 50;
    const int batch = static_cast<int>(samples.rows()) / n_batches;
    double worst = 0.0;
    for (int a = 0; a < 2; ++a) {
        for (int b = a; b <= 2; ++b) {
            Eigen::VectorXd series(samples.rows());
            double target;
            if (b == 2) {
                series = samples.col(a);
                target = grid.mean(a);
            } else {
                series = samples.col(a).cwiseProduct(samples.col(b));
                target = grid.cov(a, b) + grid.mean(a) * grid.mean(b);
            }
            Eigen::VectorXd bm(n_batches);
            for (int i = 0; i < n_batches; ++i) bm(i) = series.segment(i * batch, batch).mean();
            const double mean = bm.mean();
            const double se =
                std::sqrt((bm.array() - mean).square().sum() / (n_batches - 1) / n_batches);
            worst = std::max(worst, std::abs(mean - target) / (3.0 * se));
        }
    }
    std::ostringstream detail;
    detail << "worst |err|/3se " << worst;
    return CheckResult{"oracle: ESS vs 2D grid on the two-point problem", worst < 1.0,
                       detail.str()};
}

}  // namespace

std::vector<CheckResult> run_validation(std::uint64_t seed) {
    Rng rng(derive_seed(seed, "validate"));
    std::vector<CheckResult> results;
    results.push_back(check_clutter_gradients(rng));
    results.push_back(check_reactor_gradients(rng));
    results.push_back(check_probit_gradients(rng));
    results.push_back(check_utility_site_gradients(rng));
    results.push_back(check_predictive_prob_quadrature(rng));
    results.push_back(check_gaussian_product_quadrature(rng));
    results.push_back(check_clutter_z_quadrature(rng));
    results.push_back(check_reactor_z_quadrature(rng));
    results.push_back(check_enumeration_vs_grid(rng));
    results.push_back(check_ess_vs_grid(derive_seed(seed, "ess")));
    return results;
}

}  // namespace lcep::bench
