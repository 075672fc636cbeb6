#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "lcep/gpc.hpp"
#include "lcep/normal.hpp"
#include "lcep/oracle.hpp"
#include "lcep/rng.hpp"

using namespace lcep;

namespace {

Eigen::MatrixXd random_inputs(Rng& rng, int n) {
    Eigen::MatrixXd x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = -5.0 + 10.0 * rng.uniform();
    return x;
}

GaussianMoment random_cavity(Rng& rng, int n) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    Eigen::VectorXd mu(n);
    for (int i = 0; i < n; ++i) mu(i) = 2.0 * rng.normal();
    return GaussianMoment(mu, a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n));
}

int brute_force_action(double p, const BinaryUtility4& u) {
    const double plus = conditional_expected_utility(p, u, +1);
    const double minus = conditional_expected_utility(p, u, -1);
    if (plus == minus) return +1;
    return plus > minus ? +1 : -1;
}

}  // namespace

TEST_CASE("kernel matrix values") {
    RBFKernelParams params{4.0, 2.0, 1e-6};
    Eigen::MatrixXd x(2, 1);
    x << 1.0, 1.0 + 2.0 * std::sqrt(2.0);  // distance ell * sqrt(2)

    const Eigen::MatrixXd k = kernel_matrix(x, params);
    CHECK(k(0, 0) == doctest::Approx(4.0 + 1e-6).epsilon(1e-14));
    CHECK(k(0, 1) == doctest::Approx(4.0 * std::exp(-1.0)).epsilon(1e-13));
    CHECK(k(1, 0) == k(0, 1));

    SUBCASE("random kernels are positive semidefinite before jitter") {
        Rng rng(3);
        params.jitter = 0.0;
        for (int rep = 0; rep < 5; ++rep) {
            const Eigen::MatrixXd pts = random_inputs(rng, 5);
            const Eigen::MatrixXd gram = cross_kernel(pts, pts, params);
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
            CHECK(eig.eigenvalues().minCoeff() > -1e-10);
        }
    }
}

TEST_CASE("default hyperparameters follow the log convention") {
    const RBFKernelParams p = RBFKernelParams::defaults();
    CHECK(p.sigma2 == doctest::Approx(std::exp(3.0)));
    CHECK(p.ell == doctest::Approx(std::exp(1.0)));
    CHECK(p.jitter == doctest::Approx(1e-8 * p.sigma2));
}

TEST_CASE("probit site log-normalizer") {
    CHECK(probit_site(0.0, 2.0, +1).log_z == doctest::Approx(std::log(0.5)).epsilon(1e-14));
    CHECK(probit_site(0.0, 2.0, -1).log_z == doctest::Approx(std::log(0.5)).epsilon(1e-14));

    // Saturated likelihood: log Z -> 0 from below.
    CHECK(probit_site(40.0, 0.5, +1).log_z == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(probit_site(40.0, 0.5, +1).log_z <= 0.0);
    CHECK(probit_site(6.0, 0.5, +1).log_z < 0.0);

    Rng rng(13);
    double worst_quad = 0.0, worst_grad = 0.0;
    for (int t = 0; t < 100; ++t) {
        const double m = -4.0 + 8.0 * rng.uniform();
        const double v = 0.1 + 20.0 * rng.uniform();
        const int label = t % 2 ? 1 : -1;

        if (t < 25) {
            const double sd = std::sqrt(v);
            const double quad = trapezoid(
                [&](double f) { return gaussian_pdf(f, m, v) * normal_cdf(label * f); },
                m - 8.5 * sd, m + 8.5 * sd, 30001);
            worst_quad = std::max(worst_quad,
                                  std::abs(quad - std::exp(probit_site(m, v, label).log_z)));
        }

        const TiltedScalar site = probit_site(m, v, label);
        const NaturalGradient analytic = natural_gradient_scalar(m, v, site.d_mean, site.d_var);
        const NaturalGradient fd = fd_natural_gradient(
            [&](const GaussianNatural& g) {
                const GaussianMoment gm = to_moment(g);
                return probit_site(gm.m(), gm.v(), label).log_z;
            },
            GaussianNatural::scalar(m / v, -0.5 / v));
        worst_grad = std::max(worst_grad, gradient_rel_error(analytic, fd));
    }
    CHECK(worst_quad < 1e-8);
    CHECK(worst_grad < 1e-5);
}

TEST_CASE("posterior predictive collapses to the prior and the data") {
    Rng rng(8);
    const Eigen::MatrixXd x = random_inputs(rng, 4);
    RBFKernelParams params{3.0, 1.5, 0.0};
    const Eigen::MatrixXd k = kernel_matrix(x, params);
    const Eigen::MatrixXd pts = random_inputs(rng, 6);
    const PredictiveSet pred = make_predictive_set(x, params, pts);

    // Prior plugged in as the posterior: mean 0, variance k** everywhere.
    const GPCPosteriorApprox prior{Eigen::VectorXd::Zero(4), k};
    for (int c = 0; c < pred.size(); ++c) {
        const auto [m, v] = posterior_predictive(prior, pred, c);
        CHECK(std::abs(m) < 1e-10);
        CHECK(v == doctest::Approx(params.sigma2).epsilon(1e-10));
    }

    // Interpolation limit: predictive variance vanishes at a training
    // input once the posterior concentrates.
    const PredictiveSet at_train = make_predictive_set(x, params, x);
    const GPCPosteriorApprox concentrated{Eigen::VectorXd::Zero(4),
                                          1e-14 * Eigen::MatrixXd::Identity(4, 4)};
    for (int c = 0; c < 4; ++c) {
        const auto [m, v] = posterior_predictive(concentrated, at_train, c);
        CHECK(std::abs(v) < 1e-7);
    }
}

TEST_CASE("posterior predictive matches a Monte Carlo draw of the conditional") {
    Rng rng(21);
    const Eigen::MatrixXd x = random_inputs(rng, 3);
    const RBFKernelParams params{2.5, 1.8, 1e-8};
    Eigen::MatrixXd pt(1, 1);
    pt << 0.7;
    const PredictiveSet pred = make_predictive_set(x, params, pt);

    const GaussianMoment approx_moment = random_cavity(rng, 3);
    const GPCPosteriorApprox approx{approx_moment.mean, approx_moment.cov};
    const auto [m, v] = posterior_predictive(approx, pred, 0);

    const Eigen::MatrixXd chol = approx.sigma.llt().matrixL();
    const int draws = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < draws; ++s) {
        Eigen::VectorXd eta(3);
        for (int i = 0; i < 3; ++i) eta(i) = rng.normal();
        const Eigen::VectorXd f = approx.mu + chol * eta;
        const double fstar = pred.kinv_k.col(0).dot(f) + std::sqrt(pred.vbar(0)) * rng.normal();
        sum += fstar;
        sum2 += fstar * fstar;
    }
    const double mc_mean = sum / draws;
    const double mc_var = sum2 / draws - mc_mean * mc_mean;
    const double se_mean = std::sqrt(v / draws);
    const double se_var = mc_var * std::sqrt(2.0 / (draws - 1));
    CHECK(std::abs(mc_mean - m) < 3.0 * se_mean);
    CHECK(std::abs(mc_var - v) < 3.0 * se_var);
}

TEST_CASE("predictive probability closed form") {
    CHECK(predictive_prob(0.0, 3.7) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(predictive_prob(1.0, 0.0) == doctest::Approx(0.8413447460685429).epsilon(1e-12));

    Rng rng(34);
    for (int t = 0; t < 25; ++t) {
        const double m = -5.0 + 10.0 * rng.uniform();
        const double v = 0.05 + 24.95 * rng.uniform();
        const double sd = std::sqrt(v);
        const double quad = trapezoid(
            [&](double f) { return normal_cdf(f) * gaussian_pdf(f, m, v); }, m - 8.5 * sd,
            m + 8.5 * sd, 30001);
        CHECK(std::abs(quad - predictive_prob(m, v)) < 1e-8);
    }
}

TEST_CASE("conditional expected utility decomposition") {
    const BinaryUtility4 u{1.0, 0.0, 0.5, 1.0};
    CHECK(conditional_expected_utility(1.0, u, +1) == doctest::Approx(u.u11));
    CHECK(conditional_expected_utility(0.0, u, -1) == doctest::Approx(u.u00));
    CHECK(conditional_expected_utility(0.5, u, +1) == doctest::Approx(0.75));
    CHECK(conditional_expected_utility(0.5, u, -1) == doctest::Approx(0.5));
}

TEST_CASE("q_action bias and brute-force equivalence") {
    // Symmetric utilities: no bias, sign of the mean decides.
    const BinaryUtility4 sym{1.0, 0.25, 0.25, 1.0};
    CHECK(sym.bias() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(q_action(0.3, 5.0, sym) == +1);
    CHECK(q_action(-0.3, 5.0, sym) == -1);
    CHECK(q_action(0.0, 5.0, sym) == +1);  // tie toward +1

    const BinaryUtility4 asym{1.0, 0.0, 0.5, 1.0};
    CHECK(asym.threshold() == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(asym.bias() == doctest::Approx(normal_quantile(1.0 / 3.0)).epsilon(1e-13));
    CHECK(asym.bias() == doctest::Approx(-0.43072729929).epsilon(1e-9));

    Rng rng(55);
    for (int t = 0; t < 1000; ++t) {
        const double m = -4.0 + 8.0 * rng.uniform();
        const double v = 25.0 * rng.uniform();
        // Correct classifications pay more than errors on both sides.
        const double u00 = 0.5 + rng.uniform(), u10 = u00 - 0.05 - rng.uniform();
        const double u11 = 0.5 + rng.uniform(), u01 = u11 - 0.05 - rng.uniform();
        const BinaryUtility4 u{u00, u01, u10, u11};
        const double p = predictive_prob(m, v);
        CHECK(q_action(m, v, u) == brute_force_action(p, u));
    }

    CHECK_THROWS_AS((BinaryUtility4{1.0, 0.0, 1.0, 0.0}.bias()), BiasUndefined);
    CHECK_THROWS_AS((BinaryUtility4{0.0, 0.0, 1.0, 0.5}.bias()), BiasUndefined);
}

TEST_CASE("utility site: constant utility has no tilt") {
    Rng rng(61);
    const Eigen::MatrixXd x = random_inputs(rng, 3);
    const RBFKernelParams params{2.0, 1.5, 1e-8};
    const PredictiveSet pred = make_predictive_set(x, params, random_inputs(rng, 4));
    const GaussianMoment cavity = random_cavity(rng, 3);

    const BinaryUtility4 flat{0.7, 0.7, 0.7, 0.7};
    const UtilitySiteEval e = utility_site(cavity, flat, {1, -1, 1, -1}, pred);
    CHECK(e.log_z == doctest::Approx(std::log(0.7)).epsilon(1e-12));
    CHECK(e.grad_mean.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    CHECK(e.grad_cov.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("utility site matches 1D quadrature on a single-point problem") {
    Rng rng(62);
    Eigen::MatrixXd x(1, 1), pt(1, 1);
    x << 0.4;
    pt << -0.9;
    const RBFKernelParams params{3.0, 1.2, 1e-9};
    const PredictiveSet pred = make_predictive_set(x, params, pt);
    const BinaryUtility4 u{1.0, 0.0, 0.5, 1.0};

    for (int action : {+1, -1}) {
        const double m = 0.8, v = 2.3;
        const GaussianMoment cavity = GaussianMoment::scalar(m, v);
        const UtilitySiteEval e = utility_site(cavity, u, {action}, pred);
        const double alpha = pred.alpha(0, 0);
        const double quad = trapezoid(
            [&](double f) {
                return gaussian_pdf(f, m, v) *
                       conditional_expected_utility(normal_cdf(alpha * f), u, action);
            },
            m - 9.0 * std::sqrt(v), m + 9.0 * std::sqrt(v), 30001);
        CHECK(std::abs(std::exp(e.log_z) - quad) < 1e-8);
    }
}

TEST_CASE("utility site matches Monte Carlo on a multi-point problem") {
    Rng rng(63);
    const Eigen::MatrixXd x = random_inputs(rng, 2);
    const RBFKernelParams params{2.5, 1.5, 1e-8};
    const PredictiveSet pred = make_predictive_set(x, params, random_inputs(rng, 3));
    const BinaryUtility4 u{1.0, 0.0, 0.5, 1.0};
    const std::vector<int> actions{+1, -1, +1};
    const GaussianMoment cavity = random_cavity(rng, 2);

    const UtilitySiteEval e = utility_site(cavity, u, actions, pred);

    const Eigen::MatrixXd chol = cavity.cov.llt().matrixL();
    const int draws = 1000000;
    double sum = 0.0, sum2 = 0.0;
    for (int s = 0; s < draws; ++s) {
        Eigen::VectorXd eta(2);
        eta << rng.normal(), rng.normal();
        const Eigen::VectorXd f = cavity.mean + chol * eta;
        double util = 0.0;
        for (int c = 0; c < 3; ++c)
            util += conditional_expected_utility(normal_cdf(pred.alpha.col(c).dot(f)), u,
                                                 actions[static_cast<std::size_t>(c)]);
        util /= 3.0;
        sum += util;
        sum2 += util * util;
    }
    const double mc = sum / draws;
    const double se = std::sqrt((sum2 / draws - mc * mc) / draws);
    CHECK(std::abs(mc - std::exp(e.log_z)) < 3.0 * se);
}

TEST_CASE("utility site gradients match finite differences") {
    Rng rng(64);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const int n = 2 + static_cast<int>(rng.uniform_below(5));  // 2..6
        const Eigen::MatrixXd x = random_inputs(rng, n);
        const RBFKernelParams params{3.0, 2.0, 1e-8};
        const PredictiveSet pred = make_predictive_set(x, params, random_inputs(rng, 4));
        const GaussianMoment cavity = random_cavity(rng, n);
        const BinaryUtility4 u{1.0, 0.2, 0.4, 1.0};
        std::vector<int> actions(4);
        for (auto& a : actions) a = rng.uniform() < 0.5 ? -1 : 1;

        const UtilitySiteEval e = utility_site(cavity, u, actions, pred);
        const NaturalGradient analytic = natural_gradient(cavity, e.grad_mean, e.grad_cov);
        const NaturalGradient fd = fd_natural_gradient(
            [&](const GaussianNatural& g) {
                return utility_site(to_moment(g), u, actions, pred).log_z;
            },
            to_natural(cavity));
        worst = std::max(worst, gradient_rel_error(analytic, fd));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("EP data sites stay rank-one on their own coordinate") {
    Rng rng(71);
    GPCDataset data;
    data.X = random_inputs(rng, 6);
    data.y.resize(6);
    for (int i = 0; i < 6; ++i) data.y(i) = rng.uniform() < 0.5 ? -1 : 1;

    const GPCRunResult r = ep_gpc(data, RBFKernelParams::defaults(), EPConfig{});
    CHECK(r.diagnostics.converged);

    const GPCModel model(data, RBFKernelParams::defaults());
    EPConfig cfg;
    const EPResult full = run_ep(model, model.prior(), cfg);
    for (const Site& site : full.state.sites) {
        for (int a = 0; a < 6; ++a) {
            if (a != site.id) CHECK(site.params.theta1(a) == 0.0);
            for (int b = 0; b < 6; ++b)
                if (a != site.id || b != site.id) CHECK(site.params.theta2(a, b) == 0.0);
        }
    }
    CHECK(self_consistency_residual(model, full.state) < 1e-5);
}

TEST_CASE("loss-calibrated GPC with symmetric utility signs the mean") {
    Rng rng(83);
    GPCDataset data;
    data.X = random_inputs(rng, 5);
    data.y.resize(5);
    for (int i = 0; i < 5; ++i) data.y(i) = data.X(i, 0) > 0.0 ? 1 : -1;

    const RBFKernelParams kernel = RBFKernelParams::defaults();
    // Predictive points kept away from the decision boundary; a point
    // whose predictive mean sits at zero has a genuinely tied action and
    // can flip between utility-site visits.
    Eigen::MatrixXd pts(8, 1);
    pts << -4.5, -3.0, -2.0, -1.5, 1.5, 2.0, 3.0, 4.5;
    const PredictiveSet pred = make_predictive_set(data.X, kernel, pts);
    const BinaryUtility4 sym{1.0, 0.0, 0.0, 1.0};
    const GPCRunResult r = loss_ep_gpc(data, kernel, sym, pred, EPConfig{});
    CHECK(r.diagnostics.converged);
    REQUIRE(r.actions.size() == 8);

    for (int c = 0; c < 8; ++c) {
        const auto [m, v] = posterior_predictive(r.q, pred, c);
        CHECK(r.actions[static_cast<std::size_t>(c)] == (m >= 0.0 ? 1 : -1));
    }
}

TEST_CASE("a predictive point pinned to the boundary reports non-convergence") {
    GPCDataset data;
    data.X.resize(2, 1);
    data.X << -2.0, 2.0;
    data.y.resize(2);
    data.y << -1, 1;
    const RBFKernelParams kernel = RBFKernelParams::defaults();
    // By symmetry the predictive mean at x = 0 is exactly zero, so the
    // symmetric utility ties there and the re-selected action can cycle.
    Eigen::MatrixXd pts(1, 1);
    pts << 0.0;
    const PredictiveSet pred = make_predictive_set(data.X, kernel, pts);
    const BinaryUtility4 u{1.0, 0.0, 0.5, 1.0};
    EPConfig cfg;
    cfg.max_sweeps = 60;
    const GPCRunResult r = loss_ep_gpc(data, kernel, u, pred, cfg);
    // Either outcome is legitimate; what matters is honest reporting.
    CHECK(r.diagnostics.sweeps <= cfg.max_sweeps);
    if (!r.diagnostics.converged) CHECK(r.diagnostics.sweeps == cfg.max_sweeps);
}
