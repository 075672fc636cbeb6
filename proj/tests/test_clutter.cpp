#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lcep/clutter.hpp"
#include "lcep/normal.hpp"
#include "lcep/oracle.hpp"
#include "lcep/rng.hpp"

using namespace lcep;

namespace {

// Grid oracle for tilted-moment checks: cavity times the exact mixture
// likelihood, integrated by trapezoid over a range covering both bumps.
GridMoments1D clutter_tilted_grid(double m, double v, double y, const ClutterParams& p) {
    const double sd = std::sqrt(v);
    const double lo = std::min(m - 8.0 * sd, y - 10.0);
    const double hi = std::max(m + 8.0 * sd, y + 10.0);
    return grid_moments_1d(
        [&](double phi) {
            const double lik = (1.0 - p.pi) * gaussian_pdf(y, phi, 1.0) +
                               p.pi * gaussian_pdf(y, 0.0, p.v_c);
            return gaussian_pdf(phi, m, v) * lik;
        },
        lo, hi, 40001);
}

}  // namespace

TEST_CASE("clutter_log_z closed form") {
    ClutterParams p;

    // No clutter, near-point cavity: the likelihood is a unit Gaussian.
    p.pi = 0.0;
    CHECK(clutter_log_z(0.3, 1e-12, 1.7, p) ==
          doctest::Approx(gaussian_logpdf(1.7, 0.3, 1.0)).epsilon(1e-9));

    // Default parameters at the broad cavity.
    p = ClutterParams{};
    const double expected =
        std::log(0.5 * gaussian_pdf(1.0, 0.0, 101.0) + 0.5 * gaussian_pdf(1.0, 0.0, 10.0));
    CHECK(clutter_log_z(0.0, 100.0, 1.0, p) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("clutter gradients match finite differences") {
    const ClutterParams p;
    Rng rng(23);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const double m = -4.0 + 8.0 * rng.uniform();
        const double v = 0.1 + 25.0 * rng.uniform();
        const double y = -6.0 + 12.0 * rng.uniform();
        const TiltedScalar site = clutter_site(m, v, y, p);
        const NaturalGradient analytic = natural_gradient_scalar(m, v, site.d_mean, site.d_var);
        const NaturalGradient fd = fd_natural_gradient(
            [&](const GaussianNatural& g) {
                const GaussianMoment gm = to_moment(g);
                return clutter_log_z(gm.m(), gm.v(), y, p);
            },
            GaussianNatural::scalar(m / v, -0.5 / v));
        worst = std::max(worst, gradient_rel_error(analytic, fd));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("clutter tilted moments: boundary behavior") {
    ClutterParams p;

    // Pure clutter carries no information about the latent mean.
    p.pi = 1.0;
    const auto [m_pure, v_pure] = clutter_tilted_moments(1.3, 7.0, -2.0, p);
    CHECK(m_pure == doctest::Approx(1.3));
    CHECK(v_pure == doctest::Approx(7.0));

    // A centered observation leaves the mean unchanged.
    p = ClutterParams{};
    const auto [m_centered, v_centered] = clutter_tilted_moments(0.8, 3.0, 0.8, p);
    CHECK(m_centered == doctest::Approx(0.8));
    CHECK(v_centered < 3.0);
}

TEST_CASE("clutter tilted moments match grid quadrature") {
    const ClutterParams p;
    Rng rng(31);
    for (int t = 0; t < 25; ++t) {
        const double m = -4.0 + 8.0 * rng.uniform();
        const double v = 0.2 + 10.0 * rng.uniform();
        const double y = -6.0 + 12.0 * rng.uniform();
        const auto [tm, tv] = clutter_tilted_moments(m, v, y, p);
        const GridMoments1D g = clutter_tilted_grid(m, v, y, p);
        CHECK(std::abs(tm - g.mean) < 1e-8);
        CHECK(std::abs(tv - g.var) < 1e-8);
        CHECK(std::abs(std::exp(clutter_log_z(m, v, y, p)) - g.mass) < 1e-8);

        // Same moments through the generic projection identity.
        const TiltedScalar site = clutter_site(m, v, y, p);
        const GaussianMeanParams matched =
            moment_match(GaussianNatural::scalar(m / v, -0.5 / v),
                         natural_gradient_scalar(m, v, site.d_mean, site.d_var));
        CHECK(std::abs(matched.eta1(0) - tm) < 1e-10);
        CHECK(std::abs(matched.eta2(0, 0) - matched.eta1(0) * matched.eta1(0) - tv) < 1e-10);
    }
}

TEST_CASE("reactor tilted normalizer") {
    // Constant utility: log Z = log c, zero gradients. The ordering
    // invariant does not hold here, so the struct is built directly.
    ReactorUtility flat{2.0, 2.0, 2.0, 2.0, 0.7};
    const TiltedScalar t = reactor_site(0.4, 2.0, flat, ReactorAction::keep_on);
    CHECK(t.log_z == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(t.d_mean == doctest::Approx(0.0));
    CHECK(t.d_var == doctest::Approx(0.0));

    // Cavity centered on the threshold splits the mass evenly.
    ReactorUtility u;
    u.tau_crit = 1.5;
    const double z = std::exp(reactor_log_z(1.5, 3.0, u, ReactorAction::shut_down));
    CHECK(z == doctest::Approx(0.5 * (u.L1 + u.H1)).epsilon(1e-12));

    CHECK_THROWS_AS(reactor_site(0.0, 1.0, ReactorUtility{0.0, 0.0, 0.0, 0.0, 50.0},
                                 ReactorAction::keep_on),
                    NonpositiveUtilityMass);
}

TEST_CASE("reactor normalizer matches quadrature and finite differences") {
    ReactorUtility u;
    Rng rng(41);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const double m = -3.0 + 6.0 * rng.uniform();
        const double v = 0.2 + 12.0 * rng.uniform();
        u.tau_crit = -2.0 + 5.0 * rng.uniform();
        const ReactorAction a = t % 2 ? ReactorAction::shut_down : ReactorAction::keep_on;

        if (t < 25) {
            const double sd = std::sqrt(v);
            const double lo = std::min(m - 9.0 * sd, u.tau_crit - 1.0);
            const double hi = std::max(m + 9.0 * sd, u.tau_crit + 1.0);
            const auto density = [&](double phi) { return gaussian_pdf(phi, m, v); };
            const double quad = u.low(a) * adaptive_simpson(density, lo, u.tau_crit) +
                                u.high(a) * adaptive_simpson(density, u.tau_crit, hi);
            CHECK(std::abs(quad - std::exp(reactor_log_z(m, v, u, a))) < 1e-8);
        }

        const TiltedScalar site = reactor_site(m, v, u, a);
        const NaturalGradient analytic = natural_gradient_scalar(m, v, site.d_mean, site.d_var);
        const NaturalGradient fd = fd_natural_gradient(
            [&](const GaussianNatural& g) {
                const GaussianMoment gm = to_moment(g);
                return reactor_log_z(gm.m(), gm.v(), u, a);
            },
            GaussianNatural::scalar(m / v, -0.5 / v));
        worst = std::max(worst, gradient_rel_error(analytic, fd));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("reactor action selection") {
    const ReactorUtility u{1.0, 0.5, 0.0, 1.5, 2.0};

    CHECK(reactor_action_from_prob(0.0, u) == ReactorAction::keep_on);
    CHECK(reactor_action_from_prob(1.0, u) == ReactorAction::shut_down);

    // Tie probability from the utility gaps, bracketed by brute force.
    const double p_star = (u.L0 - u.L1) / ((u.L0 - u.L1) + (u.H1 - u.H0));
    CHECK(p_star == doctest::Approx(0.25));
    for (double eps : {1e-6, 1e-3}) {
        CHECK(reactor_expected_utility(p_star + eps, u, ReactorAction::shut_down) >
              reactor_expected_utility(p_star + eps, u, ReactorAction::keep_on));
        CHECK(reactor_action_from_prob(p_star + eps, u) == ReactorAction::shut_down);
        CHECK(reactor_expected_utility(p_star - eps, u, ReactorAction::keep_on) >
              reactor_expected_utility(p_star - eps, u, ReactorAction::shut_down));
        CHECK(reactor_action_from_prob(p_star - eps, u) == ReactorAction::keep_on);
    }
    // Exact tie breaks toward shutting down.
    CHECK(reactor_action_from_prob(p_star, u) == ReactorAction::shut_down);

    // Certain cavities pick the certain-state action.
    CHECK(select_reactor_action(-30.0, 0.5, u) == ReactorAction::keep_on);
    CHECK(select_reactor_action(40.0, 0.5, u) == ReactorAction::shut_down);

    CHECK_THROWS_AS((ReactorUtility{1.0, 0.5, 0.6, 1.0, 0.0}.validate()),
                    std::invalid_argument);
}

TEST_CASE("exact posterior: empty dataset is the prior") {
    const ClutterParams p;
    const MixturePosterior post = exact_clutter_posterior(ClutterDataset{}, p);
    CHECK(post.size() == 1);
    CHECK(post.mean() == doctest::Approx(0.0));
    CHECK(post.variance() == doctest::Approx(p.v_0));
    CHECK(std::exp(post.log_weights()[0]) == doctest::Approx(1.0));
}

TEST_CASE("exact posterior: one observation matches quadrature") {
    const ClutterParams p;
    const ClutterDataset data{{1.4}};
    const MixturePosterior post = exact_clutter_posterior(data, p);
    CHECK(post.size() == 2);

    const GridMoments1D g = grid_moments_1d(
        [&](double phi) {
            return gaussian_pdf(phi, 0.0, p.v_0) *
                   ((1.0 - p.pi) * gaussian_pdf(1.4, phi, 1.0) +
                    p.pi * gaussian_pdf(1.4, 0.0, p.v_c));
        },
        -80.0, 80.0, 200001);
    CHECK(std::abs(post.mean() - g.mean) < 1e-10);
    CHECK(std::abs(post.variance() - g.var) < 1e-10);
}

TEST_CASE("exact posterior: no clutter reduces to the conjugate update") {
    ClutterParams p;
    p.pi = 0.0;
    const ClutterDataset data{{0.5, -1.0, 2.5, 0.0}};
    const MixturePosterior post = exact_clutter_posterior(data, p);

    const double prec = 1.0 / p.v_0 + 4.0;
    double sum = 0.0;
    for (double y : data.y) sum += y;
    CHECK(post.mean() == doctest::Approx(sum / prec).epsilon(1e-12));
    CHECK(post.variance() == doctest::Approx(1.0 / prec).epsilon(1e-12));
}

TEST_CASE("exact posterior rejects more than 20 points") {
    const ClutterParams p;
    ClutterDataset data;
    data.y.assign(21, 0.0);
    CHECK_THROWS_AS(exact_clutter_posterior(data, p), TooManyPoints);
}

TEST_CASE("enumeration matches quadrature for midsize datasets") {
    const ClutterParams p;
    const double tau = 2.0;
    Rng rng(77);
    for (int rep = 0; rep < 3; ++rep) {
        const int n = 5 + static_cast<int>(rng.uniform_below(4));
        ClutterDataset data;
        for (int i = 0; i < n; ++i) data.y.push_back(-5.0 + 10.0 * rng.uniform());
        const MixturePosterior post = exact_clutter_posterior(data, p);

        const auto unnorm = [&](double phi) {
            double log_f = gaussian_logpdf(phi, 0.0, p.v_0);
            for (double y : data.y)
                log_f += std::log((1.0 - p.pi) * gaussian_pdf(y, phi, 1.0) +
                                  p.pi * gaussian_pdf(y, 0.0, p.v_c));
            return std::exp(log_f);
        };
        const GridMoments1D g = grid_moments_1d(unnorm, -80.0, 80.0, 200001);
        CHECK(std::abs(post.mean() - g.mean) < 1e-8);
        CHECK(std::abs(post.variance() - g.var) < 1e-8);
        // Integrate the normalized density so the tolerance is absolute.
        const double p_above =
            adaptive_simpson([&](double phi) { return unnorm(phi) / g.mass; }, tau, 80.0);
        CHECK(std::abs(post.prob_above(tau) - p_above) < 1e-8);

        // Bayes action equals the brute-force argmax by construction.
        const ReactorUtility u{1.0, 0.5, 0.0, 1.5, tau};
        const ReactorAction direct = reactor_action_from_prob(post.prob_above(tau), u);
        const double keep =
            reactor_expected_utility(post.prob_above(tau), u, ReactorAction::keep_on);
        const double shut =
            reactor_expected_utility(post.prob_above(tau), u, ReactorAction::shut_down);
        CHECK(direct == (shut >= keep ? ReactorAction::shut_down : ReactorAction::keep_on));
    }
}

TEST_CASE("mixture density integrates to one") {
    const ClutterParams p;
    const ClutterDataset data{{0.3, 2.2, -0.7}};
    const MixturePosterior post = exact_clutter_posterior(data, p);
    const double mass = trapezoid([&](double x) { return post.pdf(x); }, -80.0, 80.0, 100001);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
}
