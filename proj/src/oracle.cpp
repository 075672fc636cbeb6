#include "lcep/oracle.hpp"

#include <cmath>

#include "lcep/normal.hpp"
#include "lcep/rng.hpp"

namespace lcep {

namespace {
constexpr double kTwoPi = 6.2831853071795864769252867665590058;
}

Eigen::MatrixXd ess_sample(const Eigen::MatrixXd& prior_chol_lower,
                           const std::function<double(const Eigen::VectorXd&)>& loglik,
                           const ESSConfig& config) {
    if (config.n_samples < 1 || config.n_burnin < 0)
        throw std::invalid_argument("ess_sample: bad sample counts");
    const int n = static_cast<int>(prior_chol_lower.rows());
    Rng rng(config.seed);

    const auto prior_draw = [&]() {
        Eigen::VectorXd eta(n);
        for (int i = 0; i < n; ++i) eta(i) = rng.normal();
        return Eigen::VectorXd(prior_chol_lower * eta);
    };

    Eigen::VectorXd f = prior_draw();
    double ll = loglik(f);

    Eigen::MatrixXd samples(config.n_samples, n);
    const int total = config.n_burnin + config.n_samples;
    for (int it = 0; it < total; ++it) {
        const Eigen::VectorXd nu = prior_draw();
        const double log_y = ll + std::log(rng.uniform());
        double theta = rng.uniform() * kTwoPi;
        double theta_min = theta - kTwoPi;
        double theta_max = theta;
        for (;;) {
            const Eigen::VectorXd candidate = f * std::cos(theta) + nu * std::sin(theta);
            const double cand_ll = loglik(candidate);
            if (cand_ll > log_y) {
                f = candidate;
                ll = cand_ll;
                break;
            }
            if (theta < 0.0)
                theta_min = theta;
            else
                theta_max = theta;
            theta = theta_min + rng.uniform() * (theta_max - theta_min);
        }
        if (it >= config.n_burnin) samples.row(it - config.n_burnin) = f;
    }
    return samples;
}

namespace {

// Batch-means standard error; falls back to the naive i.i.d. formula for
// short runs.
EstimateSE mean_with_se(const Eigen::VectorXd& values) {
    const int s = static_cast<int>(values.size());
    const double mean = values.mean();
    const int n_batches = 50;
    if (s < 2 * n_batches) {
        const double var = (values.array() - mean).square().sum() / std::max(1, s - 1);
        return EstimateSE{mean, std::sqrt(var / s)};
    }
    const int batch = s / n_batches;
    Eigen::VectorXd bm(n_batches);
    for (int b = 0; b < n_batches; ++b) bm(b) = values.segment(b * batch, batch).mean();
    const double bmean = bm.mean();
    const double bvar = (bm.array() - bmean).square().sum() / (n_batches - 1);
    return EstimateSE{mean, std::sqrt(bvar / n_batches)};
}

}  // namespace

EstimateSE mc_predictive_prob(const Eigen::MatrixXd& samples, const PredictiveSet& pred, int c) {
    const Eigen::VectorXd z = samples * pred.alpha.col(c);
    Eigen::VectorXd p(z.size());
    for (int s = 0; s < z.size(); ++s) p(s) = normal_cdf(z(s));
    return mean_with_se(p);
}

std::vector<EstimateSE> mc_predictive_probs(const Eigen::MatrixXd& samples,
                                            const PredictiveSet& pred) {
    std::vector<EstimateSE> out(static_cast<std::size_t>(pred.size()));
    // Blocked to keep the S x C probit matrix out of memory.
    const int block = 64;
    for (int c0 = 0; c0 < pred.size(); c0 += block) {
        const int nc = std::min(block, pred.size() - c0);
        const Eigen::MatrixXd z = samples * pred.alpha.middleCols(c0, nc);
        for (int j = 0; j < nc; ++j) {
            Eigen::VectorXd p(z.rows());
            for (int s = 0; s < z.rows(); ++s) p(s) = normal_cdf(z(s, j));
            out[static_cast<std::size_t>(c0 + j)] = mean_with_se(p);
        }
    }
    return out;
}

std::vector<int> bayes_optimal_actions(const std::vector<double>& p_hat,
                                       const BinaryUtility4& u) {
    const double t = u.threshold();
    std::vector<int> actions(p_hat.size());
    for (std::size_t c = 0; c < p_hat.size(); ++c) actions[c] = p_hat[c] >= t ? +1 : -1;
    return actions;
}

UtilityEvalReport evaluate(const std::vector<int>& q_actions, const std::vector<double>& p_hat,
                           const BinaryUtility4& u, const std::vector<double>* p_se) {
    if (q_actions.size() != p_hat.size())
        throw DimensionMismatch("evaluate: actions/p_hat size mismatch");
    const std::size_t c_count = p_hat.size();
    if (c_count == 0) throw DimensionMismatch("evaluate: empty predictive set");

    const std::vector<int> a_opt = bayes_optimal_actions(p_hat, u);
    double sum_opt = 0.0, sum_q = 0.0, sum_anti = 0.0, var_q = 0.0;
    for (std::size_t c = 0; c < c_count; ++c) {
        sum_opt += conditional_expected_utility(p_hat[c], u, a_opt[c]);
        sum_q += conditional_expected_utility(p_hat[c], u, q_actions[c]);
        sum_anti += conditional_expected_utility(p_hat[c], u, -a_opt[c]);
        if (p_se) {
            const double slope = q_actions[c] >= 0 ? u.u11 - u.u10 : u.u01 - u.u00;
            var_q += slope * slope * (*p_se)[c] * (*p_se)[c];
        }
    }
    const double inv_c = 1.0 / static_cast<double>(c_count);
    UtilityEvalReport r;
    r.u_opt = sum_opt * inv_c;
    r.u_q = sum_q * inv_c;
    r.u_antiopt = sum_anti * inv_c;
    r.discrepancy = r.u_opt - r.u_q;
    const double denom = r.u_opt - r.u_antiopt;
    if (!(denom > 0.0)) throw DegenerateMetric("evaluate: all action vectors tie");
    r.metric = r.discrepancy / denom;
    r.mc_stderr = p_se ? std::sqrt(var_q) * inv_c : 0.0;
    return r;
}

double trapezoid(const std::function<double(double)>& f, double lo, double hi, int n) {
    if (n < 2) throw std::invalid_argument("trapezoid: need at least 2 points");
    const double h = (hi - lo) / (n - 1);
    double acc = 0.5 * (f(lo) + f(hi));
    for (int i = 1; i < n - 1; ++i) acc += f(lo + i * h);
    return acc * h;
}

namespace {

double simpson_segment(double a, double fa, double b, double fb, double fm) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double fa, double b,
                            double fb, double m, double fm, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson_segment(a, fa, m, fm, flm);
    const double right = simpson_segment(m, fm, b, fb, frm);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi, double tol) {
    const double m = 0.5 * (lo + hi);
    const double fa = f(lo), fb = f(hi), fm = f(m);
    const double whole = simpson_segment(lo, fa, hi, fb, fm);
    return adaptive_simpson_rec(f, lo, fa, hi, fb, m, fm, whole, tol, 48);
}

GridMoments1D grid_moments_1d(const std::function<double(double)>& unnorm_pdf, double lo,
                              double hi, int n) {
    const double mass = trapezoid(unnorm_pdf, lo, hi, n);
    const double m1 = trapezoid([&](double x) { return x * unnorm_pdf(x); }, lo, hi, n) / mass;
    const double m2 =
        trapezoid([&](double x) { return (x - m1) * (x - m1) * unnorm_pdf(x); }, lo, hi, n) / mass;
    return GridMoments1D{mass, m1, m2};
}

GridMoments2D grid_moments_2d(const std::function<double(double, double)>& unnorm_pdf, double lo,
                              double hi, int n) {
    if (n < 2) throw std::invalid_argument("grid_moments_2d: need at least 2 points");
    const double h = (hi - lo) / (n - 1);
    Eigen::MatrixXd vals(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) vals(i, j) = unnorm_pdf(lo + i * h, lo + j * h);
    return grid_moments_2d(vals, lo, hi);
}

GridMoments2D grid_moments_2d(const Eigen::MatrixXd& vals, double lo, double hi) {
    const int n = static_cast<int>(vals.rows());
    if (n < 2 || vals.cols() != n) throw std::invalid_argument("grid_moments_2d: bad grid");
    const double h = (hi - lo) / (n - 1);

    Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
    w(0) = w(n - 1) = 0.5;

    GridMoments2D out;
    out.mass = h * h * w.dot(vals * w);
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = lo + i * h;
        const double row = w(i) * vals.row(i).dot(w);
        mx += x * row;
    }
    for (int j = 0; j < n; ++j) {
        const double y = lo + j * h;
        const double col = w(j) * w.dot(vals.col(j));
        my += y * col;
    }
    mx = mx * h * h / out.mass;
    my = my * h * h / out.mass;
    out.mean << mx, my;

    double cxx = 0.0, cyy = 0.0, cxy = 0.0;
    for (int i = 0; i < n; ++i) {
        const double dx = lo + i * h - mx;
        for (int j = 0; j < n; ++j) {
            const double dy = lo + j * h - my;
            const double wv = w(i) * w(j) * vals(i, j);
            cxx += dx * dx * wv;
            cyy += dy * dy * wv;
            cxy += dx * dy * wv;
        }
    }
    const double scale = h * h / out.mass;
    out.cov << cxx * scale, cxy * scale, cxy * scale, cyy * scale;
    return out;
}

NaturalGradient fd_natural_gradient(const std::function<double(const GaussianNatural&)>& log_z,
                                    const GaussianNatural& at, double eps) {
    const int n = at.dim();
    NaturalGradient g{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};

    for (int i = 0; i < n; ++i) {
        const double h = eps * std::max(1.0, std::abs(at.theta1(i)));
        GaussianNatural up = at, down = at;
        up.theta1(i) += h;
        down.theta1(i) -= h;
        g.g1(i) = (log_z(up) - log_z(down)) / (2.0 * h);
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const double h = eps * std::max(1.0, std::abs(at.theta2(i, j)));
            GaussianNatural up = at, down = at;
            up.theta2(i, j) += h;
            down.theta2(i, j) -= h;
            if (i != j) {
                up.theta2(j, i) += h;
                down.theta2(j, i) -= h;
            }
            // A symmetric pair perturbation picks up both matrix entries.
            const double d = (log_z(up) - log_z(down)) / (2.0 * h);
            g.g2(i, j) = i == j ? d : 0.5 * d;
            g.g2(j, i) = g.g2(i, j);
        }
    }
    return g;
}

double gradient_rel_error(const NaturalGradient& analytic, const NaturalGradient& reference) {
    const double diff = std::max((analytic.g1 - reference.g1).cwiseAbs().maxCoeff(),
                                 (analytic.g2 - reference.g2).cwiseAbs().maxCoeff());
    // Central differences of an O(1) log-normalizer at step 1e-5 carry
    // ~1e-11 of absolute roundoff noise, so gradients below ~1e-5 cannot
    // be resolved to 1e-5 relative; the floor keeps vanishing gradients
    // from being compared noise against noise.
    const double scale = std::max({reference.g1.cwiseAbs().maxCoeff(),
                                   reference.g2.cwiseAbs().maxCoeff(),
                                   analytic.g1.cwiseAbs().maxCoeff(),
                                   analytic.g2.cwiseAbs().maxCoeff(), 1e-5});
    return diff / scale;
}

}  // namespace lcep
