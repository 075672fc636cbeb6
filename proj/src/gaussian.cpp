#include "lcep/gaussian.hpp"

#include <cmath>

namespace lcep {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112353;

void require_symmetric(const Eigen::MatrixXd& a, const char* what) {
    const double scale = a.cwiseAbs().maxCoeff() + 1.0;
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
        throw std::invalid_argument(std::string(what) + ": matrix not symmetric");
}

bool cholesky_ok(const Eigen::MatrixXd& a, Eigen::LLT<Eigen::MatrixXd>* out = nullptr) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) return false;
    if (out) *out = std::move(llt);
    return true;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

}  // namespace

GaussianMoment::GaussianMoment(Eigen::VectorXd mean_in, Eigen::MatrixXd cov_in)
    : mean(std::move(mean_in)), cov(std::move(cov_in)) {
    if (mean.size() == 0 || cov.rows() != mean.size() || cov.cols() != mean.size())
        throw DimensionMismatch("GaussianMoment: mean/cov shape mismatch");
    require_symmetric(cov, "GaussianMoment");
    if (!cholesky_ok(cov)) throw ImproperDensity("GaussianMoment: covariance not positive definite");
}

GaussianMoment GaussianMoment::scalar(double m, double v) {
    return GaussianMoment(Eigen::VectorXd::Constant(1, m), Eigen::MatrixXd::Constant(1, 1, v));
}

GaussianNatural::GaussianNatural(Eigen::VectorXd t1, Eigen::MatrixXd t2)
    : theta1(std::move(t1)), theta2(std::move(t2)) {
    if (theta1.size() == 0 || theta2.rows() != theta1.size() || theta2.cols() != theta1.size())
        throw DimensionMismatch("GaussianNatural: theta1/theta2 shape mismatch");
    require_symmetric(theta2, "GaussianNatural");
}

GaussianNatural GaussianNatural::zero(int dim) {
    return GaussianNatural(Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Zero(dim, dim));
}

GaussianNatural GaussianNatural::scalar(double t1, double t2) {
    return GaussianNatural(Eigen::VectorXd::Constant(1, t1), Eigen::MatrixXd::Constant(1, 1, t2));
}

bool GaussianNatural::is_proper() const { return cholesky_ok(-2.0 * theta2); }

GaussianNatural to_natural(const GaussianMoment& g) {
    Eigen::LLT<Eigen::MatrixXd> llt(g.cov);
    const Eigen::MatrixXd prec =
        symmetrize(llt.solve(Eigen::MatrixXd::Identity(g.dim(), g.dim())));
    return GaussianNatural(prec * g.mean, -0.5 * prec);
}

GaussianMoment to_moment(const GaussianNatural& g) {
    Eigen::LLT<Eigen::MatrixXd> llt;
    if (!cholesky_ok(-2.0 * g.theta2, &llt))
        throw ImproperDensity("to_moment: natural parameters are improper");
    const Eigen::MatrixXd cov = symmetrize(llt.solve(Eigen::MatrixXd::Identity(g.dim(), g.dim())));
    return GaussianMoment(cov * g.theta1, cov);
}

GaussianMeanParams to_mean_params(const GaussianMoment& g) {
    return GaussianMeanParams{g.mean, g.cov + g.mean * g.mean.transpose()};
}

GaussianMeanParams to_mean_params(const GaussianNatural& g) { return to_mean_params(to_moment(g)); }

GaussianMoment moment_from_mean_params(const GaussianMeanParams& g) {
    const Eigen::MatrixXd cov = symmetrize(g.eta2 - g.eta1 * g.eta1.transpose());
    if (!cholesky_ok(cov))
        throw ImproperDensity("moment_from_mean_params: implied covariance not positive definite");
    return GaussianMoment(g.eta1, cov);
}

GaussianNatural natural_from_mean_params(const GaussianMeanParams& g) {
    return to_natural(moment_from_mean_params(g));
}

GaussianNatural factor_combine(const GaussianNatural& a, const GaussianNatural& b, int sign) {
    if (a.dim() != b.dim()) throw DimensionMismatch("factor_combine: dimension mismatch");
    const double s = sign >= 0 ? 1.0 : -1.0;
    return GaussianNatural(a.theta1 + s * b.theta1, a.theta2 + s * b.theta2);
}

GaussianProductResult gaussian_product(const GaussianMoment& a, const GaussianMoment& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("gaussian_product: dimension mismatch");
    const double log_ev = mvn_logpdf(a.mean, b.mean, a.cov + b.cov);
    const GaussianNatural post = factor_combine(to_natural(a), to_natural(b), +1);
    return GaussianProductResult{log_ev, to_moment(post)};
}

double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt;
    if (!cholesky_ok(cov, &llt)) throw ImproperDensity("mvn_logpdf: covariance not positive definite");
    const Eigen::VectorXd d = x - mean;
    const Eigen::VectorXd w = llt.matrixL().solve(d);
    double log_det = 0.0;
    for (int i = 0; i < cov.rows(); ++i) log_det += std::log(llt.matrixL()(i, i));
    return -0.5 * w.squaredNorm() - log_det - 0.5 * kLogTwoPi * static_cast<double>(x.size());
}

NaturalGradient natural_gradient(const GaussianMoment& cavity, const Eigen::VectorXd& grad_mean,
                                 const Eigen::MatrixXd& grad_cov) {
    const Eigen::MatrixXd& sigma = cavity.cov;
    const Eigen::VectorXd sg = sigma * grad_mean;
    Eigen::MatrixXd g2 = sg * cavity.mean.transpose();
    g2 += g2.transpose().eval();
    g2 += 2.0 * sigma * grad_cov * sigma;
    return NaturalGradient{sg, symmetrize(g2)};
}

NaturalGradient natural_gradient_scalar(double m, double v, double grad_m, double grad_v) {
    return NaturalGradient{Eigen::VectorXd::Constant(1, v * grad_m),
                           Eigen::MatrixXd::Constant(1, 1, 2.0 * m * v * grad_m + 2.0 * v * v * grad_v)};
}

GaussianMeanParams moment_match(const GaussianNatural& cavity, const NaturalGradient& grad) {
    const GaussianMeanParams eta = to_mean_params(cavity);
    if (grad.g1.size() != eta.eta1.size()) throw DimensionMismatch("moment_match: gradient dim");
    GaussianMeanParams out{eta.eta1 + grad.g1, symmetrize(eta.eta2 + grad.g2)};
    const Eigen::MatrixXd cov = symmetrize(out.eta2 - out.eta1 * out.eta1.transpose());
    if (!cholesky_ok(cov))
        throw NonPosteriorizableMoments("moment_match: projected covariance not positive definite");
    return out;
}

}  // namespace lcep
