#include <cmath>

#include "lcep/bench.hpp"
#include "lcep/normal.hpp"
#include "lcep/rng.hpp"

namespace lcep::bench {

GPCDataset simulate_dataset(std::uint64_t seed, const SweepConfig& config) {
    Rng rng(seed);
    const int n = config.n_train;
    Eigen::MatrixXd x(n, 1);
    for (int i = 0; i < n; ++i)
        x(i, 0) = config.train_lo + rng.uniform() * (config.train_hi - config.train_lo);

    const Eigen::MatrixXd k = kernel_matrix(x, config.kernel());
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(k).matrixL();
    Eigen::VectorXd eta(n);
    for (int i = 0; i < n; ++i) eta(i) = rng.normal();
    const Eigen::VectorXd f = chol * eta;

    Eigen::VectorXi y(n);
    for (int i = 0; i < n; ++i) y(i) = rng.uniform() < normal_cdf(f(i)) ? 1 : -1;
    return GPCDataset{std::move(x), std::move(y)};
}

Eigen::MatrixXd simulate_pred_points(std::uint64_t seed, int n, double lo, double hi) {
    Rng rng(seed);
    Eigen::MatrixXd x(n, 1);
    for (int i = 0; i < n; ++i) x(i, 0) = lo + rng.uniform() * (hi - lo);
    return x;
}

ClutterDataset simulate_clutter_dataset(std::uint64_t seed, int n, double true_mean,
                                        const ClutterParams& params) {
    Rng rng(seed);
    ClutterDataset data;
    data.y.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const bool clutter = rng.uniform() < params.pi;
        const double draw = rng.normal();
        data.y.push_back(clutter ? draw * std::sqrt(params.v_c) : true_mean + draw);
    }
    return data;
}

}  // namespace lcep::bench
