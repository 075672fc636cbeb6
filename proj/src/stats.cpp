#include <algorithm>
#include <cmath>

#include "lcep/bench.hpp"
#include "lcep/normal.hpp"

namespace lcep::bench {

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& diffs) {
    std::vector<double> d;
    int zeros = 0;
    for (double x : diffs) {
        if (x == 0.0)
            ++zeros;
        else
            d.push_back(x);
    }
    const int n = static_cast<int>(d.size());
    if (n == 0) return WilcoxonResult{1.0, 0, zeros};
    if (n < 6)
        throw TooFewSamples("wilcoxon_signed_rank: need at least 6 nonzero differences");

    std::vector<int> idx(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) idx[i] = static_cast<int>(i);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return std::abs(d[a]) < std::abs(d[b]); });

    // Midranks over ties of |d|, accumulating the tie correction.
    std::vector<double> rank(d.size());
    double tie_correction = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() &&
               std::abs(d[idx[j + 1]]) == std::abs(d[idx[i]]))
            ++j;
        const double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = mid;
        const double t = static_cast<double>(j - i + 1);
        tie_correction += t * t * t - t;
        i = j + 1;
    }

    double w_plus = 0.0, w_minus = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) (d[k] > 0.0 ? w_plus : w_minus) += rank[k];

    const double nn = static_cast<double>(n);
    const double mu = nn * (nn + 1.0) / 4.0;
    const double sigma2 = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_correction / 48.0;
    const double w = std::min(w_plus, w_minus);
    const double z = (w + 0.5 - mu) / std::sqrt(sigma2);
    const double p = std::min(1.0, 2.0 * normal_cdf(z));
    return WilcoxonResult{p, n, zeros};
}

}  // namespace lcep::bench
