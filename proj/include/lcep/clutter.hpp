#pragma once

#include <utility>
#include <vector>

#include "lcep/ep.hpp"

namespace lcep {

/// Two-component mixture observation model: a unit-variance signal
/// likelihood around the latent mean, contaminated by a broad zero-mean
/// clutter component.
struct ClutterParams {
    double pi = 0.5;
    double v_c = 10.0;
    double v_0 = 100.0;

    void validate() const;
};

struct ClutterDataset {
    std::vector<double> y;

    int n() const { return static_cast<int>(y.size()); }
};

enum class ReactorAction { keep_on = 0, shut_down = 1 };

/// Binary shut-down decision on whether the latent mean exceeds tau_crit.
/// L0/L1 pay below the threshold, H0/H1 above it, indexed by action.
struct ReactorUtility {
    double L0 = 1.0;  // keep on, temperature normal
    double L1 = 0.5;  // shut down, temperature normal
    double H0 = 0.0;  // keep on, meltdown
    double H1 = 1.5;  // shut down, meltdown
    double tau_crit = 0.0;

    void validate() const;  // requires H0 < L1 <= L0 < H1

    double low(ReactorAction a) const { return a == ReactorAction::shut_down ? L1 : L0; }
    double high(ReactorAction a) const { return a == ReactorAction::shut_down ? H1 : H0; }
};

/// log of (1-pi) N(y; m, 1+v) + pi N(y; 0, v_c) with analytic gradients.
TiltedScalar clutter_site(double cav_mean, double cav_var, double y, const ClutterParams& params);

double clutter_log_z(double cav_mean, double cav_var, double y, const ClutterParams& params);

/// Closed-form tilted mean and variance via the responsibility r of the
/// signal component. Independent of the gradient path in clutter_site.
std::pair<double, double> clutter_tilted_moments(double cav_mean, double cav_var, double y,
                                                 const ClutterParams& params);

/// log of L_a Phi(tau; m, v) + H_a (1 - Phi(tau; m, v)) with analytic
/// gradients. Throws NonpositiveUtilityMass when the mass is not positive.
TiltedScalar reactor_site(double cav_mean, double cav_var, const ReactorUtility& u,
                          ReactorAction a);

double reactor_log_z(double cav_mean, double cav_var, const ReactorUtility& u, ReactorAction a);

double reactor_expected_utility(double p_above, const ReactorUtility& u, ReactorAction a);

/// Argmax of cavity expected utility over both actions; ties break toward
/// shutting down.
ReactorAction select_reactor_action(double cav_mean, double cav_var, const ReactorUtility& u);
ReactorAction reactor_action_from_prob(double p_above, const ReactorUtility& u);

/// Exact clutter posterior: the normalized 2^N-component Gaussian mixture
/// from expanding the product likelihood against the prior.
class MixturePosterior {
  public:
    MixturePosterior(std::vector<double> log_weights, std::vector<double> means,
                     std::vector<double> vars);

    int size() const { return static_cast<int>(means_.size()); }
    const std::vector<double>& log_weights() const { return log_weights_; }
    const std::vector<double>& means() const { return means_; }
    const std::vector<double>& vars() const { return vars_; }

    double mean() const;
    double variance() const;
    double prob_above(double tau) const;
    double pdf(double x) const;

  private:
    std::vector<double> log_weights_;  // normalized: logsumexp == 0
    std::vector<double> means_;
    std::vector<double> vars_;
};

/// Binomial expansion of the posterior. Throws TooManyPoints for N > 20.
MixturePosterior exact_clutter_posterior(const ClutterDataset& data, const ClutterParams& params);

/// EP model over the scalar latent mean with clutter data sites.
class ClutterModel : public TiltedModel {
  public:
    ClutterModel(ClutterDataset data, ClutterParams params);

    int dim() const override { return 1; }
    int n_data_sites() const override { return data_.n(); }
    SiteProjection project_data_site(int i, const GaussianMoment& cavity) const override;

    const ClutterDataset& data() const { return data_; }
    const ClutterParams& params() const { return params_; }
    GaussianNatural prior() const;

  private:
    ClutterDataset data_;
    ClutterParams params_;
};

/// Clutter model plus the reactor utility site. The action vector holds a
/// single entry, 0 for keep-on and 1 for shut-down.
class ClutterReactorModel : public ClutterModel {
  public:
    ClutterReactorModel(ClutterDataset data, ClutterParams params, ReactorUtility utility);

    bool has_utility_site() const override { return true; }
    SiteProjection project_utility_site(const GaussianMoment& cavity,
                                        std::vector<int>& actions) const override;

    const ReactorUtility& utility() const { return utility_; }

  private:
    ReactorUtility utility_;
};

}  // namespace lcep
