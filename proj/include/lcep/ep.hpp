#pragma once

#include <cstdint>
#include <vector>

#include "lcep/gaussian.hpp"

namespace lcep {

enum class SiteKind { data, utility };

/// One exponential-family site factor. Parameters may be improper.
struct Site {
    int id;
    SiteKind kind;
    GaussianNatural params;
};

struct EPConfig {
    /// Step fraction toward the new site in natural coordinates. 0 is a
    /// no-op, 1 the undamped update.
    double damping = 0.5;
    int max_sweeps = 200;
    /// Convergence threshold on the max absolute natural-parameter change
    /// over a full sweep.
    double tol = 1e-8;
    std::uint64_t seed = 0;
    /// Visit all sites in a fresh uniform random order each sweep.
    bool shuffle = true;

    void validate() const;
};

struct Diagnostics {
    int sweeps = 0;
    bool converged = false;
    /// An accepted site update would have made q improper; the update was
    /// rolled back to the last proper q.
    bool divergence_detected = false;
    /// A full sweep produced no accepted update (every site skipped or
    /// rolled back); the run stopped rather than looping silently.
    bool stalled = false;
    long total_skips = 0;
    int rejected_updates = 0;
    std::vector<double> sweep_max_delta;
    std::vector<int> sweep_skips;
};

/// Scalar tilted log-normalizer together with its gradient in the
/// cavity's moment parameterization.
struct TiltedScalar {
    double log_z;
    double d_mean;
    double d_var;
};

/// Result of projecting one site's tilted distribution: the tilted
/// log-normalizer and its gradient with respect to the cavity, either as
/// scalar marginal derivatives (for sites touching a single coordinate)
/// or as full mean/covariance derivatives.
struct SiteProjection {
    double log_z = 0.0;
    bool scalar = false;
    int coord = 0;
    double grad_m = 0.0;
    double grad_v = 0.0;
    Eigen::VectorXd grad_mean;
    Eigen::MatrixXd grad_cov;

    static SiteProjection make_scalar(double log_z, int coord, double grad_m, double grad_v);
    static SiteProjection make_full(double log_z, Eigen::VectorXd grad_mean,
                                    Eigen::MatrixXd grad_cov);
};

/// Model callbacks supplying tilted log-normalizers and gradients. All
/// methods must be pure with respect to engine state: the engine may call
/// them in any order and any number of times.
class TiltedModel {
  public:
    virtual ~TiltedModel() = default;

    virtual int dim() const = 0;
    virtual int n_data_sites() const = 0;
    virtual bool has_utility_site() const { return false; }

    virtual SiteProjection project_data_site(int i, const GaussianMoment& cavity) const = 0;

    /// Selects the cavity-optimal actions, writes them to `actions`, and
    /// projects the utility term under those actions.
    virtual SiteProjection project_utility_site(const GaussianMoment& cavity,
                                                std::vector<int>& actions) const;
};

struct EPState {
    GaussianNatural prior;
    std::vector<Site> sites;
    GaussianNatural q;
    int sweep = 0;

    static EPState init(const GaussianNatural& prior, int n_data_sites, bool utility_site);

    /// prior + sum of sites in fixed site order; q is never updated
    /// incrementally.
    void recompute_q();

    /// q minus site i in natural coordinates. May be improper.
    GaussianNatural cavity(int i) const;

    /// Moment form of the cavity; throws ImproperCavity when it is not
    /// proper.
    GaussianMoment cavity_moment(int i) const;

    /// Index of the utility site, or -1 if none is registered.
    int utility_index() const;
};

/// Damped update backing out the site from the projected approximation:
/// theta_new = damping * (q_new - cavity) + (1 - damping) * old.
GaussianNatural damped_site_update(const GaussianNatural& old_site, const GaussianNatural& q_new,
                                   const GaussianNatural& cavity, double damping);

Site site_update(const Site& old_site, const GaussianNatural& q_new, const GaussianNatural& cavity,
                 double damping);

struct EPResult {
    EPState state;
    Diagnostics diagnostics;
};

struct LossEPResult {
    EPState state;
    /// Actions selected at the last completed utility-site visit. The
    /// coding is model-defined (0/1 for the reactor, +/-1 per predictive
    /// point for classification).
    std::vector<int> actions;
    Diagnostics diagnostics;
};

/// Damped EP fixed-point loop over prior + data sites. The model must not
/// register a utility site.
EPResult run_ep(const TiltedModel& model, const GaussianNatural& prior, const EPConfig& config);

/// EP loop with one extra utility site whose projection embeds action
/// selection against the utility cavity.
LossEPResult run_loss_ep(const TiltedModel& model, const GaussianNatural& prior,
                         const EPConfig& config);

/// Max absolute gap between each site's tilted mean parameters and q's
/// mean parameters, over all sites with proper cavities. Zero at an exact
/// EP fixed point.
double self_consistency_residual(const TiltedModel& model, const EPState& state);

}  // namespace lcep
