#pragma once

#include <stdexcept>
#include <string>

namespace lcep {

/// Converting an improper (non positive-definite) natural-parameter
/// Gaussian to moment form, or constructing a moment Gaussian whose
/// covariance is not positive definite.
struct ImproperDensity : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Moment matching produced a second moment whose implied covariance is
/// not positive definite. Callers skip the site or damp harder.
struct NonPosteriorizableMoments : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Cavity distribution is improper; the site update must be skipped.
struct ImproperCavity : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TooManyPoints : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Utility-tilted normalizer is not positive for the chosen action.
struct NonpositiveUtilityMass : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CholeskyFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The probit bias argument left (0,1), so the decision threshold has no
/// finite quantile.
struct BiasUndefined : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ZeroUtilityMass : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Best and worst action vectors achieve the same expected utility; the
/// normalized metric has a zero denominator.
struct DegenerateMetric : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TooFewSamples : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SearchExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lcep
