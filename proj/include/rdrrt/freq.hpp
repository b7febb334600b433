#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rdrrt/data.hpp"

namespace rdrrt {

/// Exactly identified GMM fit of the multiplicative structural mean model.
struct GmmFit {
    double alpha0 = 0.0;  // E_n[Y exp(-psi T)]
    double psi = 0.0;     // log risk ratio for the treated
    double rrt = 1.0;     // exp(psi)
    double l95 = 0.0;     // bootstrap percentile interval
    double u95 = 0.0;
    int bootstrap_requested = 0;
    int bootstrap_used = 0;
    int bootstrap_discarded = 0;
    bool converged = false;
    std::vector<std::string> warnings;
};

/// Point estimate from the moment equations
///   E_n[Y exp(-psi T) - alpha0] = 0,  E_n[(Y exp(-psi T) - alpha0) Z] = 0.
/// alpha0 is profiled out and psi found by bracketed root finding on [-20, 20].
/// Throws NonIdentifiedError when no sign change exists.
GmmFit gmm_point(const CellCounts& c);

/// Point estimate plus a percentile interval from `bootstrap` resamples drawn
/// within each arm (arm sizes preserved). Replicates without a root are
/// discarded and counted. Replicate b uses an RNG stream seeded by (seed, b).
GmmFit gmm_msmm(const WindowedSample& s, int bootstrap = 2000, std::uint64_t seed = 1);

/// Sharp bounds on the average causal risk difference for binary Z, T, Y.
struct BoundsResult {
    double lower = -1.0;
    double upper = 1.0;
    double width = 2.0;
    double observed_risk_difference = 0.0;  // E(Y|Z=1) - E(Y|Z=0)
    /// max_t sum_y max_z P(y, t | z) > 1: no causal model with a valid
    /// instrument fits the data; the bound expressions may then cross.
    bool instrument_inequality_violated = false;
};

BoundsResult balke_pearl_bounds(const CellCounts& c);
BoundsResult balke_pearl_bounds(const WindowedSample& s);

struct FTestResult {
    double f = 0.0;  // +infinity for a perfect first stage
    int df1 = 1;
    int df2 = 0;
    double p_value = 1.0;
};

/// Least-squares regression of t on (1, z); F is the squared t-statistic of z.
FTestResult first_stage_f(const WindowedSample& s);
FTestResult first_stage_f(const CellCounts& c);

}  // namespace rdrrt
