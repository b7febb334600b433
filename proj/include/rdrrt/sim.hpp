#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rdrrt/data.hpp"
#include "rdrrt/mcmc.hpp"
#include "rdrrt/models.hpp"

namespace rdrrt {

enum class Strength { weak, strong };
enum class Confounding { low, high };
enum class Effect { none, low, high };

/// Coefficients of the data-generating process. One block so it can be revised
/// or read from a config file.
///
///   X ~ Normal(x_mean, x_sd^2) truncated to (x_lo, x_hi),  U ~ Normal(0, 1)
///   Z = 1{X >= threshold}
///   T ~ Bernoulli(expit(a0 + aZ Z + aU U)),  a0 = -aZ / 2 + a0_shift
///   Y ~ Bernoulli(min(y_cap, exp(b0 + bT T + bU U)))
///
/// With the log link the risk ratio is exp(bT) for every unit, so the
/// no-effect-modification and log-linearity conditions hold exactly.
struct DgpCoefficients {
    double x_mean = 0.2;
    double x_sd = 0.06;
    double x_lo = 0.01;
    double x_hi = 0.6;
    double a_z_weak = 1.0;
    double a_z_strong = 4.0;
    double a_u_low = 0.5;
    double a_u_high = 2.0;
    double a0_shift = -0.25;
    double b0 = -3.0;
    double b_t_none = 0.0;
    double b_t_low = 0.75;
    double b_t_high = 1.5;
    double b_u_low = 0.3;
    double b_u_high = 0.4;
    double y_cap = 0.99;
    double max_clip_rate = 0.001;
};

struct ScenarioSpec {
    Strength strength = Strength::strong;
    Confounding confounding = Confounding::low;
    Effect effect = Effect::high;
    int n = 10'000;
    double threshold = 0.2;
    std::vector<double> bandwidths{0.025, 0.05, 0.075, 0.1};
    int replications = 100;
    std::uint64_t seed = 1;
    DgpCoefficients dgp;

    /// e.g. "strong/low/high": instrument strength / confounding / effect size.
    std::string name() const;
    /// Position in the 12-cell grid, 0..11.
    int index() const;
    double b_t() const;
    double true_rr() const;  // exp(b_t)

    static ScenarioSpec parse(const std::string& name);
    /// All 12 combinations sharing the non-scenario fields of `base`.
    static std::vector<ScenarioSpec> all(const ScenarioSpec& base);
    static std::vector<ScenarioSpec> all() { return all(ScenarioSpec{}); }
};

/// Deterministic per (spec, replicate). `clipped` receives the number of records
/// whose outcome probability hit y_cap; at or above max_clip_rate * n the call
/// throws NumericalError("DGP probability overflow").
std::vector<Observation> generate(const ScenarioSpec& spec, int replicate,
                                  std::size_t* clipped = nullptr);

/// One estimator in a simulation grid: a Bayesian model tag or "gmm".
struct EstimatorSpec {
    std::string tag;
    bool constrained = false;

    bool is_gmm() const { return tag == "gmm"; }
    std::string label() const;  // tag, with ":constrained" appended when set
    static EstimatorSpec parse(const std::string& label);
};

struct ReplicateResult {
    bool ok = false;
    std::string error;
    double estimate = 0.0;  // posterior mean or GMM point estimate
    double l95 = 0.0;
    double u95 = 0.0;
    double rhat_max = 1.0;  // Bayesian fits only
    double share_nonpositive = 0.0;
    double roundtrip_error = 0.0;  // constrained fits only, NaN otherwise
    std::size_t roundtrip_over = 0;  // draws whose round trip misses by more than 1e-12
    std::size_t draws = 0;
};

struct SimCell {
    std::string scenario;
    double bandwidth = 0.0;
    std::string estimator;
    double true_rr = 1.0;
    int replicates = 0;
    int failed = 0;
    bool available = false;
    double mean_estimate = 0.0;
    double median_estimate = 0.0;
    double bias = 0.0;
    double rmse = 0.0;
    double coverage = 0.0;
    double mean_width = 0.0;
    double median_width = 0.0;
    double share_negative_lower = 0.0;
    double mean_l95 = 0.0;
    double mean_u95 = 0.0;
    double max_rhat = 1.0;
    std::vector<ReplicateResult> runs;
};

struct SimReport {
    std::vector<SimCell> cells;
};

struct GridOptions {
    SamplerConfig sampler;
    int bootstrap = 2000;
    /// Worker threads over replicates; 0 uses the hardware concurrency.
    int threads = 0;
};

/// Aggregates the successful runs of a cell; failed runs are only counted.
SimCell aggregate(std::string scenario, double bandwidth, std::string estimator, double true_rr,
                  std::vector<ReplicateResult> runs);

/// For each replicate: generate, window at every bandwidth, run every estimator.
/// Seeds for samplers and bootstraps derive from (spec seed, scenario, replicate,
/// bandwidth, estimator), so results do not depend on thread scheduling.
SimReport run_grid(const ScenarioSpec& spec, const std::vector<EstimatorSpec>& estimators,
                   const GridOptions& opts);

}  // namespace rdrrt
