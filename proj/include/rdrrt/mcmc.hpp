#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rdrrt {

/// A posterior known up to a constant. Out-of-support points return -infinity;
/// NaN is treated as a bug in the target. Must be safe to evaluate concurrently.
struct TargetDensity {
    std::vector<std::string> names;
    std::function<double(std::span<const double>)> log_density;
    /// Default starting point.
    std::vector<double> initial;
    /// Optional deterministic functions of the parameters, evaluated on retained draws.
    std::vector<std::string> derived_names;
    std::function<void(std::span<const double> params, std::span<double> out)> derived;

    std::size_t dimension() const { return names.size(); }
};

struct SamplerConfig {
    int chains = 2;
    int burn_in = 10'000;
    int iterations = 50'000;  // after burn-in
    int retain = 1'000;       // last draws kept per chain
    std::uint64_t seed = 20150101;
    double initial_scale = 0.1;
    double target_acceptance = 0.44;
    /// Keep every post-burn-in draw instead of the last `retain`.
    bool keep_full_trace = false;
    /// Adds joint Gaussian proposals whose covariance is learned during burn-in.
    bool block_updates = true;
    /// Joint proposals per iteration once available; 0 means one per dimension.
    int block_proposals = 0;
    bool parallel_chains = true;
};

struct Chain {
    std::vector<double> draws;    // row-major: retained x dimension
    std::vector<double> derived;  // row-major: retained x derived count
    std::vector<double> acceptance;  // per coordinate, post burn-in
    double block_acceptance = 0.0;
    std::vector<double> scales_end_of_burn_in;  // per coordinate, then block scale
    std::vector<double> scales_final;
};

struct Convergence {
    std::string name;
    double rhat = 1.0;
    bool rhat_available = false;
    bool degenerate = false;
    double ess = 0.0;
};

struct ChainSet {
    std::vector<std::string> names;
    std::vector<std::string> derived_names;
    std::size_t retained = 0;
    std::vector<Chain> chains;
    std::vector<Convergence> convergence;  // parameters first, then derived quantities
    std::vector<std::string> warnings;

    std::size_t dimension() const { return names.size(); }
    double draw(std::size_t chain, std::size_t i, std::size_t j) const {
        return chains[chain].draws[i * names.size() + j];
    }
    /// Draws of a parameter or derived quantity, one vector per chain.
    std::vector<std::vector<double>> per_chain(const std::string& name) const;
    /// Draws of a parameter or derived quantity, chains concatenated.
    std::vector<double> pooled(const std::string& name) const;
    const Convergence& convergence_of(const std::string& name) const;
};

/// Split R-hat above this emits a warning.
inline constexpr double kRhatWarning = 1.05;

/// Multi-chain random-walk Metropolis-within-Gibbs. One iteration is a sweep of
/// single-coordinate proposals followed by `block_proposals` joint proposals.
/// During burn-in each coordinate's log proposal scale is nudged toward
/// `target_acceptance` in batches of 50; the joint proposals use the covariance
/// of the second half of burn-in and tune their scale toward 0.234. All
/// adaptation stops at the end of burn-in. Chain k draws from its own RNG stream
/// seeded by (seed, k).
ChainSet sample(const TargetDensity& target, const SamplerConfig& cfg);

/// Split-chain R-hat and ESS per parameter and derived quantity.
std::vector<Convergence> diagnostics(const ChainSet& c);

/// Classic split R-hat. Needs >= 2 chains of >= 4 draws. Floored at 1; equal
/// constant chains give 1 with `degenerate` set.
double split_rhat(const std::vector<std::vector<double>>& chains, bool* degenerate = nullptr);

/// Effective sample size from the multi-chain autocorrelation with Geyer's
/// initial monotone sequence truncation.
double effective_sample_size(const std::vector<std::vector<double>>& chains);

}  // namespace rdrrt
