#pragma once

#include <string>
#include <vector>

#include "rdrrt/data.hpp"
#include "rdrrt/mcmc.hpp"
#include "rdrrt/stats.hpp"

namespace rdrrt {

/// How E(Y(1-T) | Z=z), the denominator component, is modelled.
enum class Denominator {
    pois,       // Poisson regression of y(1-t) on x*
    flex,       // Binomial count of y(1-t) with informative logit-normal priors
    prod_flex,  // Poisson regression of y on (x*, 1-t) times a Binomial P(1-T | Z)
};

/// Prior placed directly on the RRT by the constrained variants.
struct RrtPrior {
    enum class Kind { gamma, lognormal };
    Kind kind = Kind::gamma;
    double a = 3.0;  // gamma shape, or lognormal log-mean
    double b = 1.0;  // gamma rate, or lognormal log-sd

    static RrtPrior gamma(double shape, double rate) { return {Kind::gamma, shape, rate}; }
    static RrtPrior lognormal(double mu, double sigma) { return {Kind::lognormal, mu, sigma}; }
    double log_density(double rrt) const;
};

struct PriorSpec {
    /// Normal prior on every regression coefficient (alpha, beta, delta, gamma, kappa).
    double coef_mean = 0.0;
    double coef_variance = 100.0;
    /// logit-normal priors on q_z (flex) and r_z (product model), above and below.
    double logit_mean_above = -3.0;
    double logit_mean_below = 3.0;
    double logit_variance = 1.0;
    RrtPrior rrt = RrtPrior::gamma(3.0, 1.0);

    void validate() const;
};

struct ModelSpec {
    Denominator denominator = Denominator::flex;
    bool constrained = false;
    PriorSpec prior;

    /// "pois.pois", "pois.flex" or "pois.prod.flex".
    std::string tag() const;
    /// Inverse of tag(); throws InputError listing the valid tags.
    static ModelSpec parse(const std::string& tag, bool constrained);
    static const std::vector<std::string>& tags();
};

/// Sufficient statistics of one side of the threshold.
struct ArmStats {
    std::size_t n = 0;
    double sum_y = 0.0;
    double sum_y_x = 0.0;
    double sum_y_tbar = 0.0;    // count of y=1, t=0
    double sum_y_tbar_x = 0.0;
    double count_tbar = 0.0;    // count of t=0
    ExpSum exp_all;             // over every record in the arm
    ExpSum exp_treated;         // t = 1
    ExpSum exp_untreated;       // t = 0

    static ArmStats from(const WindowedSample& s, int z);
};

/// Posterior targets. Parameter order (unconstrained / constrained):
///   pois.pois       alpha1|rrt, alpha0, beta1, beta0, delta1, delta0, gamma1, gamma0
///   pois.flex       alpha1|rrt, alpha0, beta1, beta0, logit_q1, logit_q0
///   pois.prod.flex  alpha1|rrt, alpha0, beta1, beta0, delta1, delta0, gamma1, gamma0,
///                   kappa1, kappa0, logit_r1, logit_r0
/// Derived quantities: rrt, pi, psi (and alpha1 when constrained).
TargetDensity build_target_pois_pois(const WindowedSample& s, const PriorSpec& p, bool constrained);
TargetDensity build_target_pois_flex(const WindowedSample& s, const PriorSpec& p, bool constrained);
TargetDensity build_target_pois_prod_flex(const WindowedSample& s, const PriorSpec& p, bool constrained);
TargetDensity build_target(const WindowedSample& s, const ModelSpec& m);

/// The constrained reparameterisation: alpha1 = log{(1 - rrt) psi + exp(alpha0)}.
/// NaN when the argument of the log is not positive.
double constrained_alpha1(double rrt, double psi, double alpha0);

/// Largest |1 - (exp(alpha1) - exp(alpha0)) / psi - rrt| over the pooled draws of a
/// constrained fit. NaN when the chain set carries no alpha1 draws.
double constraint_roundtrip_error(const ChainSet& c);

/// Number of pooled draws whose round-trip error exceeds tol (0 without alpha1 draws).
std::size_t constraint_roundtrip_exceedances(const ChainSet& c, double tol);

/// Posterior summary of the RRT draws of one fit.
struct RrtEstimate {
    std::string tag;
    bool constrained = false;
    double bandwidth = 0.0;
    double mean = 0.0;
    double median = 0.0;
    double l95 = 0.0;
    double u95 = 0.0;
    double share_nonpositive = 0.0;
    double rhat_rrt = 1.0;
    double rhat_max = 1.0;  // over parameters and the RRT
    double ess_rrt = 0.0;
    std::size_t n1 = 0;
    std::size_t n0 = 0;
    std::vector<std::string> warnings;
};

/// Pools the retained "rrt" draws across chains. Throws NumericalError on non-finite draws.
RrtEstimate summarize(const ChainSet& c, const std::string& tag, double bandwidth);

/// Data-driven warnings for a model on a sample (no outcome events, empty t=0 cells).
std::vector<std::string> data_warnings(const WindowedSample& s, const ModelSpec& m);

/// Builds the target, samples, and summarises.
RrtEstimate estimate_rrt(const WindowedSample& s, const ModelSpec& m, const SamplerConfig& cfg,
                         ChainSet* chains_out = nullptr);

}  // namespace rdrrt
