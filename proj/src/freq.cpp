#include "rdrrt/freq.hpp"

#include <algorithm>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <random>

#include "rdrrt/error.hpp"
#include "rdrrt/stats.hpp"

namespace rdrrt {

namespace {

constexpr double kPsiBound = 20.0;

// Sample moment E_n[(Y exp(-psi T) - alpha0(psi)) Z] with alpha0 profiled out.
struct ProfiledMoment {
    double n1, n0;
    double y_tbar1, y_t1;  // counts with Z = 1
    double y_tbar0, y_t0;  // counts with Z = 0

    explicit ProfiledMoment(const CellCounts& c)
        : n1(static_cast<double>(c.n(1))), n0(static_cast<double>(c.n(0))),
          y_tbar1(static_cast<double>(c.count(1, 1, 0))), y_t1(static_cast<double>(c.count(1, 1, 1))),
          y_tbar0(static_cast<double>(c.count(0, 1, 0))), y_t0(static_cast<double>(c.count(0, 1, 1))) {}

    double alpha0(double psi) const {
        const double w = std::exp(-psi);
        return (y_tbar1 + y_tbar0 + w * (y_t1 + y_t0)) / (n1 + n0);
    }
    double operator()(double psi) const {
        const double w = std::exp(-psi);
        return (y_tbar1 + w * y_t1 - alpha0(psi) * n1) / (n1 + n0);
    }
};

// Arm-preserving resample of records, drawn as multinomial cell counts.
CellCounts resample(const CellCounts& c, std::mt19937_64& rng) {
    CellCounts out;
    for (int z = 0; z < 2; ++z) {
        std::size_t left = c.n(z);
        double mass = 1.0;
        for (int k = 0; k < 4; ++k) {
            const double p = static_cast<double>(c.cells[z][k]) / static_cast<double>(c.n(z));
            std::size_t draw = left;
            if (k < 3 && left > 0) {
                const double q = mass > 0.0 ? std::clamp(p / mass, 0.0, 1.0) : 0.0;
                std::binomial_distribution<std::size_t> bin(left, q);
                draw = bin(rng);
            }
            out.cells[z][k] = draw;
            left -= draw;
            mass -= p;
        }
    }
    return out;
}

}  // namespace

GmmFit gmm_point(const CellCounts& c) {
    if (c.n(0) == 0 || c.n(1) == 0) throw EmptyArmError();
    const ProfiledMoment g(c);
    const double lo = g(-kPsiBound), hi = g(kPsiBound);
    if (!(lo * hi < 0.0)) {
        if (lo == 0.0 || hi == 0.0) throw NonIdentifiedError("non-identified: root on the search boundary");
        throw NonIdentifiedError("non-identified: no sign change for psi in [-20, 20]");
    }
    boost::uintmax_t iters = 200;
    const auto bracket = boost::math::tools::toms748_solve(
        g, -kPsiBound, kPsiBound, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
    GmmFit f;
    f.psi = 0.5 * (bracket.first + bracket.second);
    f.alpha0 = g.alpha0(f.psi);
    f.rrt = std::exp(f.psi);
    f.converged = iters < 200;
    return f;
}

GmmFit gmm_msmm(const WindowedSample& s, int bootstrap, std::uint64_t seed) {
    if (bootstrap < 0) throw InputError("bootstrap replicates must be >= 0");
    const CellCounts c = CellCounts::from(s);
    GmmFit fit = gmm_point(c);
    fit.bootstrap_requested = bootstrap;
    std::vector<double> reps;
    reps.reserve(static_cast<std::size_t>(bootstrap));
    for (int b = 0; b < bootstrap; ++b) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(b), 0x676d6dU};
        std::mt19937_64 rng(seq);
        try {
            reps.push_back(gmm_point(resample(c, rng)).rrt);
        } catch (const NumericalError&) {
            ++fit.bootstrap_discarded;
        }
    }
    fit.bootstrap_used = static_cast<int>(reps.size());
    if (reps.empty()) {
        fit.l95 = fit.u95 = std::numeric_limits<double>::quiet_NaN();
        if (bootstrap > 0) fit.warnings.emplace_back("every bootstrap replicate was non-identified");
    } else {
        std::sort(reps.begin(), reps.end());
        fit.l95 = quantile_sorted(reps, 0.025);
        fit.u95 = quantile_sorted(reps, 0.975);
    }
    if (fit.bootstrap_discarded > 0) {
        fit.warnings.push_back(std::to_string(fit.bootstrap_discarded) +
                               " bootstrap replicates discarded as non-identified");
    }
    return fit;
}

BoundsResult balke_pearl_bounds(const CellCounts& c) {
    if (c.n(0) == 0 || c.n(1) == 0) throw EmptyArmError();
    // p[y][t][z] = P(Y=y, T=t | Z=z)
    double p[2][2][2];
    for (int y = 0; y < 2; ++y)
        for (int t = 0; t < 2; ++t)
            for (int z = 0; z < 2; ++z) p[y][t][z] = c.prob(z, y, t);
    auto P = [&](int y, int t, int z) { return p[y][t][z]; };

    const double lower[] = {
        P(1, 1, 1) + P(0, 0, 0) - 1.0,
        P(1, 1, 0) + P(0, 0, 1) - 1.0,
        P(1, 1, 0) - P(1, 1, 1) - P(1, 0, 1) - P(0, 1, 0) - P(1, 0, 0),
        P(1, 1, 1) - P(1, 1, 0) - P(1, 0, 0) - P(0, 1, 1) - P(1, 0, 1),
        -P(0, 1, 1) - P(1, 0, 1),
        -P(0, 1, 0) - P(1, 0, 0),
        P(0, 0, 1) - P(0, 1, 1) - P(1, 0, 1) - P(0, 1, 0) - P(0, 0, 0),
        P(0, 0, 0) - P(0, 1, 0) - P(1, 0, 0) - P(0, 1, 1) - P(0, 0, 1),
    };
    const double upper[] = {
        1.0 - P(0, 1, 1) - P(1, 0, 0),
        1.0 - P(0, 1, 0) - P(1, 0, 1),
        -P(0, 1, 0) + P(0, 1, 1) + P(0, 0, 1) + P(1, 1, 0) + P(0, 0, 0),
        -P(0, 1, 1) + P(1, 1, 1) + P(0, 0, 1) + P(0, 1, 0) + P(0, 0, 0),
        P(1, 1, 1) + P(0, 0, 1),
        P(1, 1, 0) + P(0, 0, 0),
        -P(1, 0, 1) + P(1, 1, 1) + P(0, 0, 1) + P(1, 1, 0) + P(1, 0, 0),
        -P(1, 0, 0) + P(1, 1, 0) + P(0, 0, 0) + P(1, 1, 1) + P(1, 0, 1),
    };
    BoundsResult r;
    r.lower = *std::max_element(std::begin(lower), std::end(lower));
    r.upper = *std::min_element(std::begin(upper), std::end(upper));
    r.width = r.upper - r.lower;
    r.observed_risk_difference = c.mean_y(1) - c.mean_y(0);
    for (int t = 0; t < 2; ++t) {
        double s = 0.0;
        for (int y = 0; y < 2; ++y) s += std::max(P(y, t, 0), P(y, t, 1));
        if (s > 1.0 + 1e-12) r.instrument_inequality_violated = true;
    }
    return r;
}

BoundsResult balke_pearl_bounds(const WindowedSample& s) {
    if (s.n0 == 0 || s.n1 == 0) throw EmptyArmError();
    return balke_pearl_bounds(CellCounts::from(s));
}

FTestResult first_stage_f(const CellCounts& c) {
    const double n1 = static_cast<double>(c.n(1)), n0 = static_cast<double>(c.n(0));
    const double n = n1 + n0;
    if (n < 3.0) throw InputError("first-stage F needs at least 3 observations");
    if (n1 == 0.0 || n0 == 0.0) throw InputError("first-stage F: z has zero variance");
    const double p1 = c.mean_t(1), p0 = c.mean_t(0);
    const double coef = p1 - p0;
    // Residual sum of squares of a binary t around its arm means.
    const double rss = n1 * p1 * (1.0 - p1) + n0 * p0 * (1.0 - p0);
    FTestResult r;
    r.df2 = static_cast<int>(n) - 2;
    if (rss <= 0.0) {
        r.f = coef != 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        r.p_value = coef != 0.0 ? 0.0 : 1.0;
        return r;
    }
    const double s2 = rss / (n - 2.0);
    r.f = coef * coef / (s2 * (1.0 / n1 + 1.0 / n0));
    const boost::math::fisher_f dist(1.0, n - 2.0);
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.f));
    return r;
}

FTestResult first_stage_f(const WindowedSample& s) { return first_stage_f(CellCounts::from(s)); }

}  // namespace rdrrt
