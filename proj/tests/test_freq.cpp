#include <cmath>
#include <random>

#include "doctest.h"
#include "rdrrt/error.hpp"
#include "rdrrt/freq.hpp"
#include "support.hpp"

using namespace rdrrt;
using rdrrt::testing::from_counts;
using rdrrt::testing::random_sample;

namespace {

CellCounts counts_of(std::array<std::size_t, 4> c0, std::array<std::size_t, 4> c1) {
    CellCounts c;
    c.cells[0] = c0;
    c.cells[1] = c1;
    return c;
}

// Two-arm sample with P(T=1|Z) = pt[z] and P(Y=1 | T, Z) = py[t].
WindowedSample bernoulli_sample(std::mt19937_64& rng, int n_per_arm, std::array<double, 2> pt,
                                std::array<double, 2> py) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::array<std::array<int, 4>, 2> counts{};
    for (int z = 0; z < 2; ++z) {
        for (int i = 0; i < n_per_arm; ++i) {
            const int t = u(rng) < pt[z];
            const int y = u(rng) < py[t];
            counts[z][2 * y + t] += 1;
        }
    }
    return from_counts(counts);
}

}  // namespace

TEST_CASE("GMM point estimate equals the plug-in on random datasets") {
    std::mt19937_64 rng(2024);
    int matched = 0, flagged = 0;
    for (int k = 0; k < 1000; ++k) {
        const auto c = CellCounts::from(random_sample(rng));
        if (c.mean_y_tbar(1) == c.mean_y_tbar(0)) continue;
        const double plug = plug_in_rrt(c);
        if (plug > 0.0) {
            const GmmFit g = gmm_point(c);
            CHECK(g.converged);
            CHECK(std::abs(g.rrt - plug) <= 1e-8 * std::max(1.0, plug));
            // both sample moments vanish at the solution
            double m0 = 0, m1 = 0;
            for (int z = 0; z < 2; ++z) {
                for (int y = 0; y < 2; ++y) {
                    for (int t = 0; t < 2; ++t) {
                        const double r = (y * std::exp(-g.psi * t) - g.alpha0) * c.count(z, y, t);
                        m0 += r;
                        m1 += z * r;
                    }
                }
            }
            CHECK(std::abs(m0) < 1e-8 * (c.n(0) + c.n(1)));
            CHECK(std::abs(m1) < 1e-8 * c.n(1));
            ++matched;
        } else {
            CHECK_THROWS_AS(gmm_point(c), NonIdentifiedError);
            ++flagged;
        }
    }
    MESSAGE(matched << " matched, " << flagged << " non-positive plug-in values flagged");
    CHECK(matched > 300);
}

TEST_CASE("GMM on a sharp design returns the risk ratio") {
    const auto c = counts_of({80, 0, 20, 0}, {0, 60, 0, 40});
    CHECK(gmm_point(c).rrt == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("GMM without a denominator contrast is not identified") {
    const auto c = counts_of({50, 30, 10, 10}, {30, 50, 10, 10});
    CHECK_THROWS_AS(gmm_point(c), NonIdentifiedError);
}

TEST_CASE("GMM bootstrap interval covers RR 1 under the null") {
    std::mt19937_64 rng(77);
    int covered = 0;
    for (int seed = 0; seed < 100; ++seed) {
        const auto s = bernoulli_sample(rng, 500, {0.2, 0.8}, {0.3, 0.3});
        const GmmFit g = gmm_msmm(s, 2000, static_cast<std::uint64_t>(seed));
        CHECK(g.l95 <= g.rrt);
        CHECK(g.rrt <= g.u95);
        covered += g.l95 <= 1.0 && 1.0 <= g.u95;
    }
    MESSAGE("covered " << covered << " / 100");
    CHECK(covered >= 90);
}

TEST_CASE("GMM bootstrap is deterministic and accounts for every replicate") {
    std::mt19937_64 rng(5);
    const auto s = bernoulli_sample(rng, 300, {0.3, 0.7}, {0.1, 0.25});
    const GmmFit a = gmm_msmm(s, 500, 9);
    const GmmFit b = gmm_msmm(s, 500, 9);
    CHECK(a.l95 == b.l95);
    CHECK(a.u95 == b.u95);
    CHECK(gmm_msmm(s, 500, 10).l95 != a.l95);
    CHECK(a.bootstrap_requested == 500);
    CHECK(a.bootstrap_used + a.bootstrap_discarded == 500);

    // few untreated events: some resamples lose the denominator contrast
    const auto sparse = from_counts({{{5, 1, 3, 1}, {2, 5, 1, 2}}});
    const GmmFit g = gmm_msmm(sparse, 400, 3);
    CHECK(g.bootstrap_used + g.bootstrap_discarded == 400);
    CHECK(g.bootstrap_discarded > 0);
}

TEST_CASE("Balke-Pearl bounds agree with the linear-programming oracle") {
    // values from tests/oracles/balke_pearl_lp.py
    struct Case {
        std::array<std::size_t, 4> c0, c1;
        double lo, hi;
    };
    const Case cases[] = {
        {{25, 25, 25, 25}, {25, 25, 25, 25}, -0.5, 0.5},
        {{610, 80, 290, 20}, {150, 520, 40, 290}, -0.1, 0.19},
        {{400, 30, 60, 10}, {20, 300, 5, 175}, 0.15, 0.28},
    };
    for (const auto& k : cases) {
        const auto b = balke_pearl_bounds(counts_of(k.c0, k.c1));
        CHECK(b.lower == doctest::Approx(k.lo).epsilon(1e-12));
        CHECK(b.upper == doctest::Approx(k.hi).epsilon(1e-12));
        CHECK(b.width == doctest::Approx(k.hi - k.lo).epsilon(1e-12));
        CHECK_FALSE(b.instrument_inequality_violated);
    }
    const auto uniform = balke_pearl_bounds(counts_of({25, 25, 25, 25}, {25, 25, 25, 25}));
    CHECK(uniform.lower <= 0.0);
    CHECK(uniform.upper >= 0.0);
}

TEST_CASE("instrument inequality violation is flagged") {
    // the LP oracle finds no compatible compliance/response distribution
    CHECK(balke_pearl_bounds(counts_of({7, 3, 11, 29}, {2, 41, 6, 13})).instrument_inequality_violated);
}

TEST_CASE("perfect compliance collapses the bounds") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> k(1, 500);
    for (int rep = 0; rep < 200; ++rep) {
        const auto c = counts_of({static_cast<std::size_t>(k(rng)), 0, static_cast<std::size_t>(k(rng)), 0},
                                 {0, static_cast<std::size_t>(k(rng)), 0, static_cast<std::size_t>(k(rng))});
        const auto b = balke_pearl_bounds(c);
        const double rd = c.mean_y(1) - c.mean_y(0);
        CHECK(std::abs(b.lower - rd) < 1e-12);
        CHECK(std::abs(b.upper - rd) < 1e-12);
        CHECK(std::abs(b.observed_risk_difference - rd) < 1e-12);
    }
}

TEST_CASE("bounds are invariant to scaling the counts") {
    std::mt19937_64 rng(41);
    for (int rep = 0; rep < 100; ++rep) {
        const auto c = CellCounts::from(random_sample(rng));
        CellCounts scaled = c;
        for (auto& arm : scaled.cells) {
            for (auto& v : arm) v *= 7;
        }
        const auto a = balke_pearl_bounds(c), b = balke_pearl_bounds(scaled);
        CHECK(std::abs(a.lower - b.lower) < 1e-12);
        CHECK(std::abs(a.upper - b.upper) < 1e-12);
        CHECK(a.instrument_inequality_violated == b.instrument_inequality_violated);
        if (!a.instrument_inequality_violated) {
            CHECK(a.lower <= a.upper);
            CHECK(a.lower >= -1.0);
            CHECK(a.upper <= 1.0);
        }
    }
}

TEST_CASE("first-stage F matches a direct two-group computation") {
    std::mt19937_64 rng(13);
    const auto s = bernoulli_sample(rng, 137, {0.35, 0.55}, {0.1, 0.1});
    const auto c = CellCounts::from(s);
    const double n1 = c.n(1), n0 = c.n(0), n = n1 + n0;
    const double m1 = c.mean_t(1), m0 = c.mean_t(0), m = (n1 * m1 + n0 * m0) / n;
    const double between = n1 * (m1 - m) * (m1 - m) + n0 * (m0 - m) * (m0 - m);
    const double within = n1 * m1 * (1 - m1) + n0 * m0 * (1 - m0);
    const double f = between / (within / (n - 2));
    const auto r = first_stage_f(s);
    CHECK(r.f == doctest::Approx(f).epsilon(1e-10));
    CHECK(r.df1 == 1);
    CHECK(r.df2 == static_cast<int>(n) - 2);
    CHECK(first_stage_f(c).f == doctest::Approx(f).epsilon(1e-10));
}

TEST_CASE("first-stage p-value against the closed-form t(2) tail") {
    // 2 records per arm: df2 = 2, and P(F(1,2) > f) = 1 - sqrt(f / (2 + f))
    const auto s = from_counts({{{2, 0, 0, 0}, {1, 1, 0, 0}}});
    const auto r = first_stage_f(s);
    REQUIRE(r.df2 == 2);
    CHECK(r.f == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(1.0 - std::sqrt(r.f / (2.0 + r.f))).epsilon(1e-10));
}

TEST_CASE("first-stage F edge cases") {
    const auto perfect = first_stage_f(counts_of({50, 0, 10, 0}, {0, 40, 0, 20}));
    CHECK(std::isinf(perfect.f));
    CHECK(perfect.p_value == 0.0);
    const auto flat = first_stage_f(counts_of({50, 0, 10, 0}, {40, 0, 20, 0}));
    CHECK(flat.f == 0.0);
    CHECK(flat.p_value == 1.0);
}

TEST_CASE("first-stage F under the null: mean near 1 and uniform p-values") {
    std::mt19937_64 rng(99);
    const int sims = 1000;
    double sum_f = 0, sum_p = 0;
    int small_p = 0;
    for (int k = 0; k < sims; ++k) {
        const auto r = first_stage_f(bernoulli_sample(rng, 500, {0.4, 0.4}, {0.1, 0.1}));
        sum_f += r.f;
        sum_p += r.p_value;
        small_p += r.p_value < 0.1;
    }
    CHECK(std::abs(sum_f / sims - 1.0) < 0.15);
    CHECK(std::abs(sum_p / sims - 0.5) < 0.04);
    CHECK(std::abs(small_p / static_cast<double>(sims) - 0.1) < 0.03);
}

TEST_CASE("first-stage F power: 0.2 to 0.8 jump at 200 per arm") {
    std::mt19937_64 rng(123);
    int strong = 0;
    for (int k = 0; k < 100; ++k) strong += first_stage_f(bernoulli_sample(rng, 200, {0.2, 0.8}, {0.1, 0.1})).f > 10.0;
    CHECK(strong >= 99);
}
