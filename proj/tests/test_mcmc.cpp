#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "rdrrt/error.hpp"
#include "rdrrt/mcmc.hpp"

using namespace rdrrt;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TargetDensity standard_normal(std::size_t dim = 1) {
    TargetDensity t;
    for (std::size_t j = 0; j < dim; ++j) t.names.push_back("x" + std::to_string(j));
    t.initial.assign(dim, 0.5);
    t.log_density = [](std::span<const double> v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        return -0.5 * s;
    };
    return t;
}

std::vector<double> iid(std::uint64_t seed, std::size_t n, double mu) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(mu, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

}  // namespace

TEST_CASE("standard normal: mean within 4 MCSE, variance within 10%") {
    const auto c = sample(standard_normal(), SamplerConfig{});
    const auto pooled = c.pooled("x0");
    REQUIRE(pooled.size() == 2000);
    double m = 0, v = 0;
    for (double x : pooled) m += x;
    m /= pooled.size();
    for (double x : pooled) v += (x - m) * (x - m);
    v /= pooled.size() - 1;
    const double ess = effective_sample_size(c.per_chain("x0"));
    CHECK(ess > 100);
    CHECK(std::abs(m) < 4.0 * std::sqrt(v / ess));
    CHECK(std::abs(v - 1.0) < 0.1);
    CHECK(c.convergence_of("x0").rhat < 1.05);
}

TEST_CASE("correlated bivariate normal moments") {
    TargetDensity t;
    t.names = {"a", "b"};
    t.initial = {0.0, 0.0};
    const double rho = 0.9;
    t.log_density = [rho](std::span<const double> v) {
        return -0.5 * (v[0] * v[0] - 2 * rho * v[0] * v[1] + v[1] * v[1]) / (1 - rho * rho);
    };
    SamplerConfig cfg;
    cfg.keep_full_trace = true;
    const auto c = sample(t, cfg);
    const auto a = c.pooled("a"), b = c.pooled("b");
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= a.size();
    mb /= b.size();
    double va = 0, cab = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        va += (a[i] - ma) * (a[i] - ma);
        cab += (a[i] - ma) * (b[i] - mb);
    }
    CHECK(va / a.size() == doctest::Approx(1.0).epsilon(0.1));
    CHECK(cab / a.size() == doctest::Approx(rho).epsilon(0.1));
}

TEST_CASE("point-mass target is reported as stuck") {
    TargetDensity t;
    t.names = {"x"};
    t.initial = {0.5};
    t.log_density = [](std::span<const double> v) { return v[0] == 0.5 ? 0.0 : -kInf; };
    SamplerConfig cfg;
    cfg.burn_in = 500;
    cfg.iterations = 500;
    cfg.retain = 100;
    CHECK_THROWS_WITH_AS(sample(t, cfg), "sampler stuck", NumericalError);
}

TEST_CASE("NaN log-density is an error") {
    TargetDensity t = standard_normal();
    t.log_density = [](std::span<const double> v) { return v[0] > 0.7 ? std::nan("") : -0.5 * v[0] * v[0]; };
    SamplerConfig cfg;
    cfg.burn_in = 200;
    cfg.iterations = 200;
    cfg.retain = 100;
    CHECK_THROWS_AS(sample(t, cfg), NumericalError);
}

TEST_CASE("no finite starting point is an error") {
    TargetDensity t = standard_normal();
    t.log_density = [](std::span<const double>) { return -kInf; };
    CHECK_THROWS_AS(sample(t, SamplerConfig{}), NumericalError);
}

TEST_CASE("determinism and chain independence") {
    SamplerConfig cfg;
    cfg.burn_in = 2000;
    cfg.iterations = 4000;
    cfg.retain = 500;
    const auto t = standard_normal(3);
    const auto a = sample(t, cfg);
    const auto b = sample(t, cfg);
    for (int k = 0; k < 2; ++k) CHECK(a.chains[k].draws == b.chains[k].draws);

    SamplerConfig serial = cfg;
    serial.parallel_chains = false;
    const auto s = sample(t, serial);
    for (int k = 0; k < 2; ++k) CHECK(a.chains[k].draws == s.chains[k].draws);

    SamplerConfig three = cfg;
    three.chains = 3;
    const auto c3 = sample(t, three);
    for (int k = 0; k < 2; ++k) CHECK(a.chains[k].draws == c3.chains[k].draws);
    CHECK(a.chains[0].draws != a.chains[1].draws);

    SamplerConfig other = cfg;
    other.seed = cfg.seed + 1;
    CHECK(sample(t, other).chains[0].draws != a.chains[0].draws);
}

TEST_CASE("adaptation is frozen after burn-in") {
    SamplerConfig cfg;
    cfg.burn_in = 3000;
    cfg.iterations = 3000;
    cfg.retain = 500;
    const auto c = sample(standard_normal(2), cfg);
    for (const auto& ch : c.chains) {
        CHECK(ch.scales_end_of_burn_in == ch.scales_final);
        for (double acc : ch.acceptance) CHECK(acc == doctest::Approx(0.44).epsilon(0.25));
    }
}

TEST_CASE("retained draws have the documented shape") {
    SamplerConfig cfg;
    cfg.chains = 3;
    cfg.burn_in = 1000;
    cfg.iterations = 2000;
    cfg.retain = 300;
    TargetDensity t = standard_normal(2);
    t.derived_names = {"sum"};
    t.derived = [](std::span<const double> v, std::span<double> out) { out[0] = v[0] + v[1]; };
    const auto c = sample(t, cfg);
    CHECK(c.chains.size() == 3);
    CHECK(c.retained == 300);
    for (const auto& ch : c.chains) {
        CHECK(ch.draws.size() == 600);
        REQUIRE(ch.derived.size() == 300);
        for (std::size_t i = 0; i < 300; ++i) CHECK(ch.derived[i] == ch.draws[2 * i] + ch.draws[2 * i + 1]);
    }
}

TEST_CASE("two-level step density: frequencies match target probabilities") {
    // density 0.3 on [0,1), 0.7 on [1,2): a two-point target seen through a fine grid
    TargetDensity t;
    t.names = {"x"};
    t.initial = {0.5};
    t.log_density = [](std::span<const double> v) {
        const double x = v[0];
        if (x < 0.0 || x >= 2.0) return -kInf;
        const double cell = std::floor(x * 100.0) / 100.0;
        return cell < 1.0 ? std::log(0.3) : std::log(0.7);
    };
    SamplerConfig cfg;
    cfg.keep_full_trace = true;
    const auto c = sample(t, cfg);
    std::vector<std::vector<double>> ind;
    double hits = 0, n = 0;
    for (const auto& ch : c.per_chain("x")) {
        ind.emplace_back();
        for (double x : ch) {
            ind.back().push_back(x < 1.0);
            hits += x < 1.0;
            n += 1;
        }
    }
    const double p = hits / n;
    const double ess = effective_sample_size(ind);
    const double se = std::sqrt(0.3 * 0.7 / ess);
    CHECK(std::abs(p - 0.3) < 3.0 * se);
}

TEST_CASE("split R-hat reference cases") {
    SUBCASE("identical constant chains") {
        bool degenerate = false;
        const std::vector<std::vector<double>> c{std::vector<double>(100, 2.0), std::vector<double>(100, 2.0)};
        CHECK(split_rhat(c, &degenerate) == 1.0);
        CHECK(degenerate);
    }
    SUBCASE("iid chains from one distribution") {
        for (std::uint64_t s = 0; s < 10; ++s) {
            const double r = split_rhat({iid(2 * s, 1000, 0.0), iid(2 * s + 1, 1000, 0.0)});
            CHECK(r >= 1.0);
            CHECK(r <= 1.02);
        }
    }
    SUBCASE("chains centred at 0 and 10") {
        CHECK(split_rhat({iid(1, 1000, 0.0), iid(2, 1000, 10.0)}) > 2.0);
    }
    SUBCASE("hand-computed value") {
        // halves {0,1},{2,3},{10,11},{12,13}, each of length n = 2
        const std::vector<std::vector<double>> c{{0, 1, 2, 3}, {10, 11, 12, 13}};
        const double means[] = {0.5, 2.5, 10.5, 12.5};
        const double grand = 6.5;
        double b = 0;
        for (double m : means) b += (m - grand) * (m - grand);
        b = 2.0 * b / 3.0;
        const double w = 0.5;
        const double expected = std::sqrt(((1.0 / 2.0) * w + b / 2.0) / w);
        CHECK(split_rhat(c) == doctest::Approx(expected).epsilon(1e-12));
    }
    SUBCASE("too few draws") {
        CHECK_THROWS(split_rhat({{1, 2, 3}, {1, 2, 3}}));
    }
}

TEST_CASE("ESS of iid draws is close to the draw count") {
    const double ess = effective_sample_size({iid(5, 2000, 0.0), iid(6, 2000, 0.0)});
    CHECK(ess > 3000);
    CHECK(ess < 5000);
}

TEST_CASE("single chain reports R-hat unavailable") {
    SamplerConfig cfg;
    cfg.chains = 1;
    cfg.burn_in = 1000;
    cfg.iterations = 1000;
    cfg.retain = 200;
    const auto c = sample(standard_normal(), cfg);
    CHECK_FALSE(c.convergence_of("x0").rhat_available);
}
