#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "rdrrt/data.hpp"
#include "rdrrt/error.hpp"

using namespace rdrrt;

namespace {

std::vector<Observation> make_data(std::mt19937_64& rng, std::size_t n, bool sharp = false) {
    std::uniform_real_distribution<double> ux(0.05, 0.35), u(0.0, 1.0);
    const double p_t = u(rng), p_y0 = u(rng), p_y1 = u(rng);
    std::vector<Observation> out;
    for (std::size_t i = 0; i < n; ++i) {
        Observation o;
        o.x = ux(rng);
        const int z = o.x >= 0.2;
        o.t = sharp ? z : (u(rng) < (z ? 1.0 - p_t * 0.5 : p_t * 0.5));
        o.y = u(rng) < (o.t ? p_y1 : p_y0);
        out.push_back(o);
    }
    return out;
}

}  // namespace

TEST_CASE("load_dataset parses rows in order") {
    std::istringstream in("x,t,y\n0.21,1,0\n0.18,0,1\n");
    const auto d = load_dataset(in);
    REQUIRE(d.size() == 2);
    CHECK(d[0] == Observation{0.21, 1, 0});
    CHECK(d[1] == Observation{0.18, 0, 1});
}

TEST_CASE("load_dataset honours remapped and reordered columns") {
    std::istringstream in("id;outcome;score;statin\n7;1;0.3;0\n");
    CsvSchema s{"score", "statin", "outcome", ';'};
    const auto d = load_dataset(in, s);
    REQUIRE(d.size() == 1);
    CHECK(d[0] == Observation{0.3, 0, 1});
}

TEST_CASE("load_dataset error paths") {
    SUBCASE("non-binary treatment names the row") {
        std::istringstream in("x,t,y\n0.2,1,0\n0.3,0,0\n0.25,2,1\n");
        CHECK_THROWS_WITH_AS(load_dataset(in), "row 3: t must be 0/1", InputError);
    }
    SUBCASE("empty body") {
        std::istringstream in("x,t,y\n");
        CHECK_THROWS_WITH_AS(load_dataset(in), "no observations", InputError);
    }
    SUBCASE("empty stream") {
        std::istringstream in("");
        CHECK_THROWS_AS(load_dataset(in), InputError);
    }
    SUBCASE("x outside [0,1]") {
        std::istringstream in("x,t,y\n1.5,1,0\n");
        CHECK_THROWS_WITH_AS(load_dataset(in), "row 1: x outside [0,1]", InputError);
    }
    SUBCASE("unparseable x") {
        std::istringstream in("x,t,y\nabc,1,0\n");
        CHECK_THROWS_WITH_AS(load_dataset(in), "row 1: x is not a finite number", InputError);
    }
    SUBCASE("missing column") {
        std::istringstream in("x,t\n0.2,1\n");
        CHECK_THROWS_AS(load_dataset(in), InputError);
    }
}

TEST_CASE("Window rejects invalid bandwidths") {
    CHECK_THROWS_AS(Window(0.2, 0.0), InputError);
    CHECK_THROWS_AS(Window(0.2, -0.1), InputError);
    CHECK_THROWS_AS(Window(0.2, 0.3), InputError);
    CHECK_NOTHROW(Window(0.2, 0.2));
}

TEST_CASE("window assigns ties above and excludes out-of-window points") {
    const std::vector<Observation> d{{0.2, 1, 0}, {0.174, 0, 1}, {0.19, 0, 0}, {0.224, 1, 1}, {0.2251, 1, 0}};
    const auto s = window(d, Window(0.2, 0.025));
    REQUIRE(s.size() == 3);
    CHECK(s.records[0].z == 1);
    CHECK(s.records[0].x_star == 0.0);
    CHECK(s.n1 == 2);
    CHECK(s.n0 == 1);
    CHECK(s.records[1].x_star == doctest::Approx(-0.01));
}

TEST_CASE("window keeps decimal bandwidth edges") {
    const std::vector<Observation> d{{0.175, 0, 0}, {0.176, 0, 1}, {0.225, 1, 1}};
    const auto s = window(d, Window(0.2, 0.025));
    CHECK(s.size() == 3);
}

TEST_CASE("window derives y_tbar") {
    const std::vector<Observation> d{{0.1, 0, 1}, {0.1, 1, 1}, {0.3, 0, 0}, {0.3, 0, 1}};
    const auto s = window(d, Window(0.2, 0.1));
    CHECK(s.records[0].y_tbar == 1);
    CHECK(s.records[1].y_tbar == 0);
    CHECK(s.records[2].y_tbar == 0);
    CHECK(s.records[3].y_tbar == 1);
}

TEST_CASE("window with all data above threshold is an empty arm") {
    const std::vector<Observation> d{{0.21, 1, 0}, {0.22, 0, 1}};
    CHECK_THROWS_WITH_AS(window(d, Window(0.2, 0.05)), "empty arm", EmptyArmError);
}

TEST_CASE("window is idempotent") {
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        const auto d = make_data(rng, 300);
        const Window w(0.2, 0.05);
        const auto s1 = window(d, w);
        const auto back = s1.to_observations();
        const auto s2 = window(back, w);
        REQUIRE(s2.size() == s1.size());
        for (std::size_t i = 0; i < s1.size(); ++i) {
            CHECK(s2.records[i].z == s1.records[i].z);
            CHECK(s2.records[i].t == s1.records[i].t);
            CHECK(s2.records[i].y == s1.records[i].y);
            CHECK(std::abs(s2.records[i].x_star - s1.records[i].x_star) < 1e-15);
            CHECK(std::abs(s1.records[i].x_star) <= 0.05 + 1e-12);
        }
    }
}

TEST_CASE("plug_in_rrt worked examples") {
    CHECK(plug_in_rrt(0.3, 0.2, 0.05, 0.15) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(plug_in_rrt(0.25, 0.25, 0.05, 0.15) == 1.0);
    CHECK(plug_in_rrt(0.25, 0.25, 0.4, 0.1) == 1.0);
    // negative values are returned as-is
    CHECK(plug_in_rrt(0.4, 0.1, 0.2, 0.1) == doctest::Approx(-2.0).epsilon(1e-12));
    CHECK_THROWS_WITH_AS(plug_in_rrt(0.3, 0.2, 0.1, 0.1), "unidentified: zero denominator",
                         NonIdentifiedError);
}

TEST_CASE("CellCounts means equal direct sample averages") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const auto s = window(make_data(rng, 500), Window(0.2, 0.1));
        const auto c = CellCounts::from(s);
        for (int z = 0; z < 2; ++z) {
            double n = 0, sy = 0, st = 0, sytb = 0, syt = 0;
            for (const auto& r : s.records) {
                if (r.z != z) continue;
                n += 1;
                sy += r.y;
                st += r.t;
                sytb += r.y * (1 - r.t);
                syt += r.y * r.t;
            }
            CHECK(c.n(z) == static_cast<std::size_t>(n));
            CHECK(c.mean_y(z) == doctest::Approx(sy / n).epsilon(1e-14));
            CHECK(c.mean_t(z) == doctest::Approx(st / n).epsilon(1e-14));
            CHECK(c.mean_y_tbar(z) == doctest::Approx(sytb / n).epsilon(1e-14));
            CHECK(c.mean_y_t(z) == doctest::Approx(syt / n).epsilon(1e-14));
            CHECK(c.count(z, 0, 0) + c.count(z, 0, 1) + c.count(z, 1, 0) + c.count(z, 1, 1) == c.n(z));
        }
    }
}

TEST_CASE("plug_in_rrt equals -dYT/dYTbar on random cell counts") {
    std::mt19937_64 rng(17);
    int checked = 0;
    for (int rep = 0; rep < 200; ++rep) {
        const auto c = CellCounts::from(window(make_data(rng, 400), Window(0.2, 0.1)));
        const double d_yt = c.mean_y_t(1) - c.mean_y_t(0);
        const double d_ytbar = c.mean_y_tbar(1) - c.mean_y_tbar(0);
        if (d_ytbar == 0.0) continue;
        const double direct = 1.0 - (d_yt + d_ytbar) / d_ytbar;
        CHECK(std::abs(plug_in_rrt(c) - direct) <= 1e-12 * std::max(1.0, std::abs(direct)));
        CHECK(std::abs(plug_in_rrt(c) - (-d_yt / d_ytbar)) <= 1e-12 * std::max(1.0, std::abs(direct)));
        ++checked;
    }
    CHECK(checked > 150);
}

TEST_CASE("sharp design: plug_in_rrt reduces to the risk ratio") {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 100; ++rep) {
        const auto c = CellCounts::from(window(make_data(rng, 400, true), Window(0.2, 0.1)));
        if (c.mean_y(0) <= 0.0) continue;
        const double rr = c.mean_y(1) / c.mean_y(0);
        CHECK(std::abs(plug_in_rrt(c) - rr) <= 1e-12 * std::max(1.0, rr));
    }
}
