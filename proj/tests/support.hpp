#pragma once

#include <array>
#include <random>

#include "rdrrt/data.hpp"

namespace rdrrt::testing {

/// counts[z][2y + t] records per cell, spread uniformly over the window.
inline WindowedSample from_counts(const std::array<std::array<int, 4>, 2>& counts, double h = 0.05) {
    WindowedSample s;
    s.bandwidth = h;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, h);
    for (int z = 1; z >= 0; --z) {
        for (int c = 0; c < 4; ++c) {
            for (int k = 0; k < counts[z][c]; ++k) {
                const int y = c / 2, t = c % 2;
                s.records.push_back({z ? u(rng) : -u(rng) - 1e-9, z, t, y, y * (1 - t)});
                (z ? s.n1 : s.n0) += 1;
            }
        }
    }
    return s;
}

/// A windowed dataset with random arm sizes and random cell probabilities
/// drawn from a flat Dirichlet per arm.
inline WindowedSample random_sample(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> size(30, 3000);
    std::gamma_distribution<double> g(1.0, 1.0);
    std::array<std::array<int, 4>, 2> counts{};
    for (int z = 0; z < 2; ++z) {
        std::array<double, 4> w{};
        for (auto& v : w) v = g(rng);
        std::discrete_distribution<int> cell(w.begin(), w.end());
        const int n = size(rng);
        for (int i = 0; i < n; ++i) counts[z][cell(rng)] += 1;
    }
    return from_counts(counts);
}

}  // namespace rdrrt::testing
