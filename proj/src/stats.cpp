#include "rdrrt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rdrrt/error.hpp"

namespace rdrrt {

namespace {
constexpr int kSeriesTerms = 64;
// Relative rounding error of the series grows like exp(2 |b| r) * eps.
constexpr double kSeriesReach = 4.0;
}  // namespace

double mean(std::span<const double> v) {
    if (v.empty()) throw InputError("mean of empty sample");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw InputError("quantile of empty sample");
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    return quantile_sorted(v, p);
}

double expit(double v) {
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double softplus(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

ExpSum::ExpSum(std::span<const double> x) {
    if (x.empty()) return;
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    centre_ = 0.5 * (*mn + *mx);
    radius_ = 0.5 * (*mx - *mn);
    moments_.assign(kSeriesTerms, 0.0);
    centred_.reserve(x.size());
    for (double v : x) {
        const double d = v - centre_;
        centred_.push_back(d);
        double p = 1.0;
        for (int k = 0; k < kSeriesTerms; ++k) {
            moments_[k] += p;
            p *= d / (k + 1);
        }
    }
}

double ExpSum::direct(double b) const {
    double s = 0.0;
    for (double d : centred_) s += std::exp(b * d);
    return std::exp(b * centre_) * s;
}

double ExpSum::operator()(double b) const {
    if (centred_.empty()) return 0.0;
    const double reach = std::abs(b) * radius_;
    if (reach > kSeriesReach) return direct(b);
    // Terms are bounded by n * reach^k / k!; stop once that bound is negligible.
    const double n = static_cast<double>(centred_.size());
    const double floor = 1e-18 * n * std::exp(-reach);
    double s = 0.0, p = 1.0, bound = n;
    for (int k = 0; k < kSeriesTerms; ++k) {
        s += p * moments_[k];
        p *= b;
        bound *= reach / (k + 1);
        if (bound < floor) break;
    }
    return std::exp(b * centre_) * s;
}

}  // namespace rdrrt
