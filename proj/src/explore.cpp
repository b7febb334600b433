#include "rdrrt/explore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rdrrt/error.hpp"
#include "rdrrt/spline.hpp"

namespace rdrrt {

namespace {

constexpr std::size_t kMinSplineBins = 4;

SideCurves fit_side(const std::vector<Bin>& bins, bool above, double threshold, double from,
                    double to, const ExploreOptions& opts) {
    SideCurves side;
    std::vector<double> x, my, mt, w;
    for (const auto& b : bins) {
        if (b.n == 0 || (b.mid >= threshold) != above) continue;
        x.push_back(b.mid);
        my.push_back(b.mean_y);
        mt.push_back(b.mean_t);
        w.push_back(static_cast<double>(b.n));
    }
    if (x.size() < kMinSplineBins) {
        side.warning = std::string(above ? "above" : "below") + " threshold: only " +
                       std::to_string(x.size()) + " non-empty bins, spline omitted";
        return side;
    }
    const SmoothingSpline sy(x, my, w, opts.stiffness);
    const SmoothingSpline st(x, mt, w, opts.stiffness);
    side.available = true;
    side.stiffness_outcome = sy.stiffness();
    side.stiffness_treatment = st.stiffness();
    const int g = std::max(opts.grid_points, 2);
    for (int i = 0; i < g; ++i) {
        const double v = from + (to - from) * static_cast<double>(i) / (g - 1);
        side.grid.push_back(v);
        side.outcome.push_back(sy(v));
        side.treatment.push_back(st(v));
    }
    return side;
}

}  // namespace

BinnedSummary explore(std::span<const Observation> data, double threshold,
                      const ExploreOptions& opts) {
    if (opts.bins < 2) throw InputError("bin count must be >= 2");
    if (!(opts.lo < threshold && threshold < opts.hi)) {
        throw InputError("explore range must contain the threshold");
    }
    BinnedSummary s;
    s.threshold = threshold;
    const double width = (opts.hi - opts.lo) / opts.bins;
    for (int i = 0; i <= opts.bins; ++i) s.edges.push_back(opts.lo + width * i);
    s.edges.back() = opts.hi;

    std::vector<double> sum_y(opts.bins, 0.0), sum_t(opts.bins, 0.0);
    std::vector<std::size_t> n(opts.bins, 0);
    for (const auto& o : data) {
        if (o.x < opts.lo || o.x > opts.hi) continue;
        auto k = static_cast<int>(std::floor((o.x - opts.lo) / width));
        k = std::clamp(k, 0, opts.bins - 1);
        // floor() can misplace points sitting on an edge by one ulp
        if (k > 0 && o.x < s.edges[k]) --k;
        if (k + 1 < opts.bins && o.x >= s.edges[k + 1]) ++k;
        sum_y[k] += o.y;
        sum_t[k] += o.t;
        ++n[k];
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int k = 0; k < opts.bins; ++k) {
        Bin b;
        b.lo = s.edges[k];
        b.hi = s.edges[k + 1];
        b.mid = 0.5 * (b.lo + b.hi);
        b.n = n[k];
        b.mean_y = n[k] ? sum_y[k] / n[k] : nan;
        b.mean_t = n[k] ? sum_t[k] / n[k] : nan;
        s.bins.push_back(b);
    }
    s.below = fit_side(s.bins, false, threshold, opts.lo, threshold, opts);
    s.above = fit_side(s.bins, true, threshold, threshold, opts.hi, opts);
    return s;
}

}  // namespace rdrrt
