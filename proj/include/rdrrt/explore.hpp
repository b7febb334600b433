#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rdrrt/data.hpp"

namespace rdrrt {

struct Bin {
    double lo = 0.0;
    double hi = 0.0;
    double mid = 0.0;
    std::size_t n = 0;
    double mean_y = 0.0;  // NaN when the bin is empty
    double mean_t = 0.0;  // NaN when the bin is empty
};

/// Spline curves for one side of the threshold, evaluated on a uniform grid.
struct SideCurves {
    bool available = false;
    std::string warning;
    std::vector<double> grid;
    std::vector<double> outcome;    // fitted mean outcome
    std::vector<double> treatment;  // fitted treatment probability
    double stiffness_outcome = 0.0;
    double stiffness_treatment = 0.0;
};

struct BinnedSummary {
    double threshold = 0.2;
    std::vector<double> edges;  // bins.size() + 1 entries
    std::vector<Bin> bins;
    SideCurves below;
    SideCurves above;
};

struct ExploreOptions {
    double lo = 0.1;
    double hi = 0.3;
    int bins = 20;
    /// Scale-free spline stiffness; generalised cross-validation when unset.
    std::optional<double> stiffness;
    int grid_points = 50;
};

/// Equal-width binned means of outcome and treatment with a separate natural
/// cubic smoothing spline on each side of the threshold. Observations outside
/// [lo, hi] are ignored; the last bin is closed on the right. A bin belongs to
/// the side its midpoint falls on. A side with fewer than 4 non-empty bins gets
/// no curves and a warning.
BinnedSummary explore(std::span<const Observation> data, double threshold,
                      const ExploreOptions& opts = {});

}  // namespace rdrrt
