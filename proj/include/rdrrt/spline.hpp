#pragma once

#include <optional>
#include <span>
#include <vector>

namespace rdrrt {

/// Natural cubic smoothing spline through weighted points (Reinsch form).
///
/// Minimises sum_i w_i (y_i - g(x_i))^2 + lambda * integral g''(x)^2 dx. The
/// penalty is expressed as a scale-free stiffness: lambda = stiffness * tr(W) / tr(K),
/// where K is the roughness matrix of the knots. Without a stiffness the value
/// minimising generalised cross-validation over a log grid is chosen.
class SmoothingSpline {
public:
    SmoothingSpline(std::span<const double> x, std::span<const double> y,
                    std::span<const double> w, std::optional<double> stiffness = std::nullopt);

    double operator()(double x) const;
    double stiffness() const { return stiffness_; }
    const std::vector<double>& fitted() const { return g_; }

private:
    std::vector<double> knots_;
    std::vector<double> g_;      // fitted values at the knots
    std::vector<double> gamma_;  // second derivatives at the knots (zero at both ends)
    double stiffness_ = 0.0;
};

}  // namespace rdrrt
