#pragma once

#include <span>
#include <vector>

namespace rdrrt {

double mean(std::span<const double> v);

/// Linear-interpolation quantile on sorted data: position (n-1)p between order statistics.
double quantile_sorted(std::span<const double> sorted, double p);
double quantile(std::vector<double> v, double p);

double expit(double v);
double logit(double p);
/// log(1 + e^v) without overflow.
double softplus(double v);

/// Sums exp(b * x_i) over a fixed set of points.
///
/// Stores factorial-scaled central moments so that, for moderate |b| * spread,
/// the sum is a short power series independent of the number of points. Falls
/// back to the direct sum otherwise.
class ExpSum {
public:
    ExpSum() = default;
    explicit ExpSum(std::span<const double> x);

    double operator()(double b) const;
    double direct(double b) const;
    std::size_t size() const { return centred_.size(); }

private:
    double centre_ = 0.0;
    double radius_ = 0.0;
    std::vector<double> moments_;  // sum (x - c)^k / k!
    std::vector<double> centred_;
};

}  // namespace rdrrt
