#include "rdrrt/spline.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "rdrrt/error.hpp"

namespace rdrrt {

namespace {

struct Fit {
    Eigen::VectorXd g;
    double gcv = 0.0;
};

Fit solve(const Eigen::MatrixXd& W, const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
          double lambda) {
    const Eigen::MatrixXd A = W + lambda * K;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    Fit f;
    f.g = ldlt.solve(W * y);
    const Eigen::MatrixXd hat = ldlt.solve(W);
    const double m = static_cast<double>(y.size());
    const Eigen::VectorXd r = y - f.g;
    const double rss = r.dot(W * r) / m;
    const double denom = 1.0 - hat.trace() / m;
    f.gcv = denom > 0.0 ? rss / (denom * denom) : std::numeric_limits<double>::infinity();
    return f;
}

}  // namespace

SmoothingSpline::SmoothingSpline(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> w, std::optional<double> stiffness) {
    const std::size_t m = x.size();
    if (m < 3 || y.size() != m || w.size() != m) {
        throw InputError("smoothing spline needs at least 3 matched points");
    }
    for (std::size_t i = 1; i < m; ++i) {
        if (!(x[i] > x[i - 1])) throw InputError("spline knots must be strictly increasing");
    }
    knots_.assign(x.begin(), x.end());

    std::vector<double> h(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i) h[i] = x[i + 1] - x[i];

    // Q is m x (m-2), R is (m-2) x (m-2) tridiagonal.
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(m, m - 2);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(m - 2, m - 2);
    for (std::size_t j = 1; j + 1 < m; ++j) {
        const std::size_t c = j - 1;
        Q(j - 1, c) = 1.0 / h[j - 1];
        Q(j, c) = -1.0 / h[j - 1] - 1.0 / h[j];
        Q(j + 1, c) = 1.0 / h[j];
        R(c, c) = (h[j - 1] + h[j]) / 3.0;
        if (c + 1 < m - 2) {
            R(c, c + 1) = h[j] / 6.0;
            R(c + 1, c) = h[j] / 6.0;
        }
    }
    const Eigen::LDLT<Eigen::MatrixXd> rfac(R);
    const Eigen::MatrixXd K = Q * rfac.solve(Q.transpose());

    Eigen::VectorXd yv(m);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(m, m);
    double wsum = 0.0;
    for (std::size_t i = 0; i < m; ++i) wsum += w[i];
    if (!(wsum > 0.0)) throw InputError("spline weights must be positive");
    for (std::size_t i = 0; i < m; ++i) {
        yv(i) = y[i];
        W(i, i) = w[i] * static_cast<double>(m) / wsum;
    }
    const double scale = W.trace() / K.trace();

    Fit best;
    if (stiffness) {
        if (!(*stiffness >= 0.0)) throw InputError("spline stiffness must be >= 0");
        stiffness_ = *stiffness;
        best = solve(W, K, yv, stiffness_ * scale);
    } else {
        best.gcv = std::numeric_limits<double>::infinity();
        for (int k = -60; k <= 60; ++k) {
            const double s = std::pow(10.0, 0.1 * k);
            Fit f = solve(W, K, yv, s * scale);
            if (f.gcv < best.gcv) {
                best = std::move(f);
                stiffness_ = s;
            }
        }
        if (!std::isfinite(best.gcv)) {
            stiffness_ = 1.0;
            best = solve(W, K, yv, scale);
        }
    }

    g_.assign(best.g.data(), best.g.data() + m);
    const Eigen::VectorXd inner = rfac.solve(Q.transpose() * best.g);
    gamma_.assign(m, 0.0);
    for (std::size_t j = 1; j + 1 < m; ++j) gamma_[j] = inner(j - 1);
}

double SmoothingSpline::operator()(double t) const {
    const std::size_t m = knots_.size();
    if (t <= knots_.front()) {
        const double h = knots_[1] - knots_[0];
        const double slope = (g_[1] - g_[0]) / h - h * gamma_[1] / 6.0;
        return g_[0] + slope * (t - knots_[0]);
    }
    if (t >= knots_.back()) {
        const double h = knots_[m - 1] - knots_[m - 2];
        const double slope = (g_[m - 1] - g_[m - 2]) / h + h * gamma_[m - 2] / 6.0;
        return g_[m - 1] + slope * (t - knots_[m - 1]);
    }
    std::size_t i = 0;
    while (i + 2 < m && t > knots_[i + 1]) ++i;
    const double h = knots_[i + 1] - knots_[i];
    const double a = t - knots_[i];
    const double b = knots_[i + 1] - t;
    return (a * g_[i + 1] + b * g_[i]) / h -
           a * b / 6.0 * ((1.0 + a / h) * gamma_[i + 1] + (1.0 + b / h) * gamma_[i]);
}

}  // namespace rdrrt
