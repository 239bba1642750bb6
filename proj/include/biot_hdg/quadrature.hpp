#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "biot_hdg/errors.hpp"

namespace biot_hdg {

/// Quadrature on a reference domain of dimension Dim: the unit interval [0,1]
/// for Dim = 1, the triangle {x, y >= 0, x + y <= 1} for Dim = 2.
template <int Dim>
struct QuadratureRule {
    using Point = Eigen::Matrix<double, Dim, 1>;

    std::vector<Point> points;
    std::vector<double> weights;
    int exactness_degree = 0;

    std::size_t size() const noexcept { return weights.size(); }
};

using IntervalRule = QuadratureRule<1>;
using TriangleRule = QuadratureRule<2>;

inline constexpr int kMaxTriangleExactness = 14;
inline constexpr int kMaxIntervalExactness = 41;

namespace detail {

/// n-point Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        // refresh derivative at the converged node
        double p0 = 1.0, p1 = 0.0;
        for (int j = 1; j <= n; ++j) {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
        }
        dp = n * (z * p0 - p1) / (z * z - 1.0);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

} // namespace detail

/// Gauss rule on [0,1] with ceil((exactness+1)/2) nodes.
inline IntervalRule interval_rule(int exactness) {
    if (exactness < 0 || exactness > kMaxIntervalExactness)
        throw UnsupportedOrder("interval rule exactness " + std::to_string(exactness));
    const int n = std::max(1, (exactness + 2) / 2);
    std::vector<double> x, w;
    detail::gauss_legendre(n, x, w);
    IntervalRule rule;
    rule.exactness_degree = 2 * n - 1;
    for (int i = 0; i < n; ++i) {
        rule.points.push_back(Eigen::Matrix<double, 1, 1>(0.5 * (x[i] + 1.0)));
        rule.weights.push_back(0.5 * w[i]);
    }
    return rule;
}

/// Collapsed (Duffy) tensor Gauss rule on the reference triangle.
///
/// x = s (1 - t), y = t. A degree-d polynomial becomes degree d in s and
/// degree d + 1 in t after including the Jacobian (1 - t).
inline TriangleRule triangle_rule(int exactness) {
    if (exactness < 0 || exactness > kMaxTriangleExactness)
        throw UnsupportedOrder("triangle rule exactness " + std::to_string(exactness) + " (max " +
                               std::to_string(kMaxTriangleExactness) + ")");
    const int ns = std::max(1, (exactness + 2) / 2);
    const int nt = std::max(1, (exactness + 3) / 2);
    std::vector<double> xs, ws, xt, wt;
    detail::gauss_legendre(ns, xs, ws);
    detail::gauss_legendre(nt, xt, wt);
    TriangleRule rule;
    rule.exactness_degree = std::min(2 * ns - 1, 2 * nt - 2);
    for (int j = 0; j < nt; ++j) {
        const double t = 0.5 * (xt[j] + 1.0);
        for (int i = 0; i < ns; ++i) {
            const double s = 0.5 * (xs[i] + 1.0);
            rule.points.emplace_back(s * (1.0 - t), t);
            rule.weights.push_back(0.25 * ws[i] * wt[j] * (1.0 - t));
        }
    }
    return rule;
}

} // namespace biot_hdg
