#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "biot_hdg/mesh.hpp"
#include "biot_hdg/quadrature.hpp"

namespace biot_hdg {

inline constexpr int triangle_dim(int degree) { return (degree + 1) * (degree + 2) / 2; }

/// L2-orthonormal basis of P^m on the reference triangle.
///
/// Built by orthonormalizing the monomials x^a y^b (a + b <= m) against
/// their exact Gram matrix, so basis i = sum_j coeffs(i, j) * monomial_j.
class ScalarBasis {
public:
    ScalarBasis() = default;

    explicit ScalarBasis(int degree) : degree_(degree) {
        if (degree < 0) throw UnsupportedOrder("negative basis degree");
        for (int d = 0; d <= degree; ++d)
            for (int b = 0; b <= d; ++b) exponents_.emplace_back(d - b, b);
        const int n = dim();
        using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
        LMat gram(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                gram(i, j) = monomial_integral(exponents_[i].first + exponents_[j].first,
                                               exponents_[i].second + exponents_[j].second);
        const LMat lower = gram.llt().matrixL();
        const LMat inv = lower.triangularView<Eigen::Lower>().solve(LMat::Identity(n, n));
        coeffs_ = inv.cast<double>();
    }

    int degree() const noexcept { return degree_; }
    int dim() const noexcept { return static_cast<int>(exponents_.size()); }
    const Eigen::MatrixXd& coefficients() const noexcept { return coeffs_; }

    /// Exact integral of x^a y^b over the reference triangle: a! b! / (a + b + 2)!.
    static long double monomial_integral(int a, int b) {
        long double r = 1.0L;
        for (int i = 1; i <= a; ++i) r *= static_cast<long double>(i) / (b + 2 + i);
        for (int i = 1; i <= b; ++i) r *= static_cast<long double>(i);
        long double denom = 1.0L;
        for (int i = 1; i <= b + 2; ++i) denom *= i;
        return r / denom;
    }

    Eigen::VectorXd eval(const Vec2& xi) const { return coeffs_ * monomials(xi); }

    /// Gradients in reference coordinates, one row per basis function.
    Eigen::MatrixX2d eval_grad(const Vec2& xi) const {
        const int n = dim();
        Eigen::VectorXd dx(n), dy(n);
        for (int j = 0; j < n; ++j) {
            const auto [a, b] = exponents_[j];
            dx[j] = a == 0 ? 0.0 : a * ipow(xi.x(), a - 1) * ipow(xi.y(), b);
            dy[j] = b == 0 ? 0.0 : b * ipow(xi.x(), a) * ipow(xi.y(), b - 1);
        }
        Eigen::MatrixX2d g(n, 2);
        g.col(0) = coeffs_ * dx;
        g.col(1) = coeffs_ * dy;
        return g;
    }

private:
    static double ipow(double x, int p) {
        double r = 1.0;
        for (int i = 0; i < p; ++i) r *= x;
        return r;
    }

    Eigen::VectorXd monomials(const Vec2& xi) const {
        Eigen::VectorXd m(dim());
        for (int j = 0; j < dim(); ++j) m[j] = ipow(xi.x(), exponents_[j].first) * ipow(xi.y(), exponents_[j].second);
        return m;
    }

    int degree_ = 0;
    std::vector<std::pair<int, int>> exponents_;
    Eigen::MatrixXd coeffs_;
};

/// Tabulate a basis at the points of a rule: rows are points, columns functions.
inline Eigen::MatrixXd eval_basis(const ScalarBasis& basis, const std::vector<Vec2>& points) {
    Eigen::MatrixXd table(points.size(), basis.dim());
    for (std::size_t q = 0; q < points.size(); ++q) table.row(q) = basis.eval(points[q]).transpose();
    return table;
}

/// Reference gradients: returns (d/dxi table, d/deta table), each points x functions.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> eval_basis_grad(const ScalarBasis& basis,
                                                                   const std::vector<Vec2>& points) {
    Eigen::MatrixXd gx(points.size(), basis.dim()), gy(points.size(), basis.dim());
    for (std::size_t q = 0; q < points.size(); ++q) {
        const auto g = basis.eval_grad(points[q]);
        gx.row(q) = g.col(0).transpose();
        gy.row(q) = g.col(1).transpose();
    }
    return {gx, gy};
}

/// Orthonormal Legendre polynomials on [0,1]: sqrt(2j+1) P_j(2s - 1).
inline Eigen::VectorXd legendre01(int degree, double s) {
    Eigen::VectorXd v(degree + 1);
    const double z = 2.0 * s - 1.0;
    double p0 = 1.0, p1 = 0.0;
    for (int j = 0; j <= degree; ++j) {
        if (j == 0) {
            p0 = 1.0;
        } else {
            const double p2 = p1;
            p1 = p0;
            p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
        }
        v[j] = std::sqrt(2.0 * j + 1.0) * p0;
    }
    return v;
}

/// Affine map of the reference triangle onto a mesh element.
///
/// Physical scalar basis functions are the reference ones scaled by
/// 1/sqrt(det J), which keeps them L2-orthonormal on the element.
struct ElementGeometry {
    Vec2 origin = Vec2::Zero();
    Mat2 jacobian = Mat2::Identity();
    Mat2 inverse_transpose = Mat2::Identity();
    double det = 1.0;
    double scale = 1.0; // 1/sqrt(det)

    ElementGeometry() = default;

    ElementGeometry(const Mesh& mesh, int e) {
        const auto& t = mesh.triangle(e);
        origin = mesh.vertex(t[0]);
        jacobian.col(0) = mesh.vertex(t[1]) - origin;
        jacobian.col(1) = mesh.vertex(t[2]) - origin;
        det = jacobian.determinant();
        inverse_transpose = jacobian.inverse().transpose();
        scale = 1.0 / std::sqrt(det);
    }

    Vec2 to_physical(const Vec2& xi) const { return origin + jacobian * xi; }
    Vec2 to_reference(const Vec2& x) const { return inverse_transpose.transpose() * (x - origin); }
};

/// Quadrature points on one facet, in facet-local arclength order.
struct FacetQuadrature {
    std::vector<Vec2> points;    // physical
    std::vector<double> weights; // include the facet length
    std::vector<double> s;       // in [0,1] from the lower vertex id
};

inline FacetQuadrature facet_quadrature(const Mesh& mesh, int f, const IntervalRule& rule) {
    const auto& facet = mesh.facet(f);
    const Vec2& a = mesh.vertex(facet.vertices[0]);
    const Vec2& b = mesh.vertex(facet.vertices[1]);
    FacetQuadrature fq;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const double s = rule.points[q][0];
        fq.points.push_back(a + s * (b - a));
        fq.weights.push_back(rule.weights[q] * facet.length);
        fq.s.push_back(s);
    }
    return fq;
}

/// L2(F)-orthonormal facet basis of degree `degree` at facet coordinate s.
inline Eigen::VectorXd facet_basis(int degree, double s, double length) {
    return legendre01(degree, s) / std::sqrt(length);
}

} // namespace biot_hdg
