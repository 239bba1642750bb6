#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "biot_hdg/basis.hpp"
#include "biot_hdg/quadrature.hpp"

using namespace biot_hdg;

namespace {

double factorial(int n) {
    double r = 1.0;
    for (int i = 2; i <= n; ++i) r *= i;
    return r;
}

// int over the reference triangle of x^a y^b = a! b! / (a + b + 2)!
double monomial_exact(int a, int b) { return factorial(a) * factorial(b) / factorial(a + b + 2); }

} // namespace

TEST(TriangleRule, ReferenceValues) {
    const auto r = triangle_rule(2);
    double one = 0.0, x = 0.0, xy = 0.0;
    for (std::size_t q = 0; q < r.size(); ++q) {
        one += r.weights[q];
        x += r.weights[q] * r.points[q].x();
        xy += r.weights[q] * r.points[q].x() * r.points[q].y();
    }
    EXPECT_NEAR(one, 0.5, 1e-15);
    EXPECT_NEAR(x, 1.0 / 6.0, 1e-15);
    EXPECT_NEAR(xy, 1.0 / 24.0, 1e-15);
}

TEST(TriangleRule, ExactOnAllMonomials) {
    for (int p = 0; p <= kMaxTriangleExactness; ++p) {
        const auto r = triangle_rule(p);
        EXPECT_GE(r.exactness_degree, p);
        double sum = 0.0;
        for (std::size_t q = 0; q < r.size(); ++q) {
            EXPECT_GT(r.weights[q], 0.0);
            EXPECT_GE(r.points[q].minCoeff(), 0.0);
            EXPECT_LE(r.points[q].sum(), 1.0);
            sum += r.weights[q];
        }
        EXPECT_NEAR(sum, 0.5, 1e-14);
        for (int a = 0; a <= p; ++a)
            for (int b = 0; a + b <= p; ++b) {
                double v = 0.0;
                for (std::size_t q = 0; q < r.size(); ++q)
                    v += r.weights[q] * std::pow(r.points[q].x(), a) * std::pow(r.points[q].y(), b);
                EXPECT_NEAR(v, monomial_exact(a, b), 1e-13 * monomial_exact(a, b)) << "p=" << p << " a=" << a << " b=" << b;
            }
    }
}

TEST(TriangleRule, BeyondMaximumThrows) {
    EXPECT_THROW(triangle_rule(kMaxTriangleExactness + 1), UnsupportedOrder);
    EXPECT_THROW(triangle_rule(-1), UnsupportedOrder);
}

TEST(IntervalRule, Basics) {
    const auto r1 = interval_rule(0);
    EXPECT_NEAR(r1.weights[0], 1.0, 1e-15);
    const auto r2 = interval_rule(3);
    EXPECT_EQ(r2.size(), 2u);
    double x3 = 0.0;
    for (std::size_t q = 0; q < r2.size(); ++q) x3 += r2.weights[q] * std::pow(r2.points[q][0], 3);
    EXPECT_NEAR(x3, 0.25, 1e-15);
    const auto r3 = interval_rule(5);
    EXPECT_EQ(r3.size(), 3u);
    EXPECT_EQ(r3.exactness_degree, 5);
    double x6 = 0.0;
    for (std::size_t q = 0; q < r3.size(); ++q) x6 += r3.weights[q] * std::pow(r3.points[q][0], 6);
    EXPECT_GT(std::abs(x6 - 1.0 / 7.0), 1e-6);
}

TEST(IntervalRule, ExactUpToDegree) {
    for (int p = 0; p <= kMaxIntervalExactness; ++p) {
        const auto r = interval_rule(p);
        EXPECT_EQ(static_cast<int>(r.size()), (p + 2) / 2);
        double sum = 0.0;
        for (double w : r.weights) {
            EXPECT_GT(w, 0.0);
            sum += w;
        }
        EXPECT_NEAR(sum, 1.0, 1e-14);
        for (int a = 0; a <= p; ++a) {
            double v = 0.0;
            for (std::size_t q = 0; q < r.size(); ++q) v += r.weights[q] * std::pow(r.points[q][0], a);
            EXPECT_NEAR(v, 1.0 / (a + 1), 1e-13 / (a + 1)) << "p=" << p << " a=" << a;
        }
    }
    EXPECT_THROW(interval_rule(kMaxIntervalExactness + 1), UnsupportedOrder);
}

TEST(ScalarBasis, Dimensions) {
    for (int m = 0; m <= 4; ++m) EXPECT_EQ(ScalarBasis(m).dim(), (m + 1) * (m + 2) / 2);
    EXPECT_EQ(legendre01(3, 0.3).size(), 4);
}

TEST(ScalarBasis, DegreeZeroIsSqrtTwo) {
    const ScalarBasis b(0);
    EXPECT_NEAR(b.eval(Vec2(0.2, 0.3))[0], std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(b.eval(Vec2(0.0, 1.0))[0], std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(b.eval_grad(Vec2(0.1, 0.1)).norm(), 0.0, 0.0);
}

TEST(ScalarBasis, GramIsIdentity) {
    for (int m = 0; m <= 4; ++m) {
        const ScalarBasis b(m);
        const auto r = triangle_rule(2 * m);
        const Eigen::MatrixXd t = eval_basis(b, r.points);
        const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(r.weights.data(), r.weights.size());
        const Eigen::MatrixXd gram = t.transpose() * w.asDiagonal() * t;
        EXPECT_LE((gram - Eigen::MatrixXd::Identity(b.dim(), b.dim())).cwiseAbs().maxCoeff(), 1e-12) << "m=" << m;
    }
}

TEST(ScalarBasis, GradientsMatchCentralDifferences) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.05, 0.45);
    const double h = 1e-6;
    for (int m = 0; m <= 4; ++m) {
        const ScalarBasis b(m);
        for (int trial = 0; trial < 20; ++trial) {
            const Vec2 x(u(rng), u(rng));
            const Eigen::MatrixX2d g = b.eval_grad(x);
            const Eigen::VectorXd dx = (b.eval(x + Vec2(h, 0)) - b.eval(x - Vec2(h, 0))) / (2 * h);
            const Eigen::VectorXd dy = (b.eval(x + Vec2(0, h)) - b.eval(x - Vec2(0, h))) / (2 * h);
            EXPECT_LE((g.col(0) - dx).cwiseAbs().maxCoeff(), 1e-6);
            EXPECT_LE((g.col(1) - dy).cwiseAbs().maxCoeff(), 1e-6);
        }
    }
}

TEST(ScalarBasis, TableShapes) {
    const ScalarBasis b(2);
    const auto r = triangle_rule(4);
    const auto t = eval_basis(b, r.points);
    const auto [gx, gy] = eval_basis_grad(b, r.points);
    EXPECT_EQ(t.rows(), static_cast<Eigen::Index>(r.size()));
    EXPECT_EQ(t.cols(), 6);
    EXPECT_EQ(gx.rows(), t.rows());
    EXPECT_EQ(gy.cols(), 6);
}

TEST(Legendre, OrthonormalOnUnitInterval) {
    const auto r = interval_rule(12);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(6, 6);
    for (std::size_t q = 0; q < r.size(); ++q) {
        const Eigen::VectorXd v = legendre01(5, r.points[q][0]);
        gram += r.weights[q] * v * v.transpose();
    }
    EXPECT_LE((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Geometry, AffineMapAndPhysicalGradients) {
    const Mesh m = build_uniform_rectangle(3, 2, 1.3, 0.7);
    const auto r = triangle_rule(2);
    for (int e = 0; e < m.num_elements(); ++e) {
        const ElementGeometry g(m, e);
        EXPECT_NEAR(g.det, 2.0 * m.area(e), 1e-15);
        for (int i = 0; i < 3; ++i) {
            const Vec2 ref = i == 0 ? Vec2(0, 0) : (i == 1 ? Vec2(1, 0) : Vec2(0, 1));
            EXPECT_NEAR((g.to_physical(ref) - m.vertex(m.triangle(e)[i])).norm(), 0.0, 1e-15);
            EXPECT_NEAR((g.to_reference(g.to_physical(ref)) - ref).norm(), 0.0, 1e-14);
        }
        // grad(x + y) through J^{-T}: reference gradient of x+y is J^T (1,1)
        const Vec2 ref_grad = g.jacobian.transpose() * Vec2(1.0, 1.0);
        const Vec2 phys = g.inverse_transpose * ref_grad;
        double integral = 0.0;
        for (std::size_t q = 0; q < r.size(); ++q) integral += r.weights[q] * g.det * phys.squaredNorm();
        EXPECT_NEAR(integral, 2.0 * m.area(e), 1e-14);
    }
}

TEST(Geometry, FacetPointsAgreeFromBothSides) {
    const Mesh m = build_uniform_unit_square(3);
    const auto rule = interval_rule(7);
    for (int f = 0; f < m.num_facets(); ++f) {
        const auto& facet = m.facet(f);
        if (facet.is_boundary()) continue;
        const auto fq = facet_quadrature(m, f, rule);
        const ElementGeometry g0(m, facet.elements[0]), g1(m, facet.elements[1]);
        for (std::size_t q = 0; q < fq.points.size(); ++q) {
            // the same physical point recovered through either element's reference map
            const Vec2 x0 = g0.to_physical(g0.to_reference(fq.points[q]));
            const Vec2 x1 = g1.to_physical(g1.to_reference(fq.points[q]));
            EXPECT_NEAR((x0 - x1).norm(), 0.0, 1e-14);
            EXPECT_NEAR(m.barycentric(facet.elements[0], fq.points[q]).minCoeff(), 0.0, 1e-14);
            EXPECT_NEAR(m.barycentric(facet.elements[1], fq.points[q]).minCoeff(), 0.0, 1e-14);
            const Vec2 expected = m.vertex(facet.vertices[0]) + fq.s[q] * facet.length * facet.tangent;
            EXPECT_NEAR((fq.points[q] - expected).norm(), 0.0, 1e-15);
        }
        double len = 0.0;
        for (double w : fq.weights) len += w;
        EXPECT_NEAR(len, facet.length, 1e-15);
    }
}

TEST(Geometry, PhysicalBasisIsOrthonormal) {
    const Mesh m = build_uniform_rectangle(2, 1, 1.0, 0.4);
    const ScalarBasis b(3);
    const auto r = triangle_rule(6);
    for (int e = 0; e < m.num_elements(); ++e) {
        const ElementGeometry g(m, e);
        Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(b.dim(), b.dim());
        for (std::size_t q = 0; q < r.size(); ++q) {
            const Eigen::VectorXd phi = b.eval(r.points[q]) * g.scale;
            gram += r.weights[q] * g.det * phi * phi.transpose();
        }
        EXPECT_LE((gram - Eigen::MatrixXd::Identity(b.dim(), b.dim())).cwiseAbs().maxCoeff(), 1e-12);
    }
}
