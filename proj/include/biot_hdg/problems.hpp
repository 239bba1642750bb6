#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "biot_hdg/assembly.hpp"
#include "biot_hdg/mesh.hpp"

namespace biot_hdg {

/// Closed-form solution of the Biot system together with its data.
///
/// f = c_s dp/dt + alpha div du/dt - kappa lap p,
/// g = -div(2 mu eps(u) + lambda div u I) + alpha grad p.
struct ExactSolution {
    std::function<double(const Vec2&, double)> p;
    std::function<Vec2(const Vec2&, double)> grad_p;
    std::function<Vec2(const Vec2&, double)> u;
    std::function<Mat2(const Vec2&, double)> grad_u; // row i: gradient of u_i
    std::function<double(const Vec2&, double)> f;
    std::function<Vec2(const Vec2&, double)> g;

    ScalarField p_at(double t) const {
        return [fn = p, t](const Vec2& x) { return fn(x, t); };
    }
    VectorField u_at(double t) const {
        return [fn = u, t](const Vec2& x) { return fn(x, t); };
    }
};

/// Smooth solution on the unit square decaying like exp(-t) whose divergence
/// scales like 1/(mu + lambda).
inline ExactSolution manufactured_solution(const MaterialParams& mp) {
    constexpr double pi = std::numbers::pi;
    const double c = 1.0 / (mp.mu + mp.lambda);
    struct Trig {
        double sx, cx, sy, cy, e;
    };
    auto trig = [](const Vec2& x, double t) {
        return Trig{std::sin(pi * x.x()), std::cos(pi * x.x()), std::sin(pi * x.y()), std::cos(pi * x.y()), std::exp(-t)};
    };
    // second derivatives of u: (u1_xx, u1_xy, u1_yy, u2_xx, u2_xy, u2_yy)
    auto hessians = [=](const Vec2& x, double t) {
        const Trig s = trig(x, t);
        const double p2 = pi * pi * s.e;
        return std::array<double, 6>{p2 * (s.cx * s.sy - c * s.sx * s.sy), p2 * (s.sx * s.cy + c * s.cx * s.cy),
                                     p2 * (s.cx * s.sy - c * s.sx * s.sy), p2 * (-s.sx * s.cy - c * s.sx * s.sy),
                                     p2 * (-s.cx * s.sy + c * s.cx * s.cy), p2 * (-s.sx * s.cy - c * s.sx * s.sy)};
    };

    ExactSolution sol;
    sol.p = [=](const Vec2& x, double t) {
        const Trig s = trig(x, t);
        return s.e * s.sx * s.sy;
    };
    sol.grad_p = [=](const Vec2& x, double t) {
        const Trig s = trig(x, t);
        return Vec2(pi * s.e * s.cx * s.sy, pi * s.e * s.sx * s.cy);
    };
    sol.u = [=](const Vec2& x, double t) {
        const Trig s = trig(x, t);
        return Vec2(s.e * (-s.cx * s.sy + c * s.sx * s.sy), s.e * (s.sx * s.cy + c * s.sx * s.sy));
    };
    sol.grad_u = [=](const Vec2& x, double t) {
        const Trig s = trig(x, t);
        const double pe = pi * s.e;
        Mat2 g;
        g << pe * (s.sx * s.sy + c * s.cx * s.sy), pe * (-s.cx * s.cy + c * s.sx * s.cy),
            pe * (s.cx * s.cy + c * s.cx * s.sy), pe * (-s.sx * s.sy + c * s.sx * s.cy);
        return g;
    };
    sol.f = [=](const Vec2& x, double t) {
        const Trig s = trig(x, t);
        const double p = s.e * s.sx * s.sy;
        const double div_u = c * pi * s.e * std::sin(pi * (x.x() + x.y()));
        const double lap_p = -2.0 * pi * pi * p;
        return -mp.storage * p - mp.alpha * div_u - mp.kappa * lap_p;
    };
    sol.g = [=](const Vec2& x, double t) {
        const auto h = hessians(x, t);
        const Trig s = trig(x, t);
        const double mu = mp.mu, lambda = mp.lambda;
        const double div_s1 = mu * (2.0 * h[0] + h[2] + h[4]) + lambda * (h[0] + h[4]);
        const double div_s2 = mu * (h[1] + h[3] + 2.0 * h[5]) + lambda * (h[1] + h[5]);
        return Vec2(-div_s1 + mp.alpha * pi * s.e * s.cx * s.sy, -div_s2 + mp.alpha * pi * s.e * s.sx * s.cy);
    };
    return sol;
}

/// Bivariate polynomial sum c_ab x^a y^b.
struct Polynomial2 {
    std::vector<std::array<int, 2>> exponents;
    std::vector<double> coeffs;

    double operator()(const Vec2& x) const { return derivative(x, 0, 0); }

    /// d^(i+j)/dx^i dy^j at x.
    double derivative(const Vec2& x, int i, int j) const {
        double s = 0.0;
        for (std::size_t n = 0; n < coeffs.size(); ++n) {
            const int a = exponents[n][0], b = exponents[n][1];
            if (a < i || b < j) continue;
            double fa = 1.0, fb = 1.0;
            for (int q = 0; q < i; ++q) fa *= a - q;
            for (int q = 0; q < j; ++q) fb *= b - q;
            s += coeffs[n] * fa * fb * std::pow(x.x(), a - i) * std::pow(x.y(), b - j);
        }
        return s;
    }

    /// Full polynomial of total degree `degree` with deterministic, nonzero coefficients.
    static Polynomial2 full(int degree, double seed) {
        Polynomial2 p;
        int n = 0;
        for (int d = 0; d <= degree; ++d)
            for (int b = 0; b <= d; ++b, ++n) {
                p.exponents.push_back({d - b, b});
                p.coeffs.push_back(std::sin(seed + 1.7 * n) + 0.3);
            }
        return p;
    }
};

/// Time-independent solution with p in P^k and u in vector P^{k+1}; the
/// discrete spaces contain it exactly.
inline ExactSolution polynomial_solution(int k, const MaterialParams& mp) {
    const Polynomial2 p = Polynomial2::full(k, 0.4);
    const Polynomial2 u1 = Polynomial2::full(k + 1, 1.3);
    const Polynomial2 u2 = Polynomial2::full(k + 1, 2.9);
    ExactSolution sol;
    sol.p = [=](const Vec2& x, double) { return p(x); };
    sol.grad_p = [=](const Vec2& x, double) { return Vec2(p.derivative(x, 1, 0), p.derivative(x, 0, 1)); };
    sol.u = [=](const Vec2& x, double) { return Vec2(u1(x), u2(x)); };
    sol.grad_u = [=](const Vec2& x, double) {
        Mat2 g;
        g << u1.derivative(x, 1, 0), u1.derivative(x, 0, 1), u2.derivative(x, 1, 0), u2.derivative(x, 0, 1);
        return g;
    };
    sol.f = [=](const Vec2& x, double) { return -mp.kappa * (p.derivative(x, 2, 0) + p.derivative(x, 0, 2)); };
    sol.g = [=](const Vec2& x, double) {
        const double a_xx = u1.derivative(x, 2, 0), a_xy = u1.derivative(x, 1, 1), a_yy = u1.derivative(x, 0, 2);
        const double b_xx = u2.derivative(x, 2, 0), b_xy = u2.derivative(x, 1, 1), b_yy = u2.derivative(x, 0, 2);
        const double div_s1 = mp.mu * (2.0 * a_xx + a_yy + b_xy) + mp.lambda * (a_xx + b_xy);
        const double div_s2 = mp.mu * (a_xy + b_xx + 2.0 * b_yy) + mp.lambda * (a_xy + b_yy);
        return Vec2(-div_s1 + mp.alpha * p.derivative(x, 1, 0), -div_s2 + mp.alpha * p.derivative(x, 0, 1));
    };
    return sol;
}

/// Pulsating point source in a rectangle drained on all sides.
struct BarryMercerConfig {
    double a = 1.0;
    double b = 1.0;
    double youngs_modulus = 1e5;
    double poisson_ratio = 0.1;
    double kappa = 1e-2;
    double storage = 0.0;
    double alpha = 1.0;
    double tau0 = 10.0;
    Vec2 source{0.25, 0.25};

    double mu() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }
    double lambda() const {
        return youngs_modulus * poisson_ratio / ((1.0 - 2.0 * poisson_ratio) * (1.0 + poisson_ratio));
    }
    double beta() const { return (lambda() + 2.0 * mu()) * kappa / (a * b); }
    double time_step() const { return std::numbers::pi / (20.0 * beta()); }
    /// Source amplitude 2 beta sin(beta t).
    double amplitude(double t) const { return 2.0 * beta() * std::sin(beta() * t); }

    MaterialParams params() const {
        MaterialParams mp;
        mp.storage = storage;
        mp.alpha = alpha;
        mp.kappa = kappa;
        mp.lambda = lambda();
        mp.mu = mu();
        mp.tau0 = tau0;
        return mp;
    }
};

} // namespace biot_hdg
