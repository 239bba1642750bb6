#pragma once

#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "biot_hdg/assembly.hpp"
#include "biot_hdg/condensation.hpp"
#include "biot_hdg/errors.hpp"

namespace biot_hdg {

/// Exact rational number with normalized sign and reduced terms.
struct Rational {
    long long num = 0;
    long long den = 1;

    Rational() = default;
    Rational(long long n, long long d = 1) : num(n), den(d) {
        if (den == 0) throw Error("rational with zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const long long g = std::gcd(std::llabs(num), den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const { return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den); }

    friend Rational operator+(const Rational& a, const Rational& b) { return {a.num * b.den + b.num * a.den, a.den * b.den}; }
    friend Rational operator-(const Rational& a, const Rational& b) { return {a.num * b.den - b.num * a.den, a.den * b.den}; }
    friend Rational operator*(const Rational& a, const Rational& b) { return {a.num * b.num, a.den * b.den}; }
    friend bool operator==(const Rational& a, const Rational& b) { return a.num == b.num && a.den == b.den; }
};

inline constexpr int kMaxBdfSteps = 5;

/// delta_0..delta_m: coefficients of zeta^j in sum_{l=1}^m (1 - zeta)^l / l.
inline std::vector<Rational> bdf_coefficients(int m) {
    if (m < 1 || m > kMaxBdfSteps) throw UnsupportedOrder("BDF steps " + std::to_string(m) + " (supported 1..5)");
    std::vector<Rational> delta(m + 1, Rational(0));
    for (int l = 1; l <= m; ++l) {
        long long binom = 1; // C(l, j)
        for (int j = 0; j <= l; ++j) {
            const long long sign = (j % 2 == 0) ? 1 : -1;
            delta[j] = delta[j] + Rational(sign * binom, l);
            binom = binom * (l - j) / (j + 1);
        }
    }
    return delta;
}

/// One linear step of the scaled system
///   -(M + s A) p^n - C u^n = rhs_p,   -C^T p^n + B u^n = G(t^n),
/// with rhs_p = -sum_j load_weights[j] F(t^{n-j}) + sum_{j>=1} history[j] (M p + C u)^{n-j}
///              + sum_{j>=1} stiffness_history[j] A p^{n-j}.
struct StepRule {
    double dt = 0.0;
    double s = 0.0;
    std::vector<double> load_weights;      // index j: weight of F(t^{n-j})
    std::vector<double> history;           // index j-1: weight of (M p + C u)^{n-j}
    std::vector<double> stiffness_history; // index j-1: weight of A p^{n-j}

    int depth() const { return static_cast<int>(history.size()); }
};

struct BdfScheme {
    int m = 1;
    double dt = 0.0;
    std::vector<Rational> delta;

    BdfScheme(int steps, double step) : m(steps), dt(step), delta(bdf_coefficients(steps)) {
        if (!(step > 0.0)) throw Error("time step must be positive");
    }

    StepRule rule() const {
        StepRule r;
        r.dt = dt;
        const double d0 = delta[0].value();
        r.s = dt / d0;
        r.load_weights = {r.s};
        for (int j = 1; j <= m; ++j) r.history.push_back(delta[j].value() / d0);
        return r;
    }
};

/// Crank-Nicolson for the flow equation with the elasticity equation enforced at t^n.
inline StepRule crank_nicolson_rule(double dt) {
    StepRule r;
    r.dt = dt;
    r.s = 0.5 * dt;
    r.load_weights = {0.5 * dt, 0.5 * dt};
    r.history = {-1.0};
    r.stiffness_history = {0.5 * dt};
    return r;
}

struct SystemState {
    Eigen::VectorXd x;
    double t = 0.0;
};

/// Time-dependent data of a problem.
struct ProblemData {
    /// Full-length vector holding (f(t), w) in pressure-volume rows and
    /// (g(t), v) in displacement rows.
    std::function<Eigen::VectorXd(double)> load;
    /// Write Dirichlet values at time t into a full-length state.
    std::function<void(double, Eigen::VectorXd&)> dirichlet;
};

/// Drives the fully discrete scheme on one Discretization. Condensed
/// operators are cached per scaling s, so a fixed step size factors once.
class TimeStepper {
public:
    TimeStepper(const Discretization& disc, ProblemData data)
        : disc_(&disc), data_(std::move(data)), a_(disc.assemble_diffusion()), c_(disc.assemble_coupling()),
          m_(disc.assemble_mass()) {
        const auto& space = disc.space();
        pressure_row_.assign(space.num_dofs(), 0);
        for (int d = 0; d < space.num_dofs(); ++d) {
            const DofKind kind = space.kind(d);
            pressure_row_[d] = kind == DofKind::pressure_volume || kind == DofKind::pressure_facet;
        }
    }

    const Discretization& discretization() const noexcept { return *disc_; }
    const SparseMatrix& diffusion() const noexcept { return a_; }
    const SparseMatrix& coupling() const noexcept { return c_; }
    const SparseMatrix& mass() const noexcept { return m_; }

    const CondensedSystem& system(double s) const {
        auto it = cache_.find(s);
        if (it == cache_.end()) {
            auto sys = std::make_shared<CondensedSystem>(
                disc_->space(), disc_->num_elements(), [&](int e) { return disc_->coupled_dofs(e); },
                [&](int e) { return disc_->step_matrix(e, s); });
            it = cache_.emplace(s, std::move(sys)).first;
        }
        return *it->second;
    }

    int num_factorizations() const noexcept { return static_cast<int>(cache_.size()); }

    /// Right-hand side of one step; history[j-1] is the state at t^{n-j}.
    Eigen::VectorXd step_rhs(const StepRule& rule, const std::vector<const SystemState*>& history, double t) const {
        const int n = disc_->space().num_dofs();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
        const Eigen::VectorXd now = data_.load ? data_.load(t) : Eigen::VectorXd::Zero(n);
        for (std::size_t j = 0; j < rule.load_weights.size(); ++j) {
            const Eigen::VectorXd l = (j == 0 || !data_.load) ? now : data_.load(t - j * rule.dt);
            for (int d = 0; d < n; ++d)
                if (pressure_row_[d]) rhs[d] -= rule.load_weights[j] * l[d];
        }
        for (int d = 0; d < n; ++d)
            if (!pressure_row_[d]) rhs[d] = now[d];
        for (int j = 0; j < rule.depth(); ++j) {
            const Eigen::VectorXd& x = history.at(j)->x;
            rhs += rule.history[j] * (m_.multiply(x) + c_.multiply(x));
        }
        for (std::size_t j = 0; j < rule.stiffness_history.size(); ++j)
            rhs += rule.stiffness_history[j] * a_.multiply(history.at(j)->x);
        return rhs;
    }

    SystemState step(const StepRule& rule, const std::vector<const SystemState*>& history, double t) const {
        if (static_cast<int>(history.size()) < std::max<int>(rule.depth(), rule.stiffness_history.size()))
            throw Error("time step: not enough history");
        SystemState next;
        next.t = t;
        next.x = Eigen::VectorXd::Zero(disc_->space().num_dofs());
        if (data_.dirichlet) data_.dirichlet(t, next.x);
        system(rule.s).solve(step_rhs(rule, history, t), next.x);
        return next;
    }

    /// One BDF step from the m most recent states (history[0] newest).
    SystemState bdf_step(const BdfScheme& scheme, const std::vector<const SystemState*>& history) const {
        return step(scheme.rule(), history, history.at(0)->t + scheme.dt);
    }

    /// States at t^0..t^{m-1}: BDF2 starts with backward Euler, BDF3 (and higher)
    /// with Crank-Nicolson.
    std::vector<SystemState> starting_values(int m, const SystemState& initial, double dt) const {
        std::vector<SystemState> states{initial};
        if (m == 1) return states;
        const StepRule rule = m == 2 ? BdfScheme(1, dt).rule() : crank_nicolson_rule(dt);
        while (static_cast<int>(states.size()) < m) {
            const SystemState& prev = states.back();
            states.push_back(step(rule, {&prev}, prev.t + dt));
        }
        return states;
    }

    /// Advance from `initial` by `steps` BDF-m steps (including starting steps).
    SystemState run(int m, double dt, const SystemState& initial, int steps,
                    const std::function<void(const SystemState&)>& observer = {}) const {
        const BdfScheme scheme(m, dt);
        std::vector<SystemState> ring = starting_values(m, initial, dt);
        if (observer)
            for (const auto& st : ring) observer(st);
        if (steps < m - 1) return ring[steps];
        for (int n = m; n <= steps; ++n) {
            std::vector<const SystemState*> hist;
            for (int j = 1; j <= m; ++j) hist.push_back(&ring[ring.size() - j]);
            SystemState next = bdf_step(scheme, hist);
            if (observer) observer(next);
            ring.erase(ring.begin());
            ring.push_back(std::move(next));
        }
        return ring.back();
    }

private:
    const Discretization* disc_;
    ProblemData data_;
    SparseMatrix a_, c_, m_;
    std::vector<char> pressure_row_;
    mutable std::map<double, std::shared_ptr<CondensedSystem>> cache_;
};

/// Max over n >= 2 of the defect in
/// (d_t phi^n, phi^n) = (|phi^n|^2 + |2phi^n - phi^{n-1}|^2 - |phi^{n-1}|^2
///                       - |2phi^{n-1} - phi^{n-2}|^2 + |phi^n - 2phi^{n-1} + phi^{n-2}|^2) / (4 dt),
/// with d_t the BDF2 difference quotient.
inline double energy_identity_check(const std::vector<Eigen::VectorXd>& phi, double dt,
                                    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& inner =
                                        [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return a.dot(b); }) {
    double defect = 0.0;
    auto sq = [&](const Eigen::VectorXd& v) { return inner(v, v); };
    for (std::size_t n = 2; n < phi.size(); ++n) {
        const Eigen::VectorXd dt_phi = (3.0 * phi[n] - 4.0 * phi[n - 1] + phi[n - 2]) / (2.0 * dt);
        const double lhs = inner(dt_phi, phi[n]);
        const double rhs = (sq(phi[n]) + sq(2.0 * phi[n] - phi[n - 1]) - sq(phi[n - 1]) -
                            sq(2.0 * phi[n - 1] - phi[n - 2]) + sq(phi[n] - 2.0 * phi[n - 1] + phi[n - 2])) /
                           (4.0 * dt);
        defect = std::max(defect, std::abs(lhs - rhs));
    }
    return defect;
}

} // namespace biot_hdg
