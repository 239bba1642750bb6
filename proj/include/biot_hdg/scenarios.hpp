#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "biot_hdg/assembly.hpp"
#include "biot_hdg/condensation.hpp"
#include "biot_hdg/mesh.hpp"
#include "biot_hdg/problems.hpp"
#include "biot_hdg/time_integration.hpp"

namespace biot_hdg {

// ---------------------------------------------------------------- loads

/// Full-length load vector: (f, w) in pressure rows, (g, v) in displacement rows.
inline Eigen::VectorXd assemble_load(const Discretization& disc, const ScalarField& f, const VectorField& g) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(disc.space().num_dofs());
    for (int e = 0; e < disc.num_elements(); ++e) {
        const auto& dofs = disc.element(e).dofs;
        if (f) Discretization::scatter_add(out, dofs.pressure, disc.pressure_load(e, f));
        if (g) Discretization::scatter_add(out, dofs.displacement, disc.displacement_load(e, g));
    }
    return out;
}

inline ProblemData make_problem_data(const Discretization& disc, const ExactSolution& sol) {
    ProblemData data;
    data.load = [&disc, sol](double t) {
        return assemble_load(disc, [&](const Vec2& x) { return sol.f(x, t); },
                             [&](const Vec2& x) { return sol.g(x, t); });
    };
    data.dirichlet = [&disc, sol](double t, Eigen::VectorXd& state) {
        disc.apply_dirichlet_data(state, sol.p_at(t), sol.u_at(t));
    };
    return data;
}

/// Point functional w -> amplitude * w(x0) on pressure rows, averaged over
/// every element whose closure contains x0.
inline Eigen::VectorXd point_source_load(const Discretization& disc, const Vec2& x0, double amplitude) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(disc.space().num_dofs());
    const std::vector<int> elems = locate_point(disc.mesh(), x0);
    const double w = amplitude / static_cast<double>(elems.size());
    for (int e : elems) Discretization::scatter_add(out, disc.element(e).dofs.pressure, w * disc.pressure_basis_at(e, x0));
    return out;
}

// ---------------------------------------------------------------- solves

/// Condensed solve of a single block system (pressure or displacement part).
inline void solve_block(const Discretization& disc, bool pressure, const Eigen::VectorXd& rhs, Eigen::VectorXd& state) {
    const CondensedSystem sys(
        disc.space(), disc.num_elements(),
        [&](int e) { return pressure ? disc.pressure_block_dofs(e) : disc.displacement_block_dofs(e); },
        [&](int e) { return pressure ? disc.element(e).diffusion : disc.element(e).elasticity; });
    Eigen::VectorXd x = state;
    sys.solve(rhs, x);
    const auto& space = disc.space();
    for (int d = 0; d < space.num_dofs(); ++d) {
        const DofKind kind = space.kind(d);
        const bool is_p = kind == DofKind::pressure_volume || kind == DofKind::pressure_facet;
        if (is_p == pressure) state[d] = x[d];
    }
}

/// Elliptic projection of the exact pair at time t: first
/// a_h(Pi p - p, w) = 0, then b_h(Pi u - u, v) - (Pi p - p, alpha div v) = 0.
inline SystemState elliptic_project(const Discretization& disc, const ExactSolution& sol, double t) {
    SystemState st;
    st.t = t;
    st.x = Eigen::VectorXd::Zero(disc.space().num_dofs());
    disc.apply_dirichlet_data(st.x, sol.p_at(t), sol.u_at(t));

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(st.x.size());
    const VectorField grad_p = [&](const Vec2& x) { return sol.grad_p(x, t); };
    for (int e = 0; e < disc.num_elements(); ++e)
        Discretization::scatter_add(rhs, disc.pressure_block_dofs(e), disc.diffusion_functional(e, grad_p));
    solve_block(disc, true, rhs, st.x);

    rhs.setZero();
    const TensorField grad_u = [&](const Vec2& x) { return sol.grad_u(x, t); };
    const ScalarField p = sol.p_at(t);
    for (int e = 0; e < disc.num_elements(); ++e) {
        const auto& el = disc.element(e);
        Discretization::scatter_add(rhs, disc.displacement_block_dofs(e), disc.elasticity_functional(e, grad_u));
        const Eigen::VectorXd ph = Discretization::gather(st.x, el.dofs.pressure);
        Discretization::scatter_add(rhs, el.dofs.displacement, el.coupling.transpose() * ph - disc.divergence_load(e, p));
    }
    solve_block(disc, false, rhs, st.x);
    return st;
}

/// Steady problem a_h(p, w) = (f, w), b_h(u, v) - (p, alpha div v) = (g, v)
/// with Dirichlet data from the exact pair.
inline SystemState solve_steady(const Discretization& disc, const ExactSolution& sol, double t = 0.0) {
    SystemState st;
    st.t = t;
    st.x = Eigen::VectorXd::Zero(disc.space().num_dofs());
    disc.apply_dirichlet_data(st.x, sol.p_at(t), sol.u_at(t));
    const Eigen::VectorXd load = assemble_load(disc, [&](const Vec2& x) { return sol.f(x, t); },
                                               [&](const Vec2& x) { return sol.g(x, t); });
    Eigen::VectorXd rhs = load;
    solve_block(disc, true, rhs, st.x);
    for (int e = 0; e < disc.num_elements(); ++e) {
        const auto& el = disc.element(e);
        Discretization::scatter_add(rhs, el.dofs.displacement,
                                    el.coupling.transpose() * Discretization::gather(st.x, el.dofs.pressure));
    }
    solve_block(disc, false, rhs, st.x);
    return st;
}

// ---------------------------------------------------------------- norms

struct ErrorNorms {
    double triple = 0.0;
    double l2_u = 0.0;
    double l2_p = 0.0;
    double div_u = 0.0;
};

/// Energy-norm error (pressure storage term, displacement mu-seminorm with the
/// projected tangential facet jump, lambda-weighted divergence) and L2 errors.
inline ErrorNorms compute_error_norms(const Discretization& disc, const Eigen::VectorXd& state, const ExactSolution& sol,
                                      double t) {
    const auto& mesh = disc.mesh();
    const auto& mp = disc.params();
    const int k = disc.k();
    const TriangleRule& rule = disc.load_rule();
    const IntervalRule& frule = disc.load_facet_rule();
    const int n = disc.displacement_scalar_basis().dim();

    double l2p = 0.0, l2u = 0.0, strain = 0.0, div = 0.0, jump = 0.0;
    for (int e = 0; e < disc.num_elements(); ++e) {
        const auto& el = disc.element(e);
        const Eigen::VectorXd ph = Discretization::gather(state, el.dofs.pressure);
        const Eigen::VectorXd uo = disc.displacement_ortho(state, e);
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Vec2& xi = rule.points[q];
            const Vec2 x = el.geom.to_physical(xi);
            const double w = rule.weights[q] * el.geom.det;
            const Eigen::VectorXd phi_p = disc.pressure_basis().eval(xi) * el.geom.scale;
            const Eigen::VectorXd phi_u = disc.displacement_scalar_basis().eval(xi) * el.geom.scale;
            const Eigen::MatrixX2d grad_u_basis = disc.displacement_scalar_basis().eval_grad(xi) *
                                                  el.geom.inverse_transpose.transpose() * el.geom.scale;
            const double ep = sol.p(x, t) - ph.dot(phi_p);
            const Vec2 uh(uo.head(n).dot(phi_u), uo.tail(n).dot(phi_u));
            Mat2 guh;
            guh.row(0) = uo.head(n).transpose() * grad_u_basis;
            guh.row(1) = uo.tail(n).transpose() * grad_u_basis;
            const Mat2 ge = sol.grad_u(x, t) - guh;
            const Mat2 eps = 0.5 * (ge + ge.transpose());
            l2p += w * ep * ep;
            l2u += w * (sol.u(x, t) - uh).squaredNorm();
            strain += w * eps.squaredNorm();
            div += w * ge.trace() * ge.trace();
        }
        for (int i = 0; i < 3; ++i) {
            const int f = mesh.element_facets(e)[i];
            const Facet& facet = mesh.facet(f);
            const auto fq = facet_quadrature(mesh, f, frule);
            Eigen::VectorXd moments = Eigen::VectorXd::Zero(k + 1);
            for (std::size_t q = 0; q < fq.weights.size(); ++q) {
                const Vec2 uh = disc.displacement_at(state, e, fq.points[q]);
                const double uhat = disc.facet_value(state, f, disc.space().tangential_dof(f, 0), k, fq.s[q]);
                moments += fq.weights[q] * (uh.dot(facet.tangent) - uhat) * facet_basis(k, fq.s[q], facet.length);
            }
            jump += moments.squaredNorm() / disc.length_scale(e);
        }
    }
    ErrorNorms out;
    out.l2_p = std::sqrt(l2p);
    out.l2_u = std::sqrt(l2u);
    out.div_u = std::sqrt(div);
    out.triple = std::sqrt(mp.storage * l2p + 2.0 * mp.mu * (strain + jump) + mp.lambda * div);
    return out;
}

// ---------------------------------------------------------------- convergence study

struct ConvergenceOptions {
    int k = 1;
    int levels = 3;
    int first_n = 4;
    int bdf = 3;
    Variant variant = Variant::standard;
    double tau0 = 10.0;
    double final_time = 0.5;
    double lambda = 1e5;
    double mu = 1.0;
    double kappa = 1.0;
    double alpha = 1.0;
    double storage = 0.0;
    StabilizationLength length = StabilizationLength::jacobian_root;
    /// Fixed step size; if unset, dt = h^max((k+1)/3, 1) with h = 1/n,
    /// shortened so that an integer number of steps reaches the final time.
    std::optional<double> dt;
};

struct ErrorRow {
    int n = 0;
    double dt = 0.0;
    int steps = 0;
    ErrorNorms err;
    std::optional<double> order_triple, order_u, order_p;
};

struct ErrorReport {
    std::vector<ErrorRow> rows;
};

inline int steps_to_reach(double final_time, double dt_target) {
    return std::max(1, static_cast<int>(std::ceil(final_time / dt_target - 1e-9)));
}

inline MaterialParams params_of(const ConvergenceOptions& o) {
    MaterialParams mp;
    mp.storage = o.storage;
    mp.alpha = o.alpha;
    mp.kappa = o.kappa;
    mp.lambda = o.lambda;
    mp.mu = o.mu;
    mp.tau0 = o.tau0;
    return mp;
}

/// Solve the manufactured problem on one mesh and report errors at the final time.
inline ErrorRow solve_manufactured(const ConvergenceOptions& o, int n) {
    const MaterialParams mp = params_of(o);
    const Mesh mesh = build_uniform_unit_square(n);
    const Discretization disc(mesh, o.k, o.variant, mp, BoundaryPolicy{}, o.length);
    const ExactSolution sol = manufactured_solution(mp);
    const double h = 1.0 / n;
    const double target = o.dt ? *o.dt : std::pow(h, std::max((o.k + 1) / 3.0, 1.0));
    ErrorRow row;
    row.n = n;
    row.steps = steps_to_reach(o.final_time, target);
    row.dt = o.final_time / row.steps;
    const TimeStepper stepper(disc, make_problem_data(disc, sol));
    const SystemState init = elliptic_project(disc, sol, 0.0);
    const SystemState last = stepper.run(o.bdf, row.dt, init, row.steps);
    row.err = compute_error_norms(disc, last.x, sol, last.t);
    return row;
}

inline void fill_orders(ErrorReport& report) {
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        auto& r = report.rows[i];
        const auto& prev = report.rows[i - 1];
        const double ratio = std::log(static_cast<double>(r.n) / prev.n);
        r.order_triple = std::log(prev.err.triple / r.err.triple) / ratio;
        r.order_u = std::log(prev.err.l2_u / r.err.l2_u) / ratio;
        r.order_p = std::log(prev.err.l2_p / r.err.l2_p) / ratio;
    }
}

inline ErrorReport run_convergence_study(const ConvergenceOptions& o,
                                         const std::function<void(const ErrorRow&)>& progress = {}) {
    if (o.levels < 1 || o.levels > 6) throw Error("levels must be in 1..6");
    ErrorReport report;
    int n = o.first_n;
    for (int level = 0; level < o.levels; ++level, n *= 2) {
        report.rows.push_back(solve_manufactured(o, n));
        fill_orders(report);
        if (progress) progress(report.rows.back());
    }
    return report;
}

// ---------------------------------------------------------------- sampling

struct LineSample {
    Vec2 x;
    double p = 0.0;
    Vec2 u = Vec2::Zero();
};

/// `count` equally spaced samples from a to b (inclusive). Values on shared
/// facets are averaged over the containing elements.
inline std::vector<LineSample> sample_line(const Discretization& disc, const Eigen::VectorXd& state, const Vec2& a,
                                           const Vec2& b, int count) {
    std::vector<LineSample> out;
    for (int i = 0; i < count; ++i) {
        const double s = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        LineSample smp;
        smp.x = a + s * (b - a);
        const auto elems = locate_point(disc.mesh(), smp.x, 1e-10);
        for (int e : elems) {
            smp.p += disc.pressure_at(state, e, smp.x);
            smp.u += disc.displacement_at(state, e, smp.x);
        }
        smp.p /= static_cast<double>(elems.size());
        smp.u /= static_cast<double>(elems.size());
        out.push_back(smp);
    }
    return out;
}

// ---------------------------------------------------------------- Barry-Mercer

struct BarryMercerOptions {
    int k = 1;
    int n = 64;
    int bdf = 2;
    BarryMercerConfig config;
    std::vector<double> snapshots{0.5 * std::numbers::pi, 1.5 * std::numbers::pi}; // normalized times beta t
    std::optional<double> dt;  // default pi / (20 beta)
    int line_samples = 200;
};

struct BarryMercerSnapshot {
    double t_hat = 0.0;
    double t = 0.0;
    SystemState state;
    double source_pressure = 0.0; // p_h at the source point
    std::vector<LineSample> diagonal;
};

struct BarryMercerResult {
    double beta = 0.0;
    double dt = 0.0;
    std::vector<BarryMercerSnapshot> snapshots;
};

/// Boundary conditions: pressure-facet and tangential unknowns zero on the
/// boundary, normal displacement free.
inline ProblemData barry_mercer_data(const Discretization& disc, const BarryMercerConfig& cfg) {
    ProblemData data;
    data.load = [&disc, cfg](double t) { return point_source_load(disc, cfg.source, cfg.amplitude(t)); };
    data.dirichlet = [&disc](double, Eigen::VectorXd& state) { disc.apply_dirichlet_data(state, nullptr, nullptr); };
    return data;
}

inline double point_value(const Discretization& disc, const Eigen::VectorXd& state, const Vec2& x) {
    const auto elems = locate_point(disc.mesh(), x);
    double v = 0.0;
    for (int e : elems) v += disc.pressure_at(state, e, x);
    return v / static_cast<double>(elems.size());
}

inline BarryMercerResult run_barry_mercer(const BarryMercerOptions& o,
                                          const std::function<void(const Discretization&, const BarryMercerSnapshot&)>&
                                              on_snapshot = {}) {
    const BarryMercerConfig& cfg = o.config;
    const Mesh mesh = build_uniform_rectangle(o.n, o.n, cfg.a, cfg.b);
    locate_point(mesh, cfg.source); // PointOutsideDomain for a misplaced source
    const Discretization disc(mesh, o.k, Variant::standard, cfg.params(), BoundaryPolicy{false});
    const TimeStepper stepper(disc, barry_mercer_data(disc, cfg));
    BarryMercerResult res;
    res.beta = cfg.beta();
    res.dt = o.dt ? *o.dt : cfg.time_step();

    std::vector<std::pair<int, double>> wanted; // step index, normalized time
    for (double th : o.snapshots) wanted.emplace_back(static_cast<int>(std::lround(th / res.beta / res.dt)), th);
    int last = 0;
    for (const auto& w : wanted) last = std::max(last, w.first);

    SystemState init;
    init.t = 0.0;
    init.x = Eigen::VectorXd::Zero(disc.space().num_dofs());
    int step = 0;
    stepper.run(o.bdf, res.dt, init, last, [&](const SystemState& st) {
        for (const auto& w : wanted) {
            if (w.first != step) continue;
            BarryMercerSnapshot snap;
            snap.t_hat = w.second;
            snap.t = st.t;
            snap.state = st;
            snap.source_pressure = point_value(disc, st.x, cfg.source);
            snap.diagonal = sample_line(disc, st.x, Vec2(0.0, 0.0), Vec2(cfg.a, cfg.b), o.line_samples);
            if (on_snapshot) on_snapshot(disc, snap);
            res.snapshots.push_back(std::move(snap));
        }
        ++step;
    });
    return res;
}

struct OscillationOptions {
    int k = 1;
    int n = 64;
    double kappa = 1e-6;
    double dt = 1e-4;
    int line_samples = 200;
    double threshold = 0.05;
};

struct OscillationResult {
    double min_pressure = 0.0;
    double max_pressure = 0.0;
    double ratio = 0.0; // min / max
    bool passed = false;
    std::vector<LineSample> diagonal;
};

/// One backward-Euler step of the point-source problem at low permeability;
/// checks that the diagonal pressure profile has no significant undershoot.
inline OscillationResult oscillation_check(const OscillationOptions& o) {
    BarryMercerOptions bm;
    bm.k = o.k;
    bm.n = o.n;
    bm.bdf = 1;
    bm.config.kappa = o.kappa;
    bm.dt = o.dt;
    bm.line_samples = o.line_samples;
    const double beta = bm.config.beta();
    bm.snapshots = {beta * o.dt};
    const BarryMercerResult res = run_barry_mercer(bm);
    OscillationResult out;
    out.diagonal = res.snapshots.at(0).diagonal;
    out.min_pressure = out.diagonal.front().p;
    out.max_pressure = out.diagonal.front().p;
    for (const auto& s : out.diagonal) {
        out.min_pressure = std::min(out.min_pressure, s.p);
        out.max_pressure = std::max(out.max_pressure, s.p);
    }
    out.ratio = out.max_pressure != 0.0 ? out.min_pressure / out.max_pressure : 0.0;
    out.passed = out.min_pressure >= -o.threshold * out.max_pressure;
    return out;
}

} // namespace biot_hdg
