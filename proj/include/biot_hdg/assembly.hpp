#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "biot_hdg/basis.hpp"
#include "biot_hdg/fe_spaces.hpp"
#include "biot_hdg/mesh.hpp"
#include "biot_hdg/quadrature.hpp"
#include "biot_hdg/sparse.hpp"

namespace biot_hdg {

/// Material and stabilization parameters. tau = tau0 k^2 is always derived.
struct MaterialParams {
    double storage = 0.0;   // c_s
    double alpha = 1.0;     // Biot-Willis
    double kappa = 1.0;     // permeability
    double lambda = 1.0;
    double mu = 1.0;
    double tau0 = 10.0;

    double tau(int k) const { return tau0 * k * k; }

    void validate() const {
        if (storage < 0.0) throw Error("storage coefficient must be >= 0");
        if (!(kappa > 0.0)) throw Error("permeability must be > 0");
        if (!(lambda > 0.0) || !(mu > 0.0)) throw Error("Lame parameters must be > 0");
        if (!(tau0 > 0.0)) throw Error("tau0 must be > 0");
    }
};

/// Length scale h in the tau/h stabilization weights and in the facet term of
/// the displacement energy norm.
enum class StabilizationLength {
    diameter,      // longest edge of the element
    jacobian_root, // sqrt(|det J|) of the affine map
};

using ScalarField = std::function<double(const Vec2&)>;
using VectorField = std::function<Vec2(const Vec2&)>;
using TensorField = std::function<Mat2(const Vec2&)>;

/// Per-element geometry, displacement basis and element matrices.
///
/// Local orderings: pressure block [P (volume), PH (3 facets x k)];
/// displacement block [U (dual basis, see ElementDofs), UH (3 facets x (k+1))].
struct ElementData {
    ElementGeometry geom;
    ElementDisplacementBasis disp;
    ElementDofs dofs;
    double h = 0.0;
    Eigen::MatrixXd diffusion;  // a_h on [P, PH]
    Eigen::MatrixXd elasticity; // b_h on [U, UH]
    Eigen::MatrixXd coupling;   // (alpha div u, w): P x U
    Eigen::MatrixXd mass;       // (c_s p, w): P x P
};

/// Discrete Biot operator: spaces, element matrices and field evaluation.
class Discretization {
public:
    Discretization(const Mesh& mesh, int k, Variant variant, const MaterialParams& params,
                   BoundaryPolicy policy = {}, StabilizationLength length = StabilizationLength::jacobian_root)
        : mesh_(&mesh), space_(mesh, k, variant, policy), params_(params), length_(length),
          p_basis_(k), u_basis_(k + 1), volume_rule_(triangle_rule(2 * (k + 1) + 2)),
          facet_rule_(interval_rule(2 * (k + 2))), load_rule_(triangle_rule(2 * k + 6)),
          load_facet_rule_(interval_rule(2 * k + 6)) {
        params.validate();
        elements_.resize(mesh.num_elements());
        for (int e = 0; e < mesh.num_elements(); ++e) build_element(e);
        load_p_table_ = eval_basis(p_basis_, load_rule_.points);
        load_u_table_ = eval_basis(u_basis_, load_rule_.points);
    }

    const Mesh& mesh() const noexcept { return *mesh_; }
    const SpaceSet& space() const noexcept { return space_; }
    const MaterialParams& params() const noexcept { return params_; }
    int k() const noexcept { return space_.k(); }
    const ElementData& element(int e) const { return elements_[e]; }
    int num_elements() const noexcept { return static_cast<int>(elements_.size()); }
    const ScalarBasis& pressure_basis() const noexcept { return p_basis_; }
    const ScalarBasis& displacement_scalar_basis() const noexcept { return u_basis_; }

    int n_pressure() const noexcept { return space_.pressure_dim(); }
    int n_pressure_block() const noexcept { return space_.pressure_dim() + 3 * k(); }
    int n_displacement() const noexcept { return space_.displacement_dim(); }
    int n_displacement_block() const noexcept { return space_.displacement_dim() + 3 * (k() + 1); }

    double length_scale(int e) const {
        return length_ == StabilizationLength::diameter ? mesh_->diameter(e)
                                                         : std::sqrt(std::abs(elements_[e].geom.det));
    }

    /// Global dof ids for the [P, PH] block of element e.
    std::vector<int> pressure_block_dofs(int e) const {
        const auto& d = elements_[e].dofs;
        std::vector<int> ids = d.pressure;
        ids.insert(ids.end(), d.pressure_facet.begin(), d.pressure_facet.end());
        return ids;
    }

    /// Global dof ids for the [U, UH] block of element e.
    std::vector<int> displacement_block_dofs(int e) const {
        const auto& d = elements_[e].dofs;
        std::vector<int> ids = d.displacement;
        ids.insert(ids.end(), d.tangential.begin(), d.tangential.end());
        return ids;
    }

    std::vector<int> coupled_dofs(int e) const {
        std::vector<int> ids = pressure_block_dofs(e);
        const auto u = displacement_block_dofs(e);
        ids.insert(ids.end(), u.begin(), u.end());
        return ids;
    }

    /// Element matrix of the scaled step operator on [P, PH, U, UH]:
    /// [[-(M + s A), -C], [-C^T, B]].
    Eigen::MatrixXd step_matrix(int e, double s) const {
        const auto& el = elements_[e];
        const int na = n_pressure_block(), nb = n_displacement_block(), np = n_pressure();
        const int nu = n_displacement();
        Eigen::MatrixXd k_e = Eigen::MatrixXd::Zero(na + nb, na + nb);
        k_e.topLeftCorner(na, na) = -s * el.diffusion;
        k_e.topLeftCorner(np, np) -= el.mass;
        k_e.block(0, na, np, nu) = -el.coupling;
        k_e.block(na, 0, nu, np) = -el.coupling.transpose();
        k_e.bottomRightCorner(nb, nb) = el.elasticity;
        return k_e;
    }

    // ---- global blocks (all dofs, no boundary elimination) ----

    SparseMatrix assemble_diffusion() const {
        return assemble_block([&](int e) { return pressure_block_dofs(e); },
                              [&](int e) { return pressure_block_dofs(e); },
                              [&](int e) -> const Eigen::MatrixXd& { return elements_[e].diffusion; }, true);
    }
    SparseMatrix assemble_elasticity() const {
        return assemble_block([&](int e) { return displacement_block_dofs(e); },
                              [&](int e) { return displacement_block_dofs(e); },
                              [&](int e) -> const Eigen::MatrixXd& { return elements_[e].elasticity; }, true);
    }
    /// Rows: pressure volume dofs; columns: displacement dofs.
    SparseMatrix assemble_coupling() const {
        return assemble_block([&](int e) { return elements_[e].dofs.pressure; },
                              [&](int e) { return elements_[e].dofs.displacement; },
                              [&](int e) -> const Eigen::MatrixXd& { return elements_[e].coupling; }, false);
    }
    SparseMatrix assemble_mass() const {
        return assemble_block([&](int e) { return elements_[e].dofs.pressure; },
                              [&](int e) { return elements_[e].dofs.pressure; },
                              [&](int e) -> const Eigen::MatrixXd& { return elements_[e].mass; }, true);
    }

    // ---- loads ----

    /// (f, w) for every pressure basis function of element e.
    Eigen::VectorXd pressure_load(int e, const ScalarField& f) const {
        const auto& geom = elements_[e].geom;
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n_pressure());
        for (std::size_t q = 0; q < load_rule_.size(); ++q) {
            const double w = load_rule_.weights[q] * geom.det * geom.scale;
            out += (w * f(geom.to_physical(load_rule_.points[q]))) * load_p_table_.row(q).transpose();
        }
        return out;
    }

    /// (g, v) for every displacement basis function of element e.
    Eigen::VectorXd displacement_load(int e, const VectorField& g) const {
        const auto& el = elements_[e];
        const int n = u_basis_.dim();
        Eigen::VectorXd ortho = Eigen::VectorXd::Zero(2 * n);
        for (std::size_t q = 0; q < load_rule_.size(); ++q) {
            const double w = load_rule_.weights[q] * el.geom.det * el.geom.scale;
            const Vec2 gv = g(el.geom.to_physical(load_rule_.points[q]));
            ortho.head(n) += (w * gv.x()) * load_u_table_.row(q).transpose();
            ortho.tail(n) += (w * gv.y()) * load_u_table_.row(q).transpose();
        }
        return el.disp.coefficients.transpose() * ortho;
    }

    /// (q, alpha div v) for every displacement basis function of element e.
    Eigen::VectorXd divergence_load(int e, const ScalarField& q) const {
        const auto& el = elements_[e];
        const int n = u_basis_.dim();
        Eigen::VectorXd ortho = Eigen::VectorXd::Zero(2 * n);
        for (std::size_t t = 0; t < load_rule_.size(); ++t) {
            const Vec2& xi = load_rule_.points[t];
            const double w = load_rule_.weights[t] * el.geom.det;
            const Eigen::MatrixX2d grad =
                u_basis_.eval_grad(xi) * el.geom.inverse_transpose.transpose() * el.geom.scale;
            const double qv = params_.alpha * q(el.geom.to_physical(xi)) * w;
            ortho.head(n) += qv * grad.col(0);
            ortho.tail(n) += qv * grad.col(1);
        }
        return el.disp.coefficients.transpose() * ortho;
    }

    /// a_h((p, trace p), .) on [P, PH] of element e for a smooth field with
    /// gradient grad_p. The facet jump of the exact pair vanishes.
    Eigen::VectorXd diffusion_functional(int e, const VectorField& grad_p) const {
        const auto& el = elements_[e];
        const int kk = k(), np = n_pressure();
        const double kappa = params_.kappa;
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n_pressure_block());
        for (std::size_t q = 0; q < load_rule_.size(); ++q) {
            const Vec2& xi = load_rule_.points[q];
            const double w = load_rule_.weights[q] * el.geom.det;
            const Eigen::MatrixX2d grad =
                p_basis_.eval_grad(xi) * el.geom.inverse_transpose.transpose() * el.geom.scale;
            out.head(np) += (w * kappa) * grad * grad_p(el.geom.to_physical(xi));
        }
        for (int i = 0; i < 3; ++i) {
            const int f = mesh_->element_facets(e)[i];
            const Vec2 n = mesh_->outward_normal(e, i);
            const auto fq = facet_quadrature(*mesh_, f, load_facet_rule_);
            for (std::size_t q = 0; q < fq.weights.size(); ++q) {
                const double flux = kappa * grad_p(fq.points[q]).dot(n) * fq.weights[q];
                const auto ev = eval_scalar_physical(p_basis_, el.geom, fq.points[q]);
                out.head(np) -= flux * ev.phi;
                out.segment(np + i * kk, kk) += flux * facet_basis(kk - 1, fq.s[q], mesh_->facet(f).length);
            }
        }
        return out;
    }

    /// b_h((u, tangential trace u), .) on [U, UH] of element e for a smooth
    /// field with gradient grad_u (row i: gradient of component i).
    Eigen::VectorXd elasticity_functional(int e, const TensorField& grad_u) const {
        const auto& el = elements_[e];
        const int kk = k();
        const int n = u_basis_.dim();
        const int no = 2 * n;
        const double mu = params_.mu, lambda = params_.lambda;
        Eigen::VectorXd ortho = Eigen::VectorXd::Zero(no);
        Eigen::VectorXd hat = Eigen::VectorXd::Zero(3 * (kk + 1));
        for (std::size_t q = 0; q < load_rule_.size(); ++q) {
            const Vec2& xi = load_rule_.points[q];
            const double w = load_rule_.weights[q] * el.geom.det;
            const Eigen::MatrixX2d grad =
                u_basis_.eval_grad(xi) * el.geom.inverse_transpose.transpose() * el.geom.scale;
            const Mat2 g = grad_u(el.geom.to_physical(xi));
            const Mat2 stress = mu * (g + g.transpose()) + lambda * g.trace() * Mat2::Identity();
            ortho.head(n) += w * grad * stress.row(0).transpose();
            ortho.tail(n) += w * grad * stress.row(1).transpose();
        }
        for (int i = 0; i < 3; ++i) {
            const int f = mesh_->element_facets(e)[i];
            const Vec2 nrm = mesh_->outward_normal(e, i);
            const Vec2 t = mesh_->facet(f).tangent;
            const auto fq = facet_quadrature(*mesh_, f, load_facet_rule_);
            for (std::size_t q = 0; q < fq.weights.size(); ++q) {
                const Mat2 g = grad_u(fq.points[q]);
                const double flux = mu * t.dot((g + g.transpose()) * nrm) * fq.weights[q];
                const auto ev = eval_scalar_physical(u_basis_, el.geom, fq.points[q]);
                ortho.head(n) -= (flux * t.x()) * ev.phi;
                ortho.tail(n) -= (flux * t.y()) * ev.phi;
                hat.segment(i * (kk + 1), kk + 1) += flux * facet_basis(kk, fq.s[q], mesh_->facet(f).length);
            }
        }
        Eigen::VectorXd out(n_displacement_block());
        out.head(no) = el.disp.coefficients.transpose() * ortho;
        out.tail(3 * (kk + 1)) = hat;
        return out;
    }

    // ---- evaluation of discrete fields ----

    Eigen::VectorXd pressure_basis_at(int e, const Vec2& x) const {
        const auto& geom = elements_[e].geom;
        return p_basis_.eval(geom.to_reference(x)) * geom.scale;
    }

    /// Gradients of the pressure basis at x (rows: functions).
    Eigen::MatrixX2d pressure_basis_grad_at(int e, const Vec2& x) const {
        const auto& geom = elements_[e].geom;
        return p_basis_.eval_grad(geom.to_reference(x)) * geom.inverse_transpose.transpose() * geom.scale;
    }

    double pressure_at(const Eigen::VectorXd& state, int e, const Vec2& x) const {
        return gather(state, elements_[e].dofs.pressure).dot(pressure_basis_at(e, x));
    }

    /// Orthonormal-basis coefficients of the displacement on element e.
    Eigen::VectorXd displacement_ortho(const Eigen::VectorXd& state, int e) const {
        return elements_[e].disp.coefficients * gather(state, elements_[e].dofs.displacement);
    }

    Vec2 displacement_at(const Eigen::VectorXd& state, int e, const Vec2& x) const {
        const Eigen::VectorXd c = displacement_ortho(state, e);
        const int n = u_basis_.dim();
        const auto ev = eval_scalar_physical(u_basis_, elements_[e].geom, x);
        return {c.head(n).dot(ev.phi), c.tail(n).dot(ev.phi)};
    }

    Mat2 displacement_grad_at(const Eigen::VectorXd& state, int e, const Vec2& x) const {
        const Eigen::VectorXd c = displacement_ortho(state, e);
        const int n = u_basis_.dim();
        const auto ev = eval_scalar_physical(u_basis_, elements_[e].geom, x);
        Mat2 g;
        g.row(0) = c.head(n).transpose() * ev.grad_phi;
        g.row(1) = c.tail(n).transpose() * ev.grad_phi;
        return g;
    }

    /// Value of the facet unknown polynomial (pressure facet or tangential)
    /// stored at dofs first_dof..first_dof+degree at facet coordinate s.
    double facet_value(const Eigen::VectorXd& state, int f, int first_dof, int degree, double s) const {
        const Eigen::VectorXd q = facet_basis(degree, s, mesh_->facet(f).length);
        return state.segment(first_dof, degree + 1).dot(q);
    }

    // ---- facet projections and interpolation ----

    /// L2(F) projection onto P^degree(F): coefficients in the orthonormal facet basis.
    Eigen::VectorXd facet_project(int f, const ScalarField& g, int degree) const {
        const auto fq = facet_quadrature(*mesh_, f, load_facet_rule_);
        Eigen::VectorXd c = Eigen::VectorXd::Zero(degree + 1);
        for (std::size_t q = 0; q < fq.weights.size(); ++q)
            c += (fq.weights[q] * g(fq.points[q])) * facet_basis(degree, fq.s[q], mesh_->facet(f).length);
        return c;
    }

    /// Pi_What: projection onto P^{k-1}(F).
    Eigen::VectorXd facet_project_scalar(int f, const ScalarField& g) const { return facet_project(f, g, k() - 1); }

    /// Pi_Vhat applied to the tangential component of u (scalar coefficients along the facet tangent).
    Eigen::VectorXd facet_project_tangential(int f, const VectorField& u) const {
        const Vec2 t = mesh_->facet(f).tangent;
        return facet_project(f, [&](const Vec2& x) { return u(x).dot(t); }, k());
    }

    /// Write boundary values of p, u into the Dirichlet entries of `state`.
    void apply_dirichlet_data(Eigen::VectorXd& state, const ScalarField& p, const VectorField& u) const {
        const int kk = k();
        for (int f = 0; f < mesh_->num_facets(); ++f) {
            if (!mesh_->facet(f).is_boundary()) continue;
            if (p) {
                const Eigen::VectorXd c = facet_project_scalar(f, p);
                for (int j = 0; j < kk; ++j) state[space_.pressure_facet_dof(f, j)] = c[j];
            } else {
                for (int j = 0; j < kk; ++j) state[space_.pressure_facet_dof(f, j)] = 0.0;
            }
            const Eigen::VectorXd ct = u ? facet_project_tangential(f, u) : Eigen::VectorXd::Zero(kk + 1);
            for (int j = 0; j <= kk; ++j) state[space_.tangential_dof(f, j)] = ct[j];
            if (space_.policy().constrain_normal_displacement) {
                const Vec2 n = mesh_->facet(f).normal;
                const Eigen::VectorXd cn =
                    u ? facet_project(f, [&](const Vec2& x) { return u(x).dot(n); }, kk + 1) : Eigen::VectorXd::Zero(kk + 2);
                for (int j = 0; j < space_.shared_normal_moments_per_facet(); ++j) state[space_.normal_dof(f, j)] = cn[j];
            }
        }
    }

    /// Canonical interpolant: L2 projection for volume pressure, facet moments
    /// for all facet unknowns and normal displacement moments, bubble moments
    /// of the elementwise L2 projection for interior displacement functionals.
    Eigen::VectorXd interpolate(const ScalarField& p, const VectorField& u) const {
        Eigen::VectorXd state = Eigen::VectorXd::Zero(space_.num_dofs());
        const int kk = k();
        const int n = u_basis_.dim();
        for (int e = 0; e < num_elements(); ++e) {
            const auto& el = elements_[e];
            if (p) {
                const Eigen::VectorXd c = pressure_load(e, p);
                for (int i = 0; i < n_pressure(); ++i) state[el.dofs.pressure[i]] = c[i];
            }
            if (u) {
                Eigen::VectorXd ortho = Eigen::VectorXd::Zero(2 * n);
                for (std::size_t q = 0; q < load_rule_.size(); ++q) {
                    const double w = load_rule_.weights[q] * el.geom.det * el.geom.scale;
                    const Vec2 uv = u(el.geom.to_physical(load_rule_.points[q]));
                    ortho.head(n) += (w * uv.x()) * load_u_table_.row(q).transpose();
                    ortho.tail(n) += (w * uv.y()) * load_u_table_.row(q).transpose();
                }
                const Eigen::VectorXd dual = el.disp.functionals * ortho;
                const int nf = 3 * (kk + 2);
                for (int i = nf; i < n_displacement(); ++i) state[el.dofs.displacement[i]] = dual[i];
                // facet-normal moments from the true trace of u
                for (int i = 0; i < 3; ++i) {
                    const int f = mesh_->element_facets(e)[i];
                    const Vec2 nrm = mesh_->facet(f).normal;
                    const Eigen::VectorXd cn = facet_project(f, [&](const Vec2& x) { return u(x).dot(nrm); }, kk + 1);
                    for (int j = 0; j < kk + 2; ++j) state[el.dofs.displacement[i * (kk + 2) + j]] = cn[j];
                }
            }
        }
        for (int f = 0; f < mesh_->num_facets(); ++f) {
            if (p) {
                const Eigen::VectorXd c = facet_project_scalar(f, p);
                for (int j = 0; j < kk; ++j) state[space_.pressure_facet_dof(f, j)] = c[j];
            }
            if (u) {
                const Eigen::VectorXd c = facet_project_tangential(f, u);
                for (int j = 0; j <= kk; ++j) state[space_.tangential_dof(f, j)] = c[j];
            }
        }
        return state;
    }

    static Eigen::VectorXd gather(const Eigen::VectorXd& state, const std::vector<int>& ids) {
        Eigen::VectorXd v(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) v[i] = state[ids[i]];
        return v;
    }

    static void scatter_add(Eigen::VectorXd& target, const std::vector<int>& ids, const Eigen::VectorXd& v) {
        for (std::size_t i = 0; i < ids.size(); ++i) target[ids[i]] += v[i];
    }

    const TriangleRule& load_rule() const noexcept { return load_rule_; }
    const IntervalRule& load_facet_rule() const noexcept { return load_facet_rule_; }
    const TriangleRule& volume_rule() const noexcept { return volume_rule_; }
    const IntervalRule& facet_rule() const noexcept { return facet_rule_; }

private:
    template <class RowIds, class ColIds, class Block>
    SparseMatrix assemble_block(RowIds row_ids, ColIds col_ids, Block block, bool symmetric) const {
        std::vector<Triplet> t;
        for (int e = 0; e < num_elements(); ++e) {
            const auto r = row_ids(e);
            const auto c = col_ids(e);
            const Eigen::MatrixXd& b = block(e);
            for (std::size_t i = 0; i < r.size(); ++i)
                for (std::size_t j = 0; j < c.size(); ++j) t.push_back({r[i], c[j], b(i, j)});
        }
        const int n = space_.num_dofs();
        return SparseMatrix::from_triplets(n, n, t, symmetric);
    }

    void build_element(int e) {
        auto& el = elements_[e];
        el.geom = ElementGeometry(*mesh_, e);
        el.disp = build_element_displacement_basis(*mesh_, space_, e);
        el.dofs = space_.element_dofs(e);
        el.h = length_scale(e);
        build_pressure_matrices(e);
        build_displacement_matrices(e);
    }

    void build_pressure_matrices(int e) {
        auto& el = elements_[e];
        const int kk = k();
        const int np = n_pressure();
        const int na = n_pressure_block();
        const double kappa = params_.kappa;
        const double stab = kappa * params_.tau(kk) / el.h;

        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(na, na);
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(np, np);
        for (std::size_t q = 0; q < volume_rule_.size(); ++q) {
            const Vec2& xi = volume_rule_.points[q];
            const double w = volume_rule_.weights[q] * el.geom.det;
            const Eigen::VectorXd phi = p_basis_.eval(xi) * el.geom.scale;
            const Eigen::MatrixX2d grad =
                p_basis_.eval_grad(xi) * el.geom.inverse_transpose.transpose() * el.geom.scale;
            a.topLeftCorner(np, np) += (w * kappa) * grad * grad.transpose();
            m += (w * params_.storage) * phi * phi.transpose();
        }

        Eigen::MatrixXd consistency = Eigen::MatrixXd::Zero(na, na);
        for (int i = 0; i < 3; ++i) {
            const int f = mesh_->element_facets(e)[i];
            const Facet& facet = mesh_->facet(f);
            const Vec2 n = mesh_->outward_normal(e, i);
            const auto fq = facet_quadrature(*mesh_, f, facet_rule_);
            Eigen::MatrixXd moments = Eigen::MatrixXd::Zero(kk, na); // moments of [[w]] against P^{k-1}(F)
            for (std::size_t q = 0; q < fq.weights.size(); ++q) {
                const auto ev = eval_scalar_physical(p_basis_, el.geom, fq.points[q]);
                const Eigen::VectorXd qf = facet_basis(kk - 1, fq.s[q], facet.length);
                Eigen::VectorXd jump = Eigen::VectorXd::Zero(na);
                Eigen::VectorXd flux = Eigen::VectorXd::Zero(na);
                jump.head(np) = ev.phi;
                jump.segment(np + i * kk, kk) = -qf;
                flux.head(np) = kappa * (ev.grad_phi * n);
                consistency -= fq.weights[q] * flux * jump.transpose();
                moments += fq.weights[q] * qf * jump.transpose();
            }
            a += stab * moments.transpose() * moments;
        }
        a += consistency + consistency.transpose();
        el.diffusion = 0.5 * (a + a.transpose());
        el.mass = 0.5 * (m + m.transpose());
    }

    void build_displacement_matrices(int e) {
        auto& el = elements_[e];
        const int kk = k();
        const int n = u_basis_.dim();
        const int no = 2 * n;
        const int nh = 3 * (kk + 1);
        const int np = n_pressure();
        const double mu = params_.mu;
        const double lambda = params_.lambda;
        const double stab = mu * params_.tau(kk) / el.h;

        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(no + nh, no + nh);
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(np, no);
        for (std::size_t q = 0; q < volume_rule_.size(); ++q) {
            const Vec2& xi = volume_rule_.points[q];
            const double w = volume_rule_.weights[q] * el.geom.det;
            const Eigen::VectorXd phi_p = p_basis_.eval(xi) * el.geom.scale;
            const Eigen::MatrixX2d grad =
                u_basis_.eval_grad(xi) * el.geom.inverse_transpose.transpose() * el.geom.scale;
            // symmetric gradient as (e_xx, e_yy, sqrt2 e_xy) and divergence
            Eigen::MatrixX3d strain = Eigen::MatrixX3d::Zero(no, 3);
            Eigen::VectorXd div(no);
            for (int i = 0; i < n; ++i) {
                strain(i, 0) = grad(i, 0);
                strain(i, 2) = std::sqrt(0.5) * grad(i, 1);
                strain(n + i, 1) = grad(i, 1);
                strain(n + i, 2) = std::sqrt(0.5) * grad(i, 0);
                div[i] = grad(i, 0);
                div[n + i] = grad(i, 1);
            }
            b.topLeftCorner(no, no) += (2.0 * mu * w) * strain * strain.transpose() + (lambda * w) * div * div.transpose();
            c += (params_.alpha * w) * phi_p * div.transpose();
        }

        Eigen::MatrixXd consistency = Eigen::MatrixXd::Zero(no + nh, no + nh);
        for (int i = 0; i < 3; ++i) {
            const int f = mesh_->element_facets(e)[i];
            const Facet& facet = mesh_->facet(f);
            const Vec2 nrm = mesh_->outward_normal(e, i);
            const Vec2 t = facet.tangent;
            const auto fq = facet_quadrature(*mesh_, f, facet_rule_);
            Eigen::MatrixXd moments = Eigen::MatrixXd::Zero(kk + 1, no + nh);
            for (std::size_t q = 0; q < fq.weights.size(); ++q) {
                const auto ev = eval_scalar_physical(u_basis_, el.geom, fq.points[q]);
                const Eigen::VectorXd qf = facet_basis(kk, fq.s[q], facet.length);
                Eigen::VectorXd jump = Eigen::VectorXd::Zero(no + nh);
                Eigen::VectorXd flux = Eigen::VectorXd::Zero(no + nh);
                for (int a = 0; a < n; ++a) {
                    const Vec2 g = ev.grad_phi.row(a).transpose();
                    jump[a] = ev.phi[a] * t.x();
                    jump[n + a] = ev.phi[a] * t.y();
                    // t . sym(grad(phi e_c)) n
                    flux[a] = 2.0 * mu * 0.5 * (t.x() * g.dot(nrm) + g.dot(t) * nrm.x());
                    flux[n + a] = 2.0 * mu * 0.5 * (t.y() * g.dot(nrm) + g.dot(t) * nrm.y());
                }
                jump.segment(no + i * (kk + 1), kk + 1) = -qf;
                consistency -= fq.weights[q] * flux * jump.transpose();
                moments += fq.weights[q] * qf * jump.transpose();
            }
            b += stab * moments.transpose() * moments;
        }
        b += consistency + consistency.transpose();

        // change of basis to the H(div) dual basis
        Eigen::MatrixXd tr = Eigen::MatrixXd::Identity(no + nh, no + nh);
        tr.topLeftCorner(no, no) = el.disp.coefficients;
        const Eigen::MatrixXd bt = tr.transpose() * b * tr;
        el.elasticity = 0.5 * (bt + bt.transpose());
        el.coupling = c * el.disp.coefficients;
    }

    const Mesh* mesh_;
    SpaceSet space_;
    MaterialParams params_;
    StabilizationLength length_;
    ScalarBasis p_basis_;
    ScalarBasis u_basis_;
    TriangleRule volume_rule_;
    IntervalRule facet_rule_;
    TriangleRule load_rule_;
    IntervalRule load_facet_rule_;
    Eigen::MatrixXd load_p_table_;
    Eigen::MatrixXd load_u_table_;
    std::vector<ElementData> elements_;
};

} // namespace biot_hdg
