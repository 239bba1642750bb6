#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "biot_hdg/basis.hpp"
#include "biot_hdg/errors.hpp"
#include "biot_hdg/mesh.hpp"
#include "biot_hdg/quadrature.hpp"

namespace biot_hdg {

enum class Variant { standard, relaxed };

/// Which boundary facet unknowns are fixed by Dirichlet data.
///
/// Pressure-facet and tangential-displacement unknowns on the boundary are
/// always constrained. Normal displacement moments are constrained unless the
/// problem leaves the normal displacement free (natural condition).
struct BoundaryPolicy {
    bool constrain_normal_displacement = true;
};

enum class DofKind {
    pressure_volume,
    pressure_facet,
    normal_moment,      // shared facet-normal displacement moment
    normal_top_local,   // relaxed variant: element-local top normal moment
    tangential,
    displacement_interior,
};

/// Global dof ids of one element, grouped by field.
///
/// `displacement` lists the 3(k+2) facet-normal moments (local facet major,
/// moment degree minor) followed by the k(k+2) interior functionals, in the
/// same order as the columns of ElementDisplacementBasis::coefficients.
struct ElementDofs {
    std::vector<int> pressure;
    std::vector<int> pressure_facet;
    std::vector<int> displacement;
    std::vector<int> tangential;
};

struct SpaceCounts {
    int pressure_volume = 0;
    int pressure_facet = 0;
    int tangential = 0;
    int displacement_normal_global = 0;
    int displacement_local = 0;
    int displacement_total = 0;
    int global = 0;      // free facet unknowns after condensation
    int condensable = 0; // element-local unknowns
};

/// Degrees of freedom for the pressure pair (P^k volume, P^{k-1} facet) and
/// the displacement pair (H(div)-conforming vector P^{k+1}, tangential P^k facet).
///
/// Global numbering is facet-major: for each facet (by id) its shared normal
/// moments, tangential moments and pressure-facet moments; element-local
/// unknowns follow, element by element. Boundary facet unknowns are numbered
/// too and flagged as Dirichlet according to the BoundaryPolicy.
class SpaceSet {
public:
    SpaceSet(const Mesh& mesh, int k, Variant variant, BoundaryPolicy policy = {})
        : k_(k), variant_(variant), policy_(policy), num_elements_(mesh.num_elements()),
          num_facets_(mesh.num_facets()) {
        if (k < 1) throw InvalidDegree(k);
        n_normal_shared_ = variant == Variant::standard ? k + 2 : k + 1;
        per_facet_ = n_normal_shared_ + (k + 1) + k;
        n_pressure_ = triangle_dim(k);
        n_interior_ = k * (k + 2);
        n_top_local_ = variant == Variant::relaxed ? 3 : 0;
        per_element_ = n_pressure_ + n_interior_ + n_top_local_;
        num_global_ = per_facet_ * num_facets_;
        num_dofs_ = num_global_ + per_element_ * num_elements_;

        dirichlet_.assign(num_dofs_, 0);
        kind_.resize(num_dofs_);
        for (int f = 0; f < num_facets_; ++f) {
            const bool bnd = mesh.facet(f).is_boundary();
            for (int j = 0; j < n_normal_shared_; ++j) {
                kind_[normal_dof(f, j)] = DofKind::normal_moment;
                dirichlet_[normal_dof(f, j)] = bnd && policy.constrain_normal_displacement;
            }
            for (int j = 0; j <= k; ++j) {
                kind_[tangential_dof(f, j)] = DofKind::tangential;
                dirichlet_[tangential_dof(f, j)] = bnd;
            }
            for (int j = 0; j < k; ++j) {
                kind_[pressure_facet_dof(f, j)] = DofKind::pressure_facet;
                dirichlet_[pressure_facet_dof(f, j)] = bnd;
            }
        }
        for (int e = 0; e < num_elements_; ++e) {
            const int base = element_offset(e);
            for (int i = 0; i < n_pressure_; ++i) kind_[base + i] = DofKind::pressure_volume;
            for (int i = 0; i < n_interior_; ++i) kind_[base + n_pressure_ + i] = DofKind::displacement_interior;
            for (int i = 0; i < n_top_local_; ++i)
                kind_[base + n_pressure_ + n_interior_ + i] = DofKind::normal_top_local;
        }
        element_facets_.reserve(num_elements_);
        for (int e = 0; e < num_elements_; ++e) element_facets_.push_back(mesh.element_facets(e));
    }

    int k() const noexcept { return k_; }
    Variant variant() const noexcept { return variant_; }
    const BoundaryPolicy& policy() const noexcept { return policy_; }

    int num_dofs() const noexcept { return num_dofs_; }
    /// Facet unknowns occupy [0, num_global_dofs()).
    int num_global_dofs() const noexcept { return num_global_; }
    bool is_global(int dof) const noexcept { return dof < num_global_; }
    bool is_dirichlet(int dof) const { return dirichlet_[dof] != 0; }
    DofKind kind(int dof) const { return kind_[dof]; }

    int pressure_dim() const noexcept { return n_pressure_; }
    int displacement_dim() const noexcept { return (k_ + 2) * (k_ + 3); }
    int normal_moments_per_facet() const noexcept { return k_ + 2; }
    int shared_normal_moments_per_facet() const noexcept { return n_normal_shared_; }

    int normal_dof(int f, int j) const { return f * per_facet_ + j; }
    int tangential_dof(int f, int j) const { return f * per_facet_ + n_normal_shared_ + j; }
    int pressure_facet_dof(int f, int j) const { return f * per_facet_ + n_normal_shared_ + k_ + 1 + j; }
    int element_offset(int e) const { return num_global_ + e * per_element_; }

    ElementDofs element_dofs(int e) const {
        ElementDofs d;
        const int base = element_offset(e);
        for (int i = 0; i < n_pressure_; ++i) d.pressure.push_back(base + i);
        const auto& ef = element_facets_[e];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < k_; ++j) d.pressure_facet.push_back(pressure_facet_dof(ef[i], j));
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < k_ + 2; ++j) {
                if (j < n_normal_shared_)
                    d.displacement.push_back(normal_dof(ef[i], j));
                else
                    d.displacement.push_back(base + n_pressure_ + n_interior_ + i);
            }
        }
        for (int i = 0; i < n_interior_; ++i) d.displacement.push_back(base + n_pressure_ + i);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j <= k_; ++j) d.tangential.push_back(tangential_dof(ef[i], j));
        return d;
    }

    /// Counts of unknowns that remain after eliminating Dirichlet dofs.
    SpaceCounts counts() const {
        SpaceCounts c;
        for (int dof = 0; dof < num_dofs_; ++dof) {
            if (dirichlet_[dof]) continue;
            switch (kind_[dof]) {
            case DofKind::pressure_volume: ++c.pressure_volume; break;
            case DofKind::pressure_facet: ++c.pressure_facet; break;
            case DofKind::tangential: ++c.tangential; break;
            case DofKind::normal_moment: ++c.displacement_normal_global; break;
            case DofKind::normal_top_local:
            case DofKind::displacement_interior: ++c.displacement_local; break;
            }
            if (is_global(dof))
                ++c.global;
            else
                ++c.condensable;
        }
        c.displacement_total = c.displacement_normal_global + c.displacement_local;
        return c;
    }

private:
    int k_;
    Variant variant_;
    BoundaryPolicy policy_;
    int num_elements_;
    int num_facets_;
    int n_normal_shared_ = 0;
    int per_facet_ = 0;
    int n_pressure_ = 0;
    int n_interior_ = 0;
    int n_top_local_ = 0;
    int per_element_ = 0;
    int num_global_ = 0;
    int num_dofs_ = 0;
    std::vector<char> dirichlet_;
    std::vector<DofKind> kind_;
    std::vector<std::array<int, 3>> element_facets_;
};

inline SpaceSet build_space_set(const Mesh& mesh, int k, Variant variant, BoundaryPolicy policy = {}) {
    return SpaceSet(mesh, k, variant, policy);
}

/// Values and gradients of the L2-orthonormal vector P^{k+1} basis on an
/// element. Function c*n + i is phi_i times the unit vector e_c.
struct VectorOrthoEval {
    Eigen::VectorXd phi;       // n
    Eigen::MatrixX2d grad_phi; // n x 2, physical
};

inline VectorOrthoEval eval_scalar_physical(const ScalarBasis& basis, const ElementGeometry& geom, const Vec2& x) {
    const Vec2 xi = geom.to_reference(x);
    VectorOrthoEval out;
    out.phi = basis.eval(xi) * geom.scale;
    out.grad_phi = (basis.eval_grad(xi) * geom.inverse_transpose.transpose()) * geom.scale;
    return out;
}

/// Displacement basis of one element in terms of the orthonormal vector basis.
struct ElementDisplacementBasis {
    /// Column j holds the orthonormal-basis coefficients of basis function j.
    Eigen::MatrixXd coefficients;
    /// Row i is dual functional i applied to the orthonormal basis.
    Eigen::MatrixXd functionals;
    /// 2-norm condition number of the functional matrix.
    double condition = 0.0;
};

/// Solve the dual system that turns the displacement functionals (facet-normal
/// moments against the stored facet normal, then moments against an
/// orthonormal basis of the zero-normal-trace bubbles) into a nodal basis.
inline ElementDisplacementBasis build_element_displacement_basis(const Mesh& mesh, const SpaceSet& space, int e) {
    const int k = space.k();
    const ScalarBasis basis(k + 1);
    const int n = basis.dim();
    const int dim = 2 * n;
    const int n_facet_rows = 3 * (k + 2);
    const ElementGeometry geom(mesh, e);
    const IntervalRule rule = interval_rule(2 * (k + 2));

    Eigen::MatrixXd normal_moments = Eigen::MatrixXd::Zero(n_facet_rows, dim);
    for (int i = 0; i < 3; ++i) {
        const int f = mesh.element_facets(e)[i];
        const Facet& facet = mesh.facet(f);
        const FacetQuadrature fq = facet_quadrature(mesh, f, rule);
        for (std::size_t q = 0; q < fq.weights.size(); ++q) {
            const Eigen::VectorXd phi = basis.eval(geom.to_reference(fq.points[q])) * geom.scale;
            const Eigen::VectorXd qf = facet_basis(k + 1, fq.s[q], facet.length);
            for (int j = 0; j < k + 2; ++j) {
                const double w = fq.weights[q] * qf[j];
                normal_moments.row(i * (k + 2) + j).head(n) += w * facet.normal.x() * phi.transpose();
                normal_moments.row(i * (k + 2) + j).tail(n) += w * facet.normal.y() * phi.transpose();
            }
        }
    }

    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(normal_moments.transpose());
    const Eigen::MatrixXd q_full = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
    const Eigen::MatrixXd bubbles = q_full.rightCols(dim - n_facet_rows);

    ElementDisplacementBasis out;
    out.functionals.resize(dim, dim);
    out.functionals.topRows(n_facet_rows) = normal_moments;
    out.functionals.bottomRows(dim - n_facet_rows) = bubbles.transpose();

    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(out.functionals);
    const auto& sv = svd.singularValues();
    if (sv.minCoeff() <= 1e-12 * sv.maxCoeff()) throw SingularDualSystem(e);
    out.condition = sv.maxCoeff() / sv.minCoeff();
    out.coefficients = out.functionals.partialPivLu().inverse();
    return out;
}

} // namespace biot_hdg
