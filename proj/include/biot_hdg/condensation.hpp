#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "biot_hdg/errors.hpp"
#include "biot_hdg/fe_spaces.hpp"
#include "biot_hdg/sparse.hpp"

namespace biot_hdg {

using ElementDofList = std::function<std::vector<int>(int)>;
using ElementMatrix = std::function<Eigen::MatrixXd(int)>;

/// Static condensation of an element-wise assembled system onto the free
/// facet unknowns.
///
/// Element-local unknowns (SpaceSet::is_global false) are eliminated element
/// by element; Dirichlet unknowns take their values from the state passed to
/// solve() and are moved to the right-hand side.
class CondensedSystem {
public:
    static constexpr double kPivotTolerance = 1e-12;

    CondensedSystem(const SpaceSet& space, int num_elements, const ElementDofList& dofs, const ElementMatrix& matrix)
        : num_dofs_(space.num_dofs()) {
        // only facet unknowns touched by some element enter the global system
        std::vector<char> touched(num_dofs_, 0);
        for (int e = 0; e < num_elements; ++e)
            for (int d : dofs(e)) touched[d] = 1;
        global_index_.assign(num_dofs_, -1);
        for (int d = 0; d < space.num_global_dofs(); ++d)
            if (touched[d] && !space.is_dirichlet(d)) global_index_[d] = num_free_global_++;

        elements_.resize(num_elements);
        std::vector<Triplet> triplets;
        for (int e = 0; e < num_elements; ++e) {
            auto& el = elements_[e];
            const std::vector<int> ids = dofs(e);
            const Eigen::MatrixXd k_e = matrix(e);
            std::vector<int> lpos, gpos, dpos;
            for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
                const int d = ids[i];
                if (!space.is_global(d)) {
                    if (space.is_dirichlet(d)) throw Error("element-local dof flagged Dirichlet");
                    lpos.push_back(i);
                    el.local.push_back(d);
                } else if (space.is_dirichlet(d)) {
                    dpos.push_back(i);
                    el.dirichlet.push_back(d);
                } else {
                    gpos.push_back(i);
                    el.global.push_back(d);
                }
            }
            const Eigen::MatrixXd k_ll = k_e(lpos, lpos);
            el.k_lg = k_e(lpos, gpos);
            el.k_ld = k_e(lpos, dpos);
            el.k_gl = k_e(gpos, lpos);
            el.k_gd = k_e(gpos, dpos);
            // symmetric diagonal scaling: pressure and displacement rows differ by many orders
            el.scale = k_ll.diagonal().cwiseAbs().cwiseSqrt().unaryExpr([](double v) { return v > 0.0 ? 1.0 / v : 1.0; });
            el.lu = (el.scale.asDiagonal() * k_ll * el.scale.asDiagonal()).partialPivLu();
            check_pivots(el.lu, e);
            const Eigen::MatrixXd schur = k_e(gpos, gpos) - el.k_gl * local_solve(el, el.k_lg);
            for (std::size_t i = 0; i < gpos.size(); ++i)
                for (std::size_t j = 0; j < gpos.size(); ++j)
                    triplets.push_back({global_index_[el.global[i]], global_index_[el.global[j]], schur(i, j)});
        }
        matrix_ = SparseMatrix::from_triplets(num_free_global_, num_free_global_, triplets, true);
        factorization_ = std::make_shared<Factorization>(matrix_);
    }

    int dimension() const noexcept { return num_free_global_; }
    const SparseMatrix& matrix() const noexcept { return matrix_; }

    /// Solve K x = rhs. `state` supplies the Dirichlet values on input and
    /// receives the full solution on output.
    void solve(const Eigen::VectorXd& rhs, Eigen::VectorXd& state) const {
        if (rhs.size() != num_dofs_ || state.size() != num_dofs_) throw Error("condensed solve: size mismatch");
        Eigen::VectorXd reduced = Eigen::VectorXd::Zero(num_free_global_);
        for (int d = 0; d < num_dofs_; ++d)
            if (global_index_[d] >= 0) reduced[global_index_[d]] = rhs[d];
        std::vector<Eigen::VectorXd> local_rhs(elements_.size());
        for (std::size_t e = 0; e < elements_.size(); ++e) {
            const auto& el = elements_[e];
            const Eigen::VectorXd xd = gather(state, el.dirichlet);
            local_rhs[e] = gather(rhs, el.local) - el.k_ld * xd;
            const Eigen::VectorXd contrib = el.k_gd * xd + el.k_gl * local_solve(el, local_rhs[e]);
            for (std::size_t i = 0; i < el.global.size(); ++i) reduced[global_index_[el.global[i]]] -= contrib[i];
        }
        const Eigen::VectorXd xg = factorization_->solve(reduced);
        for (int d = 0; d < num_dofs_; ++d)
            if (global_index_[d] >= 0) state[d] = xg[global_index_[d]];
        for (std::size_t e = 0; e < elements_.size(); ++e) {
            const auto& el = elements_[e];
            const Eigen::VectorXd xl = local_solve(el, local_rhs[e] - el.k_lg * gather(state, el.global));
            for (std::size_t i = 0; i < el.local.size(); ++i) state[el.local[i]] = xl[i];
        }
    }

private:
    struct LocalData {
        std::vector<int> local, global, dirichlet;
        Eigen::MatrixXd k_lg, k_ld, k_gl, k_gd;
        Eigen::VectorXd scale;
        Eigen::PartialPivLU<Eigen::MatrixXd> lu; // of diag(scale) K_LL diag(scale)
    };

    static Eigen::MatrixXd local_solve(const LocalData& el, const Eigen::MatrixXd& b) {
        return el.scale.asDiagonal() * el.lu.solve(el.scale.asDiagonal() * b);
    }

    static void check_pivots(const Eigen::PartialPivLU<Eigen::MatrixXd>& lu, int e) {
        const Eigen::VectorXd diag = lu.matrixLU().diagonal().cwiseAbs();
        if (diag.size() == 0) return;
        if (!(diag.minCoeff() > kPivotTolerance * diag.maxCoeff())) throw LocalBlockSingular(e);
    }

    static Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& ids) {
        Eigen::VectorXd out(ids.size());
        for (std::size_t i = 0; i < ids.size(); ++i) out[i] = v[ids[i]];
        return out;
    }

    int num_dofs_ = 0;
    int num_free_global_ = 0;
    std::vector<int> global_index_;
    std::vector<LocalData> elements_;
    SparseMatrix matrix_;
    std::shared_ptr<Factorization> factorization_;
};

/// Assemble the uncondensed matrix over all dofs.
inline SparseMatrix assemble_full(int num_dofs, int num_elements, const ElementDofList& dofs, const ElementMatrix& matrix) {
    std::vector<Triplet> t;
    for (int e = 0; e < num_elements; ++e) {
        const auto ids = dofs(e);
        const Eigen::MatrixXd k_e = matrix(e);
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::size_t j = 0; j < ids.size(); ++j) t.push_back({ids[i], ids[j], k_e(i, j)});
    }
    return SparseMatrix::from_triplets(num_dofs, num_dofs, t, true);
}

/// Solve the uncondensed system with Dirichlet elimination (reference path
/// for the condensed solver). Same calling convention as CondensedSystem::solve.
/// Dofs without any matrix entry are left untouched.
inline void solve_full(const SpaceSet& space, const SparseMatrix& full, const Eigen::VectorXd& rhs, Eigen::VectorXd& state) {
    std::vector<int> free, fixed;
    const auto& offsets = full.row_offsets();
    for (int d = 0; d < space.num_dofs(); ++d) {
        if (offsets[d + 1] == offsets[d]) continue;
        (space.is_dirichlet(d) ? fixed : free).push_back(d);
    }
    Eigen::VectorXd xd(fixed.size());
    for (std::size_t i = 0; i < fixed.size(); ++i) xd[i] = state[fixed[i]];
    Eigen::VectorXd b(free.size());
    for (std::size_t i = 0; i < free.size(); ++i) b[i] = rhs[free[i]];
    b -= full.restrict_to(free, fixed).multiply(xd);
    const Factorization fact(full.restrict_to(free, free));
    const Eigen::VectorXd x = fact.solve(b);
    for (std::size_t i = 0; i < free.size(); ++i) state[free[i]] = x[i];
}

} // namespace biot_hdg
