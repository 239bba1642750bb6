#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "biot_hdg/errors.hpp"

namespace biot_hdg {

struct Triplet {
    int row;
    int col;
    double value;
};

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
class SparseMatrix {
public:
    SparseMatrix() = default;

    /// Duplicates are summed in insertion order, so the result does not
    /// depend on anything but the triplet sequence.
    static SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& triplets,
                                      bool symmetric = false) {
        std::vector<std::size_t> order(triplets.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const auto& ta = triplets[a];
            const auto& tb = triplets[b];
            return ta.row != tb.row ? ta.row < tb.row : ta.col < tb.col;
        });
        SparseMatrix m;
        m.rows_ = rows;
        m.cols_ = cols;
        m.symmetric_ = symmetric;
        m.row_ptr_.assign(rows + 1, 0);
        int last_row = -1, last_col = -1;
        for (std::size_t idx : order) {
            const auto& t = triplets[idx];
            if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) throw Error("triplet out of range");
            if (t.row == last_row && t.col == last_col) {
                m.values_.back() += t.value;
                continue;
            }
            m.col_idx_.push_back(t.col);
            m.values_.push_back(t.value);
            ++m.row_ptr_[t.row + 1];
            last_row = t.row;
            last_col = t.col;
        }
        for (int r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
        return m;
    }

    static SparseMatrix from_dense(const Eigen::MatrixXd& a, bool symmetric = false) {
        std::vector<Triplet> t;
        for (int i = 0; i < a.rows(); ++i)
            for (int j = 0; j < a.cols(); ++j)
                if (a(i, j) != 0.0) t.push_back({i, j, a(i, j)});
        return from_triplets(static_cast<int>(a.rows()), static_cast<int>(a.cols()), t, symmetric);
    }

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    std::size_t nonzeros() const noexcept { return values_.size(); }
    bool symmetric() const noexcept { return symmetric_; }
    const std::vector<int>& row_offsets() const noexcept { return row_ptr_; }
    const std::vector<int>& column_indices() const noexcept { return col_idx_; }
    const std::vector<double>& values() const noexcept { return values_; }

    double coeff(int i, int j) const {
        const auto begin = col_idx_.begin() + row_ptr_[i];
        const auto end = col_idx_.begin() + row_ptr_[i + 1];
        const auto it = std::lower_bound(begin, end, j);
        return (it != end && *it == j) ? values_[it - col_idx_.begin()] : 0.0;
    }

    Eigen::VectorXd multiply(const Eigen::VectorXd& x) const {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(rows_);
        for (int i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += values_[p] * x[col_idx_[p]];
            y[i] = s;
        }
        return y;
    }

    double norm_inf() const {
        double n = 0.0;
        for (int i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) s += std::abs(values_[p]);
            n = std::max(n, s);
        }
        return n;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// max |a_ij - a_ji|.
    double max_asymmetry() const {
        double d = 0.0;
        for (int i = 0; i < rows_; ++i)
            for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
                d = std::max(d, std::abs(values_[p] - coeff(col_idx_[p], i)));
        return d;
    }

    Eigen::MatrixXd to_dense() const {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows_, cols_);
        for (int i = 0; i < rows_; ++i)
            for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) a(i, col_idx_[p]) = values_[p];
        return a;
    }

    Eigen::SparseMatrix<double> to_eigen() const {
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(values_.size());
        for (int i = 0; i < rows_; ++i)
            for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) t.emplace_back(i, col_idx_[p], values_[p]);
        Eigen::SparseMatrix<double> a(rows_, cols_);
        a.setFromTriplets(t.begin(), t.end());
        a.makeCompressed();
        return a;
    }

    /// Submatrix on the given row and column index lists.
    SparseMatrix restrict_to(const std::vector<int>& row_ids, const std::vector<int>& col_ids) const {
        std::vector<int> col_map(cols_, -1);
        for (std::size_t j = 0; j < col_ids.size(); ++j) col_map[col_ids[j]] = static_cast<int>(j);
        std::vector<Triplet> t;
        for (std::size_t i = 0; i < row_ids.size(); ++i) {
            const int r = row_ids[i];
            for (int p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p)
                if (col_map[col_idx_[p]] >= 0) t.push_back({static_cast<int>(i), col_map[col_idx_[p]], values_[p]});
        }
        return from_triplets(static_cast<int>(row_ids.size()), static_cast<int>(col_ids.size()), t, symmetric_);
    }

    /// Matrix Market coordinate format (general, 1-based).
    void write_matrix_market(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw IoError("cannot open " + path);
        out.precision(17);
        out << "%%MatrixMarket matrix coordinate real general\n";
        out << rows_ << ' ' << cols_ << ' ' << values_.size() << '\n';
        for (int i = 0; i < rows_; ++i)
            for (int p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p)
                out << i + 1 << ' ' << col_idx_[p] + 1 << ' ' << values_[p] << '\n';
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> row_ptr_{0};
    std::vector<int> col_idx_;
    std::vector<double> values_;
    bool symmetric_ = false;
};

/// Relative residual ||Ax - b|| / (||A|| ||x|| + ||b||) in the infinity norm.
inline double relative_residual(const SparseMatrix& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b) {
    const double denom = a.norm_inf() * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
    if (denom == 0.0) return 0.0;
    return (a.multiply(x) - b).lpNorm<Eigen::Infinity>() / denom;
}

/// Sparse LU factorization (COLAMD column ordering, partial pivoting) of the
/// symmetrically equilibrated matrix D A D, D = |diag A|^{-1/2}.
/// Immutable once built; solves are const.
class Factorization {
public:
    static constexpr double kResidualTolerance = 1e-10;
    static constexpr double kRefinementTarget = 1e-15;
    static constexpr int kMaxRefinements = 4;

    explicit Factorization(const SparseMatrix& matrix) : matrix_(matrix) {
        if (matrix.rows() != matrix.cols()) throw Error("factorize: matrix is not square");
        lu_ = std::make_shared<Solver>();
        if (matrix.rows() == 0) return;
        scale_ = Eigen::VectorXd::Ones(matrix.rows());
        for (int i = 0; i < matrix.rows(); ++i) {
            const double d = std::abs(matrix.coeff(i, i));
            if (d > 0.0) scale_[i] = 1.0 / std::sqrt(d);
        }
        std::vector<Triplet> t;
        t.reserve(matrix.nonzeros());
        const auto& rp = matrix.row_offsets();
        const auto& ci = matrix.column_indices();
        const auto& v = matrix.values();
        for (int r = 0; r < matrix.rows(); ++r)
            for (int q = rp[r]; q < rp[r + 1]; ++q)
                if (v[q] != 0.0) t.push_back({r, ci[q], scale_[r] * v[q] * scale_[ci[q]]});
        scaled_ = SparseMatrix::from_triplets(matrix.rows(), matrix.cols(), t, matrix.symmetric());
        lu_->compute(scaled_.to_eigen());
        if (lu_->info() != Eigen::Success) throw SingularMatrix(failing_pivot());
    }

    int dimension() const noexcept { return matrix_.rows(); }
    const SparseMatrix& matrix() const noexcept { return matrix_; }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        if (rhs.size() != matrix_.rows()) throw Error("solve: right-hand side has wrong size");
        if (matrix_.rows() == 0) return rhs;
        const Eigen::VectorXd b = scale_.cwiseProduct(rhs);
        Eigen::VectorXd y = lu_->solve(b);
        double res = relative_residual(scaled_, y, b);
        // refine while it still pays off; time stepping divides solve errors by small s
        for (int iter = 0; iter < kMaxRefinements && res > kRefinementTarget; ++iter) {
            const Eigen::VectorXd z = y + lu_->solve(Eigen::VectorXd(b - scaled_.multiply(y)));
            const double res_z = relative_residual(scaled_, z, b);
            if (!(res_z < 0.5 * res)) break;
            y = z;
            res = res_z;
        }
        Eigen::VectorXd x = scale_.cwiseProduct(y);
        const double res_x = relative_residual(matrix_, x, rhs);
        if (!(res_x <= kResidualTolerance)) throw ResidualTooLarge(res_x);
        return x;
    }

private:
    using Solver = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;

    // SparseLU reports the failing column only in its message ("... AT i").
    long failing_pivot() const {
        const std::string msg = lu_->lastErrorMessage();
        const auto pos = msg.find_last_not_of("0123456789");
        if (pos == std::string::npos || pos + 1 >= msg.size()) return -1;
        return std::stol(msg.substr(pos + 1));
    }

    SparseMatrix matrix_;
    SparseMatrix scaled_;
    Eigen::VectorXd scale_;
    std::shared_ptr<Solver> lu_;
};

inline Factorization factorize(const SparseMatrix& matrix) { return Factorization(matrix); }

inline Eigen::VectorXd solve(const Factorization& fact, const Eigen::VectorXd& rhs) { return fact.solve(rhs); }

} // namespace biot_hdg
