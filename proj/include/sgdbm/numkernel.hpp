/*
   Copyright 2026 The sgdbm Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include "sgdbm/errors.hpp"

namespace sgdbm {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;
using Index = Eigen::Index;

/// Relative pivot threshold below which a Cholesky pivot is treated as zero.
template <typename Scalar>
constexpr Scalar pivot_tolerance() {
    return std::max<Scalar>(Scalar(1e-12), Scalar(100) * std::numeric_limits<Scalar>::epsilon());
}

/**
 * Dense symmetric matrix stored in full.
 *
 * Construction symmetrizes its argument as (A + A^T) / 2, so entries(i, j)
 * and entries(j, i) are always bitwise equal.
 *
 * A matrix may also carry a Gram factor F (d x k) with F F^T equal to the
 * entries in exact arithmetic. cholesky() then works from a QR of F^T, so a
 * scatter matrix of k < d columns has exactly zero trailing pivots.
 */
template <typename Scalar>
class SymMatrix {
public:
    using MatrixType = MatrixX<Scalar>;

    explicit SymMatrix(Index dim) : entries_(MatrixType::Zero(check_dim(dim), dim)) {}

    template <typename Derived>
    explicit SymMatrix(const Eigen::MatrixBase<Derived>& a) {
        if (a.rows() != a.cols())
            throw DimensionMismatch("SymMatrix: matrix is " + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + ", expected square");
        check_dim(a.rows());
        entries_ = (Scalar(0.5) * (a + a.transpose())).eval();
    }

    /// Entries `a` with Gram factor `factor`.
    template <typename Derived>
    SymMatrix(const Eigen::MatrixBase<Derived>& a, MatrixType factor) : SymMatrix(a) {
        if (factor.rows() != entries_.rows())
            throw DimensionMismatch("SymMatrix: factor has " + std::to_string(factor.rows()) + " rows, expected " +
                                    std::to_string(entries_.rows()));
        factor_ = std::move(factor);
        has_factor_ = true;
    }

    static SymMatrix identity(Index dim) { return SymMatrix(MatrixType::Identity(dim, dim)); }

    Index dim() const noexcept { return entries_.rows(); }
    const MatrixType& matrix() const noexcept { return entries_; }
    Scalar operator()(Index i, Index j) const { return entries_(i, j); }

    bool has_factor() const noexcept { return has_factor_; }
    const MatrixType& factor() const noexcept { return factor_; }

    /// c S for c >= 0, keeping the Gram factor.
    SymMatrix scaled(Scalar c) const {
        SymMatrix out(*this);
        out.entries_ *= c;
        if (has_factor_) out.factor_ *= std::sqrt(c);
        return out;
    }

private:
    static Index check_dim(Index dim) {
        if (dim < 1) throw DimensionMismatch("SymMatrix: dimension must be >= 1");
        return dim;
    }

    MatrixType entries_;
    MatrixType factor_;
    bool has_factor_ = false;
};

/**
 * For v (d x m) whose columns satisfy v w = 0, returns F (d x (m-1)) with
 * F F^T == v v^T in exact arithmetic: v times the Householder reflection
 * sending w / |w| to -e_m, last column dropped. Weights must be positive.
 */
template <typename Derived>
MatrixX<typename Derived::Scalar> reduce_constrained(const Eigen::MatrixBase<Derived>& v,
                                                    const VectorX<typename Derived::Scalar>& w) {
    using Scalar = typename Derived::Scalar;
    const Index m = v.cols();
    if (w.size() != m)
        throw DimensionMismatch("reduce_constrained: " + std::to_string(m) + " columns but " +
                                std::to_string(w.size()) + " weights");
    VectorX<Scalar> h = w / w.norm();
    h(m - 1) += Scalar(1);
    const Scalar beta = Scalar(2) / h.squaredNorm();
    const VectorX<Scalar> vh = v * h;
    return (v - beta * vh * h.transpose()).leftCols(m - 1);
}

/// Lower-triangular Cholesky factor L with L * L^T equal to the source matrix.
template <typename Scalar>
class CholFactor {
public:
    using MatrixType = MatrixX<Scalar>;

    explicit CholFactor(MatrixType lower) : lower_(std::move(lower)) {}

    Index dim() const noexcept { return lower_.rows(); }
    const MatrixType& lower() const noexcept { return lower_; }

    /// Returns y with L y = v.
    template <typename Derived>
    VectorX<Scalar> solve_lower(const Eigen::MatrixBase<Derived>& v) const {
        return lower_.template triangularView<Eigen::Lower>().solve(v);
    }

private:
    MatrixType lower_;
};

/**
 * Cholesky factorization of a symmetric matrix.
 *
 * Fails with NotPositiveDefinite when any pivot L_ii^2 is at most
 * pivot_tolerance() times the largest diagonal entry. Rank-deficient sample
 * covariances (fewer batches than dimensions) land here. Matrices carrying a
 * Gram factor F are factored as L = R^T from F^T = QR.
 */
template <typename Scalar>
CholFactor<Scalar> cholesky(const SymMatrix<Scalar>& s) {
    const auto& a = s.matrix();
    const Scalar max_diag = a.diagonal().maxCoeff();
    if (!(max_diag > Scalar(0)))
        throw NotPositiveDefinite("cholesky: largest diagonal entry is not positive");

    MatrixX<Scalar> lower;
    if (s.has_factor()) {
        const Index d = s.dim();
        const Index k = std::min(s.factor().cols(), d);
        lower = MatrixX<Scalar>::Zero(d, d);
        if (k > 0) {
            Eigen::HouseholderQR<MatrixX<Scalar>> qr(s.factor().transpose());
            lower.leftCols(k) = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>().transpose();
            for (Index j = 0; j < k; ++j)
                if (lower(j, j) < Scalar(0)) lower.col(j) = -lower.col(j);
        }
    } else {
        Eigen::LLT<MatrixX<Scalar>> llt(a);
        if (llt.info() != Eigen::Success) throw NotPositiveDefinite("cholesky: non-positive pivot");
        lower = llt.matrixL();
    }
    const Scalar threshold = pivot_tolerance<Scalar>() * max_diag;
    for (Index i = 0; i < lower.rows(); ++i) {
        const Scalar pivot = lower(i, i) * lower(i, i);
        if (!(pivot > threshold))
            throw NotPositiveDefinite("cholesky: pivot " + std::to_string(i) + " below tolerance");
    }
    return CholFactor<Scalar>(std::move(lower));
}

/// v^T S^{-1} v given the Cholesky factor of S.
template <typename Scalar, typename Derived>
Scalar quad_form_inv(const CholFactor<Scalar>& chol, const Eigen::MatrixBase<Derived>& v) {
    if (v.size() != chol.dim())
        throw DimensionMismatch("quad_form_inv: vector length " + std::to_string(v.size()) +
                                " vs matrix dimension " + std::to_string(chol.dim()));
    return chol.solve_lower(v).squaredNorm();
}

/// v^T S^{-1} v via two triangular solves.
template <typename Scalar, typename Derived>
Scalar quad_form_inv(const SymMatrix<Scalar>& s, const Eigen::MatrixBase<Derived>& v) {
    if (v.size() != s.dim())
        throw DimensionMismatch("quad_form_inv: vector length " + std::to_string(v.size()) +
                                " vs matrix dimension " + std::to_string(s.dim()));
    return quad_form_inv(cholesky(s), v);
}

/// det(S)^{1/2}. Matrices that fail Cholesky are reported as 0.
template <typename Scalar>
Scalar det_sqrt(const SymMatrix<Scalar>& s) {
    try {
        return cholesky(s).lower().diagonal().prod();
    } catch (const NotPositiveDefinite&) {
        return Scalar(0);
    }
}

using SymMatrixd = SymMatrix<double>;
using CholFactord = CholFactor<double>;

}  // namespace sgdbm
