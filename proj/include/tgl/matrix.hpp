#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>

#include "tgl/errors.hpp"
#include "tgl/random.hpp"

namespace tgl {

using Index = Eigen::Index;

template <class Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// Row-major 64-bit dense matrix: the carrier for X, Y, W and R.
using DenseMatrix = Matrix<double>;
using DenseVector = Vector<double>;

inline std::string shape_string(Index rows, Index cols)
{
    return std::to_string(rows) + "x" + std::to_string(cols);
}

/// Matrix product with a dimension check; throws InputError on mismatch.
template <class DerivedA, class DerivedB>
Matrix<typename DerivedA::Scalar> matmul(const Eigen::MatrixBase<DerivedA>& a,
                                         const Eigen::MatrixBase<DerivedB>& b)
{
    if (a.cols() != b.rows()) {
        throw InputError("matmul: cannot multiply " + shape_string(a.rows(), a.cols()) + " by "
                         + shape_string(b.rows(), b.cols()));
    }
    Matrix<typename DerivedA::Scalar> out = a * b;
    return out;
}

template <class Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m)
{
    return m.derived().array().isFinite().all();
}

/**
 * Lower Cholesky factor L with A = L Lᵀ. Only the lower triangle of `a` is
 * read. Throws FactorizationError carrying the first pivot that is not
 * strictly positive.
 */
template <class Derived>
Matrix<typename Derived::Scalar> cholesky_lower(const Eigen::MatrixBase<Derived>& a)
{
    using Scalar = typename Derived::Scalar;
    if (a.rows() != a.cols()) {
        throw InputError("cholesky: matrix must be square, got " + shape_string(a.rows(), a.cols()));
    }
    const Index n = a.rows();
    Matrix<Scalar> lower = Matrix<Scalar>::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
        const Scalar pivot = a(j, j) - lower.row(j).head(j).squaredNorm();
        if (!(pivot > Scalar(0)) || !std::isfinite(pivot)) {
            throw FactorizationError(j);
        }
        const Scalar diag = std::sqrt(pivot);
        lower(j, j) = diag;
        const Index below = n - j - 1;
        if (below > 0) {
            lower.col(j).tail(below) =
                (a.col(j).tail(below)
                 - lower.bottomLeftCorner(below, j) * lower.row(j).head(j).transpose())
                / diag;
        }
    }
    return lower;
}

/// Solves A Z = B for symmetric positive definite A via Cholesky.
template <class DerivedA, class DerivedB>
Matrix<typename DerivedA::Scalar> solve_spd(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b)
{
    if (a.rows() != b.rows()) {
        throw InputError("solve_spd: right-hand side has " + std::to_string(b.rows())
                         + " rows, system has " + std::to_string(a.rows()));
    }
    const auto lower = cholesky_lower(a);
    Matrix<typename DerivedA::Scalar> z = b;
    lower.template triangularView<Eigen::Lower>().solveInPlace(z);
    lower.transpose().template triangularView<Eigen::Upper>().solveInPlace(z);
    return z;
}

/**
 * Power-iteration estimate of the largest squared singular value of `a`.
 *
 * Iterates on aᵀa from a seeded Gaussian start and returns the Rayleigh
 * quotient ‖a v‖² of the final unit vector, so the estimate never exceeds
 * the true value. A zero matrix yields 0.
 */
template <class Derived>
typename Derived::Scalar spectral_norm_sq(const Eigen::MatrixBase<Derived>& a, int iters = 100,
                                          std::uint64_t seed = 42)
{
    using Scalar = typename Derived::Scalar;
    if (iters < 1) {
        throw InputError("spectral_norm_sq: iters must be >= 1");
    }
    if (a.rows() == 0 || a.cols() == 0) {
        return Scalar(0);
    }
    Xoshiro256 rng(seed);
    Vector<Scalar> v(a.cols());
    for (Index i = 0; i < v.size(); ++i) {
        v(i) = static_cast<Scalar>(rng.normal());
    }
    v.normalize();
    for (int k = 0; k < iters; ++k) {
        Vector<Scalar> w = a.transpose() * (a * v);
        const Scalar norm = w.norm();
        if (norm == Scalar(0)) {
            return Scalar(0);
        }
        v = w / norm;
    }
    return (a * v).squaredNorm();
}

} // namespace tgl
