#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "tgl/matrix.hpp"

namespace tgl {

/**
 * (t-1) x t banded difference operator. Row i holds weights[i] on the
 * diagonal and -weights[i] on the superdiagonal, so ‖R wᵀ‖² sums the
 * squared weighted differences between adjacent time points. The weight
 * multiplies the difference before squaring.
 *
 * t == 1 gives a 0 x 1 operator and the temporal penalty vanishes.
 */
template <class Scalar>
struct TemporalDifferenceOperator
{
    Index t = 0;
    Vector<Scalar> weights;
    Matrix<Scalar> matrix;

    /// Rᵀ R, the t x t tridiagonal weighted path Laplacian.
    Matrix<Scalar> gram() const
    {
        Matrix<Scalar> g = matrix.transpose() * matrix;
        return g;
    }
};

template <class Scalar = double>
TemporalDifferenceOperator<Scalar>
build_difference_operator(Index t, const std::optional<std::vector<double>>& weights = std::nullopt)
{
    if (t < 1) {
        throw InputError("difference operator: need at least one time point");
    }
    TemporalDifferenceOperator<Scalar> op;
    op.t = t;
    op.weights = Vector<Scalar>::Ones(t - 1);
    if (weights) {
        if (static_cast<Index>(weights->size()) != t - 1) {
            throw InputError("difference operator: expected " + std::to_string(t - 1)
                             + " temporal weights, got " + std::to_string(weights->size()));
        }
        for (Index i = 0; i < t - 1; ++i) {
            const double w = (*weights)[static_cast<std::size_t>(i)];
            if (!(w > 0.0) || !std::isfinite(w)) {
                throw InputError("difference operator: temporal weight " + std::to_string(i)
                                 + " must be positive and finite");
            }
            op.weights(i) = static_cast<Scalar>(w);
        }
    }
    op.matrix = Matrix<Scalar>::Zero(t - 1, t);
    for (Index i = 0; i < t - 1; ++i) {
        op.matrix(i, i) = op.weights(i);
        op.matrix(i, i + 1) = -op.weights(i);
    }
    return op;
}

/// λ1 (ridge / Frobenius), λ2 (temporal smoothness), λ3 (row-wise L2,1).
struct PenaltyConfig
{
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double lambda3 = 0.0;
    std::optional<std::vector<double>> temporal_weights;

    void validate() const
    {
        for (double v : {lambda1, lambda2, lambda3}) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw InputError("penalty weights must be finite and >= 0");
            }
        }
    }

    bool all_zero() const noexcept { return lambda1 == 0.0 && lambda2 == 0.0 && lambda3 == 0.0; }
};

/// Σᵢ ‖Wᵢ,·‖₂
template <class Derived>
typename Derived::Scalar l21_norm(const Eigen::MatrixBase<Derived>& w)
{
    return w.rowwise().norm().sum();
}

/// ‖R Wᵀ‖_F²
template <class Derived, class Scalar>
Scalar temporal_penalty(const Eigen::MatrixBase<Derived>& w,
                        const TemporalDifferenceOperator<Scalar>& r)
{
    return (r.matrix * w.transpose()).squaredNorm();
}

namespace detail {

template <class W, class X, class Y, class Scalar>
void check_problem_dims(const char* who, const Eigen::MatrixBase<W>& w, const Eigen::MatrixBase<X>& x,
                        const Eigen::MatrixBase<Y>& y, const TemporalDifferenceOperator<Scalar>& r)
{
    if (x.rows() != y.rows() || x.cols() != w.rows() || y.cols() != w.cols() || r.t != w.cols()) {
        throw InputError(std::string(who) + ": incompatible shapes W " + shape_string(w.rows(), w.cols())
                         + ", X " + shape_string(x.rows(), x.cols()) + ", Y "
                         + shape_string(y.rows(), y.cols()) + ", R built for T=" + std::to_string(r.t));
    }
}

} // namespace detail

/// ‖Y − XW‖_F² + λ1‖W‖_F² + λ2‖R Wᵀ‖_F² + λ3‖W‖_{2,1}
template <class W, class X, class Y, class Scalar>
Scalar objective(const Eigen::MatrixBase<W>& w, const Eigen::MatrixBase<X>& x,
                 const Eigen::MatrixBase<Y>& y, const TemporalDifferenceOperator<Scalar>& r,
                 const PenaltyConfig& cfg)
{
    detail::check_problem_dims("objective", w, x, y, r);
    const Scalar loss = (y - x * w).squaredNorm();
    return loss + Scalar(cfg.lambda1) * w.squaredNorm() + Scalar(cfg.lambda2) * temporal_penalty(w, r)
         + Scalar(cfg.lambda3) * l21_norm(w);
}

/// Gradient of everything but the λ3 term: 2Xᵀ(XW − Y) + 2λ1 W + 2λ2 W RᵀR.
template <class W, class X, class Y, class Scalar>
Matrix<Scalar> smooth_gradient(const Eigen::MatrixBase<W>& w, const Eigen::MatrixBase<X>& x,
                               const Eigen::MatrixBase<Y>& y, const TemporalDifferenceOperator<Scalar>& r,
                               const PenaltyConfig& cfg)
{
    detail::check_problem_dims("smooth_gradient", w, x, y, r);
    Matrix<Scalar> grad = Scalar(2) * (x.transpose() * (x * w - y));
    grad += Scalar(2 * cfg.lambda1) * w;
    if (cfg.lambda2 != 0.0 && r.t > 1) {
        grad += Scalar(2 * cfg.lambda2) * (w * r.gram());
    }
    return grad;
}

/**
 * Row-wise block soft-thresholding: vᵢ ↦ vᵢ·max(0, 1 − τ/‖vᵢ‖₂).
 * The proximal map of τ‖·‖_{2,1}. Rows with norm ≤ τ (including zero rows)
 * become exactly zero.
 */
template <class Derived>
Matrix<typename Derived::Scalar> prox_l21(const Eigen::MatrixBase<Derived>& v,
                                          typename Derived::Scalar threshold)
{
    using Scalar = typename Derived::Scalar;
    if (!(threshold >= Scalar(0)) || !std::isfinite(threshold)) {
        throw InputError("prox_l21: threshold must be finite and >= 0");
    }
    Matrix<Scalar> out = v;
    if (threshold == Scalar(0)) {
        return out;
    }
    for (Index i = 0; i < out.rows(); ++i) {
        const Scalar norm = out.row(i).norm();
        if (norm <= threshold) {
            out.row(i).setZero();
        } else {
            out.row(i) *= Scalar(1) - threshold / norm;
        }
    }
    return out;
}

/// Element-wise soft-thresholding, the proximal map of τ‖·‖₁.
template <class Derived>
Matrix<typename Derived::Scalar> soft_threshold(const Eigen::MatrixBase<Derived>& v,
                                                typename Derived::Scalar threshold)
{
    using Scalar = typename Derived::Scalar;
    Matrix<Scalar> out = v;
    for (Index i = 0; i < out.rows(); ++i) {
        for (Index j = 0; j < out.cols(); ++j) {
            const Scalar a = out(i, j);
            const Scalar mag = std::abs(a) - threshold;
            out(i, j) = mag > Scalar(0) ? std::copysign(mag, a) : Scalar(0);
        }
    }
    return out;
}

} // namespace tgl
