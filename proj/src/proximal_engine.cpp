#include "proximal_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tgl::detail {

namespace {

struct SmoothEval
{
    const SmoothProblem& p;

    /// Value from W and its precomputed product XW.
    double value(const DenseMatrix& w, const DenseMatrix& xw) const
    {
        double f = (xw - p.y).squaredNorm();
        if (p.ridge != 0.0) {
            f += p.ridge * w.squaredNorm();
        }
        if (p.temporal != 0.0) {
            f += p.temporal * (w * p.temporal_gram).cwiseProduct(w).sum();
        }
        return f;
    }

    DenseMatrix gradient(const DenseMatrix& w, const DenseMatrix& xw) const
    {
        DenseMatrix grad = 2.0 * (p.x.transpose() * (xw - p.y));
        if (p.ridge != 0.0) {
            grad += (2.0 * p.ridge) * w;
        }
        if (p.temporal != 0.0) {
            grad += (2.0 * p.temporal) * (w * p.temporal_gram);
        }
        return grad;
    }
};

[[noreturn]] void diverged(double step)
{
    throw SolverError("proximal gradient diverged (non-finite objective at step size "
                      + std::to_string(step) + "); try a smaller initial_step");
}

} // namespace

EngineResult minimize_composite(const SmoothProblem& problem, const NonsmoothTerm& penalty,
                                const SolverConfig& solver)
{
    const SmoothEval smooth{problem};
    const Index d = problem.x.cols();
    const Index t = problem.y.cols();

    double step = solver.initial_step.value_or(
        problem.lipschitz > 0.0 ? 1.0 / problem.lipschitz : 1.0);

    EngineResult result;
    DenseMatrix w = DenseMatrix::Zero(d, t);
    DenseMatrix xw = DenseMatrix::Zero(problem.x.rows(), t);
    DenseMatrix z = w;
    DenseMatrix xz = xw;
    double momentum = 1.0;
    double f_prev = smooth.value(w, xw) + penalty.value(w);
    result.trajectory.push_back(f_prev);

    for (int k = 1; k <= solver.max_iters; ++k) {
        result.iterations = k;
        const double fz = smooth.value(z, xz);
        const DenseMatrix grad = smooth.gradient(z, xz);

        DenseMatrix w_next;
        DenseMatrix xw_next;
        double f_next_smooth = 0.0;
        while (true) {
            w_next = penalty.prox(z - step * grad, step);
            xw_next.noalias() = problem.x * w_next;
            f_next_smooth = smooth.value(w_next, xw_next);
            if (!std::isfinite(f_next_smooth)) {
                diverged(step);
            }
            const DenseMatrix diff = w_next - z;
            const double model = fz + grad.cwiseProduct(diff).sum() + diff.squaredNorm() / (2.0 * step);
            if (f_next_smooth <= model + 1e-12 * std::max(1.0, std::abs(fz))) {
                break;
            }
            step *= solver.backtracking_factor;
            if (!(step > std::numeric_limits<double>::min())) {
                diverged(step);
            }
        }

        const double f_next = f_next_smooth + penalty.value(w_next);
        if (!std::isfinite(f_next)) {
            diverged(step);
        }

        if (solver.restart_on_increase && f_next > f_prev) {
            if (momentum == 1.0) {
                // A plain proximal step from W failed to decrease: nothing left
                // to gain at working precision.
                result.converged = true;
                break;
            }
            z = w;
            xz = xw;
            momentum = 1.0;
            continue;
        }

        double beta = 0.0;
        double momentum_next = 1.0;
        if (solver.use_acceleration) {
            momentum_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
            beta = (momentum - 1.0) / momentum_next;
        }
        z = w_next + beta * (w_next - w);
        xz = xw_next + beta * (xw_next - xw);
        w = std::move(w_next);
        xw = std::move(xw_next);
        momentum = momentum_next;

        result.trajectory.push_back(f_next);
        const double rel_change = std::abs(f_next - f_prev) / std::max(1.0, std::abs(f_next));
        f_prev = f_next;
        if (rel_change < solver.rel_tol) {
            result.converged = true;
            break;
        }
    }

    result.w = std::move(w);
    return result;
}

} // namespace tgl::detail
