#pragma once

#include <functional>
#include <vector>

#include "tgl/solvers.hpp"

namespace tgl::detail {

/// f(W) = ‖Y − XW‖² + ridge·‖W‖² + temporal·tr(W G Wᵀ), G = RᵀR.
struct SmoothProblem
{
    const DenseMatrix& x;
    const DenseMatrix& y;
    double ridge = 0.0;
    double temporal = 0.0;
    DenseMatrix temporal_gram; // T x T; may be empty when temporal == 0
    double lipschitz = 0.0;    // estimate of the gradient's Lipschitz constant
};

/// g(W) and its proximal map prox_{step·g}.
struct NonsmoothTerm
{
    std::function<double(const DenseMatrix&)> value;
    std::function<DenseMatrix(const DenseMatrix&, double step)> prox;
};

struct EngineResult
{
    DenseMatrix w;
    std::vector<double> trajectory;
    int iterations = 0;
    bool converged = false;
};

EngineResult minimize_composite(const SmoothProblem& problem, const NonsmoothTerm& penalty,
                                const SolverConfig& solver);

} // namespace tgl::detail
