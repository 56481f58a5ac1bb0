#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tgl/dataset.hpp"
#include "tgl/penalties.hpp"

namespace tgl {

struct SolverConfig
{
    int max_iters = 5000;
    double rel_tol = 1e-7;              // on |f_k − f_{k−1}| / max(1, |f_k|)
    double backtracking_factor = 0.5;
    std::optional<double> initial_step; // default: 1 / Lipschitz estimate
    bool use_acceleration = true;
    bool restart_on_increase = true;
    std::uint64_t seed = 42;            // power-iteration start vector
    Scaling scaling = Scaling::standardize;

    void validate() const;
};

struct FitResult
{
    std::string method;
    DenseMatrix w;            // d x T, on the preprocessed (standardized) scale
    DenseVector intercepts;   // T, added to X̃W at prediction time
    StandardizationParams standardization;
    std::vector<double> objective_trajectory;
    int iterations_used = 0;
    bool converged = false;
    bool redirected_to_ols = false;
    PenaltyConfig penalty;
    SolverConfig solver;
    std::vector<std::string> feature_names;
    std::vector<double> time_labels;

    Index n_features() const noexcept { return w.rows(); }
    Index n_times() const noexcept { return w.cols(); }
    double final_objective() const { return objective_trajectory.empty() ? 0.0 : objective_trajectory.back(); }
};

/// A partition of the predictor indices 0..d-1 into disjoint nonempty groups.
struct GroupSpec
{
    std::vector<std::vector<Index>> groups;

    /// Group id per feature; ids need not be contiguous.
    static GroupSpec from_labels(const std::vector<long>& labels);
    static GroupSpec singletons(Index d);

    /// Throws InputError listing missing and duplicated indices.
    void validate(Index d) const;
};

/**
 * Temporal Group LASSO: minimizes
 *   ‖Y − XW‖_F² + λ1‖W‖_F² + λ2‖R Wᵀ‖_F² + λ3‖W‖_{2,1}
 * on preprocessed data by FISTA with backtracking and function-value
 * restart, starting from W = 0.
 *
 * With every λ zero and d > n the problem has no unique minimizer; the fit
 * is delegated to fit_ols (minimum-norm) and flagged via redirected_to_ols.
 */
FitResult fit_tgl(const LongitudinalDataset& data, const PenaltyConfig& cfg,
                  const SolverConfig& solver = {});

/// Least squares through an SVD pseudoinverse (σ < 1e-10·σ_max truncated).
FitResult fit_ols(const LongitudinalDataset& data, Scaling scaling = Scaling::standardize);

/// (XᵀX + λ1 I)⁻¹ XᵀY by Cholesky. Requires λ1 > 0.
FitResult fit_ridge(const LongitudinalDataset& data, double lambda1,
                    Scaling scaling = Scaling::standardize);

/// Single response column: ‖y − Xw‖² + λ‖w‖₁.
FitResult fit_lasso(const LongitudinalDataset& data, double lambda, const SolverConfig& solver = {});

/// Single response column: ‖y − Xw‖² + λ1‖w‖₁ + λ2‖w‖₂² (λ1 on the L1 term).
FitResult fit_elastic_net(const LongitudinalDataset& data, double lambda1, double lambda2,
                          const SolverConfig& solver = {});

/// Single response column: ‖y − Xw‖² + λ Σ_g ‖w_g‖₂.
FitResult fit_group_lasso(const LongitudinalDataset& data, const GroupSpec& groups, double lambda,
                          const SolverConfig& solver = {});

/// Raw-scale predictions: standardize x_new with the stored params, X̃W + intercepts.
DenseMatrix predict(const FitResult& model, const DenseMatrix& x_new);

/// Indices whose coefficient row has ‖Wᵢ,·‖₂ > eps, ascending.
std::vector<Index> selected_features(const FitResult& model, double eps = 1e-8);

/// Coefficients and intercepts expressed for raw (unstandardized) inputs.
struct RawCoefficients
{
    DenseMatrix w;
    DenseVector intercepts;
};
RawCoefficients raw_coefficients(const FitResult& model);

} // namespace tgl
