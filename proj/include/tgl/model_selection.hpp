#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tgl/solvers.hpp"

namespace tgl {

struct CvGrid
{
    std::vector<double> lambda1_values;
    std::vector<double> lambda2_values;
    std::vector<double> lambda3_values;
    int k_folds = 5;
    std::uint64_t seed = 42;
    std::optional<std::vector<double>> temporal_weights;

    std::size_t size() const noexcept
    {
        return lambda1_values.size() * lambda2_values.size() * lambda3_values.size();
    }

    void validate(Index n_patients) const;
};

/// `count` values from lo to hi, evenly spaced in log10.
std::vector<double> log_spaced(double lo, double hi, int count);

/**
 * `values_per_lambda` log-spaced values over [1e-3, 1e2]·scale for each λ,
 * where scale = max |X̃ᵀỸ| on the standardized data.
 */
CvGrid default_grid(const LongitudinalDataset& data, int values_per_lambda = 5, int k_folds = 5,
                    std::uint64_t seed = 42);

/// Fold id (0..k-1) for each patient index. Depends only on (n, k, seed);
/// fold sizes differ by at most one.
std::vector<int> kfold_split(Index n, int k, std::uint64_t seed);

struct CvCell
{
    std::size_t i1 = 0, i2 = 0, i3 = 0;
    PenaltyConfig config;
    std::vector<double> fold_rmse;
    double mean_rmse = 0.0;
    double se_rmse = 0.0;
    int converged_folds = 0;
    bool valid = false; // every fold converged
};

struct CvReport
{
    CvGrid grid;
    std::vector<CvCell> cells; // λ1-major, then λ2, then λ3
    std::size_t best_index = 0;
    PenaltyConfig best_config;
    std::vector<int> fold_assignments;

    const CvCell& cell(std::size_t i1, std::size_t i2, std::size_t i3) const;
    const CvCell& best() const { return cells.at(best_index); }
};

/**
 * Fits fit_tgl for every grid cell on k-1 folds and scores the held-out
 * fold by RMSE averaged over time points. The best cell has the smallest
 * mean CV RMSE; ties go to the largest λ3, then λ2, then λ1. Cells with a
 * non-converged fold are reported but excluded from selection.
 *
 * `threads` > 1 evaluates (cell, fold) jobs concurrently; the report does
 * not depend on the thread count.
 */
CvReport grid_search_cv(const LongitudinalDataset& data, const CvGrid& grid,
                        const SolverConfig& solver = {}, unsigned threads = 1);

std::string cv_report_to_json(const CvReport& report);
std::string cv_report_to_csv(const CvReport& report);

struct EvaluationMetrics
{
    std::vector<double> time_labels;
    std::vector<double> rmse;
    std::vector<double> r2;
    std::vector<double> mean; // test-response mean per time point
    std::vector<double> sd;   // test-response sample sd per time point
};

/// R² uses the evaluation set's own per-time-point mean.
EvaluationMetrics evaluate_predictions(const DenseMatrix& predictions, const DenseMatrix& y,
                                       const std::vector<double>& time_labels);
EvaluationMetrics evaluate(const FitResult& model, const LongitudinalDataset& test);

std::string metrics_to_csv(const EvaluationMetrics& metrics);

} // namespace tgl
