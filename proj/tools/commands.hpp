#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tgl/model_selection.hpp"
#include "tgl/simulation.hpp"
#include "tgl/solvers.hpp"

namespace tgl::cli {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.1.0";

// Each cmd_* computes everything first, then writes its primary outputs
// (temp file + rename) and finally manifest.json into out_dir. Human-readable
// summaries go to `log`.

sim::Cohort cmd_simulate(const sim::SimulationConfig& cfg, const fs::path& out_dir, std::ostream& log);

struct CvOptions
{
    // Explicit λ lists; any list left empty is filled from default_grid.
    std::vector<double> lambda1_values;
    std::vector<double> lambda2_values;
    std::vector<double> lambda3_values;
    int grid_size = 5; // values per λ for the default grid
    int k_folds = 5;
    std::uint64_t seed = 42;
    unsigned threads = 1;
    std::optional<std::vector<double>> temporal_weights;
    SolverConfig solver;
};

CvReport cmd_cv(const fs::path& x_path, const fs::path& y_path, const CvOptions& opts, const fs::path& out_dir,
                std::ostream& log);

struct FitOptions
{
    std::string method = "tgl"; // tgl | ridge | ols | lasso | elastic_net | group_lasso
    PenaltyConfig penalty;      // tgl: λ1, λ2, λ3; ridge: λ1; elastic_net: λ1 (L1) and λ2 (squared L2)
    double lambda = 0.0;        // lasso and group_lasso
    std::vector<long> groups;   // group_lasso: one label per feature
    // lasso, elastic_net, group_lasso take one response column; required when Y has several
    std::optional<int> response_column;
    std::optional<fs::path> cv_report; // tgl: take λ from a cv_report.json
    SolverConfig solver;
};

FitResult cmd_fit(const fs::path& x_path, const fs::path& y_path, const FitOptions& opts, const fs::path& out_dir,
                  std::ostream& log);

DenseMatrix cmd_predict(const fs::path& model_path, const fs::path& x_path, const fs::path& out_dir,
                        std::ostream& log);

EvaluationMetrics cmd_evaluate(const fs::path& model_path, const fs::path& x_path, const fs::path& y_path,
                               const fs::path& out_dir, std::ostream& log);

/// Box-plot summary of one sample. Quartiles interpolate linearly between
/// order statistics at position (n − 1)·p. Whiskers reach the most extreme
/// values within 1.5·IQR of the quartiles; anything beyond is an outlier.
struct BoxStats
{
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double lower_whisker = 0.0;
    double upper_whisker = 0.0;
    std::vector<double> outliers; // ascending
};

double quantile(const std::vector<double>& sorted, double p);
BoxStats box_stats(std::vector<double> values);

struct BoxplotRow
{
    double hour = 0.0;
    std::string series; // "E" (observed effect) or "P" (prediction)
    BoxStats stats;
};

std::string boxplot_to_csv(const std::vector<BoxplotRow>& rows);

std::vector<BoxplotRow> cmd_report_boxplot(const fs::path& model_path, const fs::path& x_path,
                                           const fs::path& y_path, const fs::path& out_dir, std::ostream& log);

/// Full command-line entry point; returns the process exit code.
///   0 success, 1 bad input, 2 numerical failure, 3 escalated warning,
///   other values come from argument parsing.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace tgl::cli
