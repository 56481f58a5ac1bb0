#include "tgl/model_selection.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "tgl/csv.hpp"
#include "tgl/log.hpp"

namespace tgl {

using nlohmann::json;

namespace {

void check_values(const std::vector<double>& values, const char* name)
{
    if (values.empty()) {
        throw InputError(std::string("cv grid: ") + name + " is empty");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
            throw InputError(std::string("cv grid: ") + name + " values must be finite and >= 0");
        }
        if (i > 0 && values[i] < values[i - 1]) {
            throw InputError(std::string("cv grid: ") + name + " must be ascending");
        }
    }
}

double mean_column_rmse(const DenseMatrix& predictions, const DenseMatrix& y)
{
    const DenseMatrix err = predictions - y;
    const double n = static_cast<double>(err.rows());
    double total = 0.0;
    for (Index t = 0; t < err.cols(); ++t) {
        total += std::sqrt(err.col(t).squaredNorm() / n);
    }
    return total / static_cast<double>(err.cols());
}

json nan_to_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

} // namespace

void CvGrid::validate(Index n_patients) const
{
    check_values(lambda1_values, "lambda1_values");
    check_values(lambda2_values, "lambda2_values");
    check_values(lambda3_values, "lambda3_values");
    if (k_folds < 2 || k_folds > n_patients) {
        throw InputError("cv grid: k_folds must be between 2 and the number of patients ("
                         + std::to_string(n_patients) + "), got " + std::to_string(k_folds));
    }
}

std::vector<double> log_spaced(double lo, double hi, int count)
{
    if (count < 1 || !(lo > 0.0) || !(hi >= lo)) {
        throw InputError("log_spaced: need count >= 1 and 0 < lo <= hi");
    }
    if (count == 1) {
        return {lo};
    }
    std::vector<double> out(static_cast<std::size_t>(count));
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (int i = 0; i < count; ++i) {
        out[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
    }
    return out;
}

CvGrid default_grid(const LongitudinalDataset& data, int values_per_lambda, int k_folds, std::uint64_t seed)
{
    const auto [prep, params] = standardize(data);
    const double scale = std::max((prep.x.transpose() * prep.y).cwiseAbs().maxCoeff(), 1e-12);
    CvGrid grid;
    grid.lambda1_values = log_spaced(1e-3 * scale, 1e2 * scale, values_per_lambda);
    grid.lambda2_values = grid.lambda1_values;
    grid.lambda3_values = grid.lambda1_values;
    grid.k_folds = k_folds;
    grid.seed = seed;
    return grid;
}

std::vector<int> kfold_split(Index n, int k, std::uint64_t seed)
{
    if (k < 2 || k > n) {
        throw InputError("kfold_split: k must satisfy 2 <= k <= n (k=" + std::to_string(k)
                         + ", n=" + std::to_string(n) + ")");
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Xoshiro256 rng(seed);
    rng.shuffle(std::span<Index>(order));
    std::vector<int> folds(static_cast<std::size_t>(n));
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        folds[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos % static_cast<std::size_t>(k));
    }
    return folds;
}

const CvCell& CvReport::cell(std::size_t i1, std::size_t i2, std::size_t i3) const
{
    const std::size_t n2 = grid.lambda2_values.size();
    const std::size_t n3 = grid.lambda3_values.size();
    return cells.at((i1 * n2 + i2) * n3 + i3);
}

CvReport grid_search_cv(const LongitudinalDataset& data, const CvGrid& grid, const SolverConfig& solver,
                        unsigned threads)
{
    data.validate();
    grid.validate(data.n_patients());
    solver.validate();

    CvReport report;
    report.grid = grid;
    report.fold_assignments = kfold_split(data.n_patients(), grid.k_folds, grid.seed);

    const auto k = static_cast<std::size_t>(grid.k_folds);
    std::vector<LongitudinalDataset> train_sets;
    std::vector<LongitudinalDataset> valid_sets;
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<Index> train_rows;
        std::vector<Index> valid_rows;
        for (std::size_t i = 0; i < report.fold_assignments.size(); ++i) {
            (static_cast<std::size_t>(report.fold_assignments[i]) == f ? valid_rows : train_rows)
                .push_back(static_cast<Index>(i));
        }
        train_sets.push_back(take_rows(data, train_rows));
        valid_sets.push_back(take_rows(data, valid_rows));
    }

    for (std::size_t i1 = 0; i1 < grid.lambda1_values.size(); ++i1) {
        for (std::size_t i2 = 0; i2 < grid.lambda2_values.size(); ++i2) {
            for (std::size_t i3 = 0; i3 < grid.lambda3_values.size(); ++i3) {
                CvCell cell;
                cell.i1 = i1;
                cell.i2 = i2;
                cell.i3 = i3;
                cell.config.lambda1 = grid.lambda1_values[i1];
                cell.config.lambda2 = grid.lambda2_values[i2];
                cell.config.lambda3 = grid.lambda3_values[i3];
                cell.config.temporal_weights = grid.temporal_weights;
                cell.fold_rmse.assign(k, std::numeric_limits<double>::quiet_NaN());
                report.cells.push_back(std::move(cell));
            }
        }
    }

    const std::size_t jobs = report.cells.size() * k;
    std::vector<char> fold_ok(jobs, 0);
    std::atomic<std::size_t> next{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t job = next++; job < jobs; job = next++) {
            const std::size_t c = job / k;
            const std::size_t f = job % k;
            CvCell& cell = report.cells[c];
            try {
                const FitResult fit = fit_tgl(train_sets[f], cell.config, solver);
                cell.fold_rmse[f] = mean_column_rmse(predict(fit, valid_sets[f].x), valid_sets[f].y);
                fold_ok[job] = fit.converged ? 1 : 0;
            } catch (const SolverError&) {
                fold_ok[job] = 0;
            } catch (...) {
                // Anything else aborts the search; drain the queue and rethrow on the caller.
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = jobs;
            }
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs)));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < n_threads; ++i) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    std::optional<std::size_t> best;
    for (std::size_t c = 0; c < report.cells.size(); ++c) {
        CvCell& cell = report.cells[c];
        double sum = 0.0;
        for (std::size_t f = 0; f < k; ++f) {
            cell.converged_folds += fold_ok[c * k + f];
            sum += cell.fold_rmse[f];
        }
        cell.mean_rmse = sum / static_cast<double>(k);
        double ss = 0.0;
        for (double v : cell.fold_rmse) ss += (v - cell.mean_rmse) * (v - cell.mean_rmse);
        cell.se_rmse = std::sqrt(ss / static_cast<double>(k - 1)) / std::sqrt(static_cast<double>(k));
        cell.valid = cell.converged_folds == grid.k_folds && std::isfinite(cell.mean_rmse);
        if (!cell.valid) {
            warn("cv cell (lambda1=" + csv::format_double(cell.config.lambda1)
                 + ", lambda2=" + csv::format_double(cell.config.lambda2)
                 + ", lambda3=" + csv::format_double(cell.config.lambda3) + ") did not converge on "
                 + std::to_string(grid.k_folds - cell.converged_folds) + " fold(s); excluded");
            continue;
        }
        if (!best) {
            best = c;
            continue;
        }
        const CvCell& incumbent = report.cells[*best];
        const auto key = [](const CvCell& x) {
            return std::make_tuple(x.config.lambda3, x.config.lambda2, x.config.lambda1);
        };
        if (cell.mean_rmse < incumbent.mean_rmse
            || (cell.mean_rmse == incumbent.mean_rmse && key(cell) > key(incumbent))) {
            best = c;
        }
    }
    if (!best) {
        throw SolverError("cross-validation: no grid cell converged on every fold");
    }
    report.best_index = *best;
    report.best_config = report.cells[*best].config;
    return report;
}

std::string cv_report_to_json(const CvReport& report)
{
    const auto& g = report.grid;
    json mean = json::array();
    json se = json::array();
    json converged = json::array();
    for (std::size_t i1 = 0; i1 < g.lambda1_values.size(); ++i1) {
        json m1 = json::array(), s1 = json::array(), c1 = json::array();
        for (std::size_t i2 = 0; i2 < g.lambda2_values.size(); ++i2) {
            json m2 = json::array(), s2 = json::array(), c2 = json::array();
            for (std::size_t i3 = 0; i3 < g.lambda3_values.size(); ++i3) {
                const CvCell& cell = report.cell(i1, i2, i3);
                m2.push_back(nan_to_null(cell.mean_rmse));
                s2.push_back(nan_to_null(cell.se_rmse));
                c2.push_back(cell.converged_folds);
            }
            m1.push_back(m2);
            s1.push_back(s2);
            c1.push_back(c2);
        }
        mean.push_back(m1);
        se.push_back(s1);
        converged.push_back(c1);
    }
    const auto& best = report.best_config;
    json doc{{"lambda1_values", g.lambda1_values},
             {"lambda2_values", g.lambda2_values},
             {"lambda3_values", g.lambda3_values},
             {"k_folds", g.k_folds},
             {"seed", g.seed},
             {"mean_rmse", mean},
             {"se_rmse", se},
             {"converged_folds", converged},
             {"best_config", {{"lambda1", best.lambda1}, {"lambda2", best.lambda2}, {"lambda3", best.lambda3}}},
             {"best_mean_rmse", report.best().mean_rmse},
             {"fold_assignments", report.fold_assignments}};
    if (g.temporal_weights) {
        doc["temporal_weights"] = *g.temporal_weights;
    }
    return doc.dump(2) + "\n";
}

std::string cv_report_to_csv(const CvReport& report)
{
    std::string out = "lambda1,lambda2,lambda3,mean_rmse,se_rmse,converged_folds\n";
    for (const auto& cell : report.cells) {
        out += csv::format_double(cell.config.lambda1) + ',' + csv::format_double(cell.config.lambda2) + ','
             + csv::format_double(cell.config.lambda3) + ',' + csv::format_double(cell.mean_rmse) + ','
             + csv::format_double(cell.se_rmse) + ',' + std::to_string(cell.converged_folds) + '\n';
    }
    return out;
}

EvaluationMetrics evaluate_predictions(const DenseMatrix& predictions, const DenseMatrix& y,
                                       const std::vector<double>& time_labels)
{
    if (predictions.rows() != y.rows() || predictions.cols() != y.cols()
        || static_cast<Index>(time_labels.size()) != y.cols()) {
        throw InputError("evaluate: predictions " + shape_string(predictions.rows(), predictions.cols())
                         + " do not match responses " + shape_string(y.rows(), y.cols()));
    }
    if (y.rows() < 2) {
        throw InputError("evaluate: need at least 2 test patients");
    }
    EvaluationMetrics m;
    m.time_labels = time_labels;
    const double n = static_cast<double>(y.rows());
    for (Index t = 0; t < y.cols(); ++t) {
        const auto col = y.col(t);
        const double mean = col.mean();
        const double sst = (col.array() - mean).square().sum();
        const double sse = (col - predictions.col(t)).squaredNorm();
        m.mean.push_back(mean);
        m.sd.push_back(std::sqrt(sst / (n - 1.0)));
        m.rmse.push_back(std::sqrt(sse / n));
        m.r2.push_back(sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity()));
    }
    return m;
}

EvaluationMetrics evaluate(const FitResult& model, const LongitudinalDataset& test)
{
    test.validate();
    if (test.n_times() != model.n_times()) {
        throw InputError("evaluate: model predicts " + std::to_string(model.n_times())
                         + " time points, test set has " + std::to_string(test.n_times()));
    }
    return evaluate_predictions(predict(model, test.x), test.y, test.time_labels);
}

std::string metrics_to_csv(const EvaluationMetrics& m)
{
    std::string out = "hour,mean,sd,rmse,r2\n";
    for (std::size_t t = 0; t < m.rmse.size(); ++t) {
        out += csv::format_double(m.time_labels[t]) + ',' + csv::format_double(m.mean[t]) + ','
             + csv::format_double(m.sd[t]) + ',' + csv::format_double(m.rmse[t]) + ','
             + csv::format_double(m.r2[t]) + '\n';
    }
    return out;
}

} // namespace tgl
