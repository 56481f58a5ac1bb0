#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "oracles.hpp"
#include "tgl/csv.hpp"
#include "tgl/log.hpp"
#include "tgl/model_selection.hpp"

using namespace tgl;

namespace {

LongitudinalDataset sparse_problem(std::uint64_t seed, Index n, Index d, Index t, double noise)
{
    Xoshiro256 rng(seed);
    const DenseMatrix x = oracle::random_matrix(rng, n, d);
    DenseMatrix y(n, t);
    for (Index c = 0; c < t; ++c) {
        y.col(c) = (1.0 + 0.2 * static_cast<double>(c)) * x.col(0) - 0.7 * x.col(1);
    }
    y += noise * oracle::random_matrix(rng, n, t);
    return make_dataset(x, y);
}

std::vector<int> fold_sizes(const std::vector<int>& folds, int k)
{
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int f : folds) ++sizes[static_cast<std::size_t>(f)];
    return sizes;
}

} // namespace

TEST_CASE("kfold_split sizes, determinism and errors")
{
    CHECK(fold_sizes(kfold_split(4, 2, 1), 2) == std::vector<int>{2, 2});
    auto sizes = fold_sizes(kfold_split(5, 2, 1), 2);
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<int>{2, 3});

    CHECK(kfold_split(350, 5, 42) == kfold_split(350, 5, 42));
    CHECK(kfold_split(350, 5, 42) != kfold_split(350, 5, 43));

    for (Index n : {7, 50, 351}) {
        for (int k : {2, 3, 5, 7}) {
            const auto s = fold_sizes(kfold_split(n, k, 9), k);
            CHECK(*std::max_element(s.begin(), s.end()) - *std::min_element(s.begin(), s.end()) <= 1);
        }
    }
    CHECK_THROWS_AS(kfold_split(5, 1, 0), InputError);
    CHECK_THROWS_AS(kfold_split(5, 6, 0), InputError);
}

TEST_CASE("log_spaced and default grid")
{
    const auto v = log_spaced(1e-2, 1e2, 5);
    REQUIRE(v.size() == 5);
    CHECK(v[0] == doctest::Approx(1e-2));
    CHECK(v[2] == doctest::Approx(1.0));
    CHECK(v[4] == doctest::Approx(1e2));
    CHECK_THROWS_AS(log_spaced(0.0, 1.0, 3), InputError);

    const auto data = sparse_problem(1, 30, 5, 3, 0.1);
    const CvGrid grid = default_grid(data);
    const double scale = (oracle::standardized(data.x).transpose() * oracle::centered(data.y)).cwiseAbs().maxCoeff();
    REQUIRE(grid.lambda3_values.size() == 5);
    CHECK(grid.lambda3_values.front() == doctest::Approx(1e-3 * scale));
    CHECK(grid.lambda3_values.back() == doctest::Approx(1e2 * scale));
    CHECK(grid.lambda1_values == grid.lambda3_values);
    CHECK(grid.k_folds == 5);
    CHECK(grid.size() == 125);
}

TEST_CASE("grid validation")
{
    CvGrid grid{{1.0}, {1.0}, {1.0}, 5, 42, std::nullopt};
    CHECK_NOTHROW(grid.validate(10));
    CHECK_THROWS_AS(grid.validate(4), InputError);
    grid.lambda2_values = {2.0, 1.0};
    CHECK_THROWS_AS(grid.validate(10), InputError);
    grid.lambda2_values = {};
    CHECK_THROWS_AS(grid.validate(10), InputError);
    grid.lambda2_values = {-1.0};
    CHECK_THROWS_AS(grid.validate(10), InputError);
}

TEST_CASE("singleton grid")
{
    const auto data = sparse_problem(2, 30, 6, 3, 0.3);
    const CvGrid grid{{0.5}, {1.0}, {2.0}, 3, 7, std::nullopt};
    const CvReport report = grid_search_cv(data, grid);
    REQUIRE(report.cells.size() == 1);
    CHECK(report.best_index == 0);
    CHECK(report.best_config.lambda3 == 2.0);
    CHECK(report.best().fold_rmse.size() == 3);
    CHECK(report.best().converged_folds == 3);
    CHECK(report.fold_assignments == kfold_split(30, 3, 7));

    // Mean RMSE recomputed by hand from the fold assignment.
    double total = 0.0;
    for (int f = 0; f < 3; ++f) {
        std::vector<Index> train, valid;
        for (Index i = 0; i < 30; ++i) (report.fold_assignments[static_cast<std::size_t>(i)] == f ? valid : train).push_back(i);
        const FitResult fit = fit_tgl(take_rows(data, train), PenaltyConfig{0.5, 1.0, 2.0, std::nullopt});
        const auto held = take_rows(data, valid);
        const DenseMatrix err = predict(fit, held.x) - held.y;
        double per_time = 0.0;
        for (Index t = 0; t < 3; ++t) per_time += std::sqrt(err.col(t).squaredNorm() / static_cast<double>(valid.size()));
        total += per_time / 3.0;
    }
    CHECK(report.best().mean_rmse == doctest::Approx(total / 3.0).epsilon(1e-12));
}

TEST_CASE("sparsity helps on a sparse signal")
{
    const auto data = sparse_problem(3, 60, 40, 4, 0.5);
    const CvGrid grid{{0.01}, {0.01}, {0.0, 1.0, 5.0, 20.0, 80.0}, 5, 42, std::nullopt};
    const CvReport report = grid_search_cv(data, grid);
    CHECK(report.best_config.lambda3 > 0.0);
    CHECK(report.best().mean_rmse < report.cell(0, 0, 0).mean_rmse);
}

TEST_CASE("ties resolve toward the largest penalties")
{
    const auto data = sparse_problem(4, 30, 5, 2, 0.3);
    // Both cells annihilate W, so their CV errors coincide exactly.
    CvReport report = grid_search_cv(data, CvGrid{{0.1}, {0.1}, {1e8, 1e9}, 3, 1, std::nullopt});
    CHECK(report.cells[0].mean_rmse == report.cells[1].mean_rmse);
    CHECK(report.best_config.lambda3 == 1e9);

    report = grid_search_cv(data, CvGrid{{0.1, 0.2}, {0.1}, {1e9}, 3, 1, std::nullopt});
    CHECK(report.best_config.lambda1 == 0.2);

    // Duplicated values give identical cells and a deterministic winner.
    const CvGrid dup{{0.1}, {0.1}, {2.0, 2.0}, 3, 1, std::nullopt};
    const CvReport a = grid_search_cv(data, dup);
    CHECK(a.cells[0].mean_rmse == a.cells[1].mean_rmse);
    CHECK(a.best_index == grid_search_cv(data, dup).best_index);
}

TEST_CASE("cells with unconverged folds are excluded")
{
    set_quiet(true);
    const auto data = sparse_problem(5, 40, 8, 3, 0.3);
    SolverConfig s;
    s.max_iters = 2;
    const CvReport report = grid_search_cv(data, CvGrid{{0.01}, {0.01}, {1e-3, 1e9}, 4, 1, std::nullopt}, s);
    CHECK_FALSE(report.cells[0].valid);
    CHECK(report.cells[1].valid);
    CHECK(report.best_index == 1);
    s.max_iters = 1;
    CHECK_THROWS_AS(grid_search_cv(data, CvGrid{{0.01}, {0.01}, {1e-3}, 4, 1, std::nullopt}, s), SolverError);
    set_quiet(false);
}

TEST_CASE("thread count does not change the report")
{
    const auto data = sparse_problem(6, 40, 10, 3, 0.4);
    const CvGrid grid{{0.01, 1.0}, {0.01, 1.0}, {0.5, 5.0, 50.0}, 4, 3, std::nullopt};
    const CvReport serial = grid_search_cv(data, grid, {}, 1);
    const CvReport parallel = grid_search_cv(data, grid, {}, 3);
    CHECK(cv_report_to_json(serial) == cv_report_to_json(parallel));
    CHECK(cv_report_to_csv(serial) == cv_report_to_csv(parallel));
}

TEST_CASE("fold membership, not row order, determines the result")
{
    const auto data = sparse_problem(7, 30, 6, 3, 0.4);
    const CvGrid grid{{0.1}, {0.5}, {0.5, 5.0}, 3, 11, std::nullopt};
    const CvReport base = grid_search_cv(data, grid);

    // Permute rows among positions that share a fold: every fold keeps its patients.
    std::vector<Index> order(30);
    std::iota(order.begin(), order.end(), Index{0});
    for (int f = 0; f < 3; ++f) {
        std::vector<Index> members;
        for (Index i = 0; i < 30; ++i) if (base.fold_assignments[static_cast<std::size_t>(i)] == f) members.push_back(i);
        std::vector<Index> shuffled = members;
        std::reverse(shuffled.begin(), shuffled.end());
        for (std::size_t m = 0; m < members.size(); ++m) order[static_cast<std::size_t>(members[m])] = shuffled[m];
    }
    const CvReport permuted = grid_search_cv(take_rows(data, order), grid);
    CHECK(permuted.fold_assignments == base.fold_assignments);
    for (std::size_t c = 0; c < base.cells.size(); ++c) {
        CHECK(permuted.cells[c].mean_rmse == doctest::Approx(base.cells[c].mean_rmse).epsilon(1e-9));
    }
    CHECK(permuted.best_index == base.best_index);
}

TEST_CASE("report serialization")
{
    const auto data = sparse_problem(8, 30, 5, 2, 0.3);
    const CvGrid grid{{0.1, 1.0}, {0.5}, {0.5, 5.0, 50.0}, 3, 2, std::nullopt};
    const CvReport report = grid_search_cv(data, grid);
    const auto doc = nlohmann::json::parse(cv_report_to_json(report));
    CHECK(doc["mean_rmse"].size() == 2);
    CHECK(doc["mean_rmse"][0].size() == 1);
    CHECK(doc["mean_rmse"][0][0].size() == 3);
    CHECK(doc["mean_rmse"][1][0][2].get<double>() == report.cell(1, 0, 2).mean_rmse);
    CHECK(doc["best_config"]["lambda3"].get<double>() == report.best_config.lambda3);

    const auto table = csv::parse_table(cv_report_to_csv(report));
    CHECK(table.header == std::vector<std::string>{"lambda1", "lambda2", "lambda3", "mean_rmse", "se_rmse", "converged_folds"});
    CHECK(table.values.rows() == 6);
    CHECK(table.values(4, 0) == 1.0);
    CHECK(table.values(4, 2) == 5.0);
}

TEST_CASE("evaluation metrics")
{
    Xoshiro256 rng(9);
    const DenseMatrix y = oracle::random_matrix(rng, 20, 4);
    const std::vector<double> hours{5, 10, 15, 20};

    const auto perfect = evaluate_predictions(y, y, hours);
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(perfect.rmse[t] == 0.0);
        CHECK(perfect.r2[t] == 1.0);
    }

    DenseMatrix means(20, 4);
    for (Index t = 0; t < 4; ++t) means.col(t).setConstant(y.col(t).mean());
    for (double r2 : evaluate_predictions(means, y, hours).r2) CHECK(std::abs(r2) < 1e-14);

    // Independent recomputation with plain loops.
    const DenseMatrix pred = y + 0.3 * oracle::random_matrix(rng, 20, 4);
    const auto m = evaluate_predictions(pred, y, hours);
    for (Index t = 0; t < 4; ++t) {
        double mean = 0.0;
        for (Index i = 0; i < 20; ++i) mean += y(i, t);
        mean /= 20.0;
        double sse = 0.0, sst = 0.0;
        for (Index i = 0; i < 20; ++i) {
            sse += (y(i, t) - pred(i, t)) * (y(i, t) - pred(i, t));
            sst += (y(i, t) - mean) * (y(i, t) - mean);
        }
        const auto k = static_cast<std::size_t>(t);
        CHECK(std::abs(m.rmse[k] - std::sqrt(sse / 20.0)) < 1e-12);
        CHECK(std::abs(m.r2[k] - (1.0 - sse / sst)) < 1e-12);
        CHECK(std::abs(m.mean[k] - mean) < 1e-12);
        CHECK(std::abs(m.sd[k] - std::sqrt(sst / 19.0)) < 1e-12);
        CHECK(m.rmse[k] >= 0.0);
        CHECK(m.r2[k] <= 1.0);
    }

    // Shifting responses and predictions together leaves R² unchanged.
    const auto shifted = evaluate_predictions(pred.array() + 4.0, y.array() + 4.0, hours);
    for (std::size_t t = 0; t < 4; ++t) CHECK(shifted.r2[t] == doctest::Approx(m.r2[t]).epsilon(1e-12));

    CHECK_THROWS_AS(evaluate_predictions(pred.leftCols(3), y, hours), InputError);

    const auto table = csv::parse_table(metrics_to_csv(m));
    CHECK(table.header == std::vector<std::string>{"hour", "mean", "sd", "rmse", "r2"});
    CHECK(table.values.rows() == 4);
    CHECK(table.values(3, 0) == 20.0);
    CHECK(table.values(1, 4) == m.r2[1]);
}

TEST_CASE("evaluate checks model dimensions")
{
    const auto data = sparse_problem(10, 30, 5, 3, 0.2);
    const FitResult fit = fit_tgl(data, PenaltyConfig{0.1, 0.1, 0.1, std::nullopt});
    CHECK(evaluate(fit, data).r2[0] > 0.5);
    const auto other = sparse_problem(10, 30, 5, 2, 0.2);
    CHECK_THROWS_AS(evaluate(fit, other), InputError);
}
