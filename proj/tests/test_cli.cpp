#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "oracles.hpp"
#include "tgl/csv.hpp"
#include "tgl/model_io.hpp"
#include "tgl/penalties.hpp"

using namespace tgl;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir
{
    fs::path path;

    TempDir()
    {
        std::string pattern = (fs::temp_directory_path() / "tgl_cli_XXXXXX").string();
        REQUIRE(mkdtemp(pattern.data()) != nullptr);
        path = pattern;
    }
    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    fs::path operator/(const std::string& name) const { return path / name; }
};

struct Run
{
    int code;
    std::string out;
    std::string err;
};

Run tgl_run(std::vector<std::string> args)
{
    args.insert(args.begin(), "tgl");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return csv::read_file(p); }

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream os(p);
    os << text;
}

// Small cohort shared by the quicker tests.
const TempDir& small_cohort()
{
    static TempDir dir;
    static bool done = false;
    if (!done) {
        const Run r = tgl_run({"--quiet", "--out", dir.path.string(), "simulate", "--n-patients", "60",
                               "--n-features", "20", "--n-informative", "8"});
        REQUIRE(r.code == 0);
        done = true;
    }
    return dir;
}

const TempDir& default_cohort()
{
    static TempDir dir;
    static bool done = false;
    if (!done) {
        REQUIRE(tgl_run({"--quiet", "--out", dir.path.string(), "simulate"}).code == 0);
        done = true;
    }
    return dir;
}

// mean_rmse is nested [lambda1][lambda2][lambda3].
std::size_t cell_count(const json& report)
{
    std::size_t n = 0;
    for (const auto& a : report.at("mean_rmse"))
        for (const auto& b : a) n += b.size();
    return n;
}

std::vector<double> column(const DenseMatrix& m, Index c) { return {m.col(c).begin(), m.col(c).end()}; }

} // namespace

TEST_CASE("simulate writes the default cohort")
{
    const auto& dir = default_cohort();
    const auto x_train = csv::read_table(dir / "X_train.csv");
    const auto y_train = csv::read_table(dir / "Y_train.csv");
    const auto x_test = csv::read_table(dir / "X_test.csv");
    const auto y_test = csv::read_table(dir / "Y_test.csv");
    CHECK(x_train.values.rows() == 350);
    CHECK(x_train.values.cols() == 300);
    CHECK(y_train.values.rows() == 350);
    CHECK(y_train.values.cols() == 10);
    CHECK(x_test.values.rows() == 150);
    CHECK(y_test.values.rows() == 150);
    CHECK(y_train.header.front() == "t5");
    CHECK(y_train.header.back() == "t50");

    const auto truth = json::parse(slurp(dir / "truth.json"));
    CHECK(truth["n_informative"].get<int>() == 170);
    const auto manifest = json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["command"] == "simulate");
    CHECK(manifest["seed"].get<std::uint64_t>() == 42);
    CHECK(manifest["tool_version"] == cli::kToolVersion);
    CHECK(manifest["outputs"].size() == 5);
    CHECK(manifest["timing"].contains("duration_seconds"));
}

TEST_CASE("repeated runs are byte-identical")
{
    TempDir dir;
    const std::vector<std::string> args{"--quiet", "--seed", "11", "--out", dir.path.string(), "simulate",
                                        "--n-patients", "30", "--n-features", "12", "--n-informative", "5"};
    REQUIRE(tgl_run(args).code == 0);
    std::map<std::string, std::string> first;
    for (const auto& e : fs::directory_iterator(dir.path)) first[e.path().filename().string()] = slurp(e.path());
    REQUIRE(tgl_run(args).code == 0);
    for (const auto& [name, content] : first) {
        if (name == "manifest.json") {
            auto a = json::parse(content), b = json::parse(slurp(dir / name));
            a.erase("timing");
            b.erase("timing");
            CHECK(a == b);
        } else {
            CHECK_MESSAGE(content == slurp(dir / name), name);
        }
    }

    // A different directory with the same seed gives the same data files.
    TempDir other;
    auto moved = args;
    moved[4] = other.path.string();
    REQUIRE(tgl_run(moved).code == 0);
    CHECK(slurp(other / "Y_test.csv") == first["Y_test.csv"]);
    CHECK(slurp(other / "truth.json") == first["truth.json"]);
}

TEST_CASE("ten patients split 7/3")
{
    TempDir dir;
    REQUIRE(tgl_run({"--quiet", "--out", dir.path.string(), "simulate", "--n-patients", "10", "--n-features", "6",
                     "--n-informative", "3"})
                .code == 0);
    CHECK(csv::read_table(dir / "X_train.csv").values.rows() == 7);
    CHECK(csv::read_table(dir / "X_test.csv").values.rows() == 3);
}

TEST_CASE("invalid simulation config and unwritable output fail")
{
    TempDir dir;
    Run r = tgl_run({"--out", dir.path.string(), "simulate", "--n-features", "5", "--n-informative", "9"});
    CHECK(r.code == 1);
    CHECK_FALSE(r.err.empty());
    CHECK_FALSE(fs::exists(dir / "X_train.csv"));

    write_text(dir / "blocker", "x");
    r = tgl_run({"--out", (dir / "blocker" / "sub").string(), "simulate", "--n-patients", "10", "--n-features",
                 "4", "--n-informative", "2"});
    CHECK(r.code != 0);
    CHECK(r.err.find("error") != std::string::npos);
}

TEST_CASE("config file values with flag overrides")
{
    TempDir dir;
    write_text(dir / "run.toml", "seed = 5\n[simulate]\nn-patients = 20\nn-features = 6\nn-informative = 3\n"
                                 "time-points = [5, 10, 15, 20]\ndose-times = [0, 8]\n");
    const fs::path out = dir / "a";
    REQUIRE(tgl_run({"--quiet", "--config", (dir / "run.toml").string(), "--out", out.string(), "simulate"}).code
            == 0);
    CHECK(csv::read_table(out / "X_train.csv").values.rows() == 14);
    CHECK(csv::read_table(out / "Y_train.csv").header == std::vector<std::string>{"t5", "t10", "t15", "t20"});
    CHECK(json::parse(slurp(out / "manifest.json"))["seed"].get<int>() == 5);

    const fs::path out2 = dir / "b";
    REQUIRE(tgl_run({"--quiet", "--config", (dir / "run.toml").string(), "--out", out2.string(), "--seed", "9",
                     "simulate", "--n-patients", "10"})
                .code == 0);
    CHECK(csv::read_table(out2 / "X_train.csv").values.rows() == 7);
    CHECK(json::parse(slurp(out2 / "manifest.json"))["seed"].get<int>() == 9);

    write_text(dir / "bad.toml", "[simulate]\nn-patients = 20\nn_patiens = 3\n");
    const Run r = tgl_run({"--config", (dir / "bad.toml").string(), "--out", (dir / "c").string(), "simulate"});
    CHECK(r.code != 0);
    CHECK_FALSE(fs::exists(dir / "c" / "X_train.csv"));
}

TEST_CASE("the annotated example config parses for every command")
{
    const fs::path example = fs::path(TGL_SOURCE_DIR) / "configs" / "example.toml";
    REQUIRE(fs::exists(example));
    for (const char* cmd : {"simulate", "cv", "fit", "predict", "evaluate", "report-boxplot"}) {
        // --help stops after parsing, so unknown keys would still surface.
        const Run r = tgl_run({"--config", example.string(), cmd, "--help"});
        CHECK_MESSAGE(r.code == 0, cmd << ": " << r.err);
    }
}

TEST_CASE("cv with a singleton grid")
{
    const auto& data = small_cohort();
    TempDir out;
    const Run r = tgl_run({"--out", out.path.string(), "cv", "--x", (data / "X_train.csv").string(), "--y",
                           (data / "Y_train.csv").string(), "--lambda1", "0.5", "--lambda2", "1", "--lambda3", "2",
                           "--k-folds", "3"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("best lambda1=0.5 lambda2=1 lambda3=2") != std::string::npos);
    const auto report = json::parse(slurp(out / "cv_report.json"));
    CHECK(cell_count(report) == 1);
    CHECK(fs::exists(out / "cv_report.csv"));
    CHECK(json::parse(slurp(out / "manifest.json"))["command"] == "cv");
}

TEST_CASE("3x3x3 default grid on the default training set selects lambda3 > 0")
{
    const auto& data = default_cohort();
    TempDir out;
    const Run r = tgl_run({"--quiet", "--out", out.path.string(), "cv", "--x", (data / "X_train.csv").string(),
                           "--y", (data / "Y_train.csv").string(), "--grid-size", "3", "--threads", "2"});
    REQUIRE(r.code == 0);
    const auto report = json::parse(slurp(out / "cv_report.json"));
    CHECK(cell_count(report) == 27);
    CHECK(report["best_config"]["lambda3"].get<double>() > 0.0);
}

TEST_CASE("cv input errors")
{
    const auto& data = small_cohort();
    TempDir out;
    Run r = tgl_run({"--out", out.path.string(), "cv", "--x", (data / "X_train.csv").string(), "--y",
                     (data / "Y_train.csv").string(), "--k-folds", "43", "--lambda1", "1", "--lambda2", "1",
                     "--lambda3", "1"});
    CHECK(r.code == 1);
    CHECK(r.err.find("k_folds") != std::string::npos);
    CHECK_FALSE(fs::exists(out / "cv_report.json"));

    write_text(out / "bad.csv", "a,b\n1,2\n3,oops\n");
    r = tgl_run({"--out", out.path.string(), "cv", "--x", (out / "bad.csv").string(), "--y",
                 (data / "Y_train.csv").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("line 3") != std::string::npos);
    CHECK(r.err.find("column 2") != std::string::npos);
}

TEST_CASE("fit prints iterations and selection count")
{
    const auto& data = small_cohort();
    TempDir out;
    Run r = tgl_run({"--out", out.path.string(), "fit", "--x", (data / "X_train.csv").string(), "--y",
                     (data / "Y_train.csv").string(), "--lambda3", "1e9"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("0 features selected") != std::string::npos);
    CHECK(r.out.find("converged") != std::string::npos);
    CHECK(load_model(out / "model.json").w.isZero(0));

    r = tgl_run({"--out", out.path.string(), "fit", "--x", (data / "X_train.csv").string(), "--y",
                 (data / "Y_train.csv").string(), "--lambda1", "1", "--lambda2", "1", "--lambda3", "0"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("20 features selected") != std::string::npos);
}

TEST_CASE("method flag dispatches to the baselines")
{
    const auto& dir = small_cohort();
    const auto data = csv::read_dataset(dir / "X_train.csv", dir / "Y_train.csv");
    const auto fit_with = [&](std::vector<std::string> extra) {
        TempDir out;
        std::vector<std::string> args{"--quiet", "--out", out.path.string(), "fit", "--x",
                                      (dir / "X_train.csv").string(), "--y", (dir / "Y_train.csv").string()};
        args.insert(args.end(), extra.begin(), extra.end());
        const Run r = tgl_run(args);
        REQUIRE_MESSAGE(r.code == 0, r.err);
        return load_model(out / "model.json");
    };

    const FitResult ridge = fit_with({"--method", "ridge", "--lambda1", "3"});
    CHECK(ridge.method == "ridge");
    CHECK((ridge.w - fit_ridge(data, 3.0).w).norm() == 0.0);

    const FitResult ols = fit_with({"--method", "ols"});
    CHECK(ols.method == "ols");
    CHECK((ols.w - fit_ols(data).w).norm() == 0.0);

    const FitResult lasso = fit_with({"--method", "lasso", "--lambda", "2", "--response-column", "4"});
    CHECK(lasso.method == "lasso");
    CHECK(lasso.w.cols() == 1);
    CHECK(lasso.time_labels == std::vector<double>{25.0});

    const FitResult en = fit_with({"--method", "elastic_net", "--lambda1", "2", "--lambda2", "1",
                                   "--response-column", "0"});
    CHECK(en.method == "elastic_net");

    const FitResult gl = fit_with({"--method", "group_lasso", "--lambda", "2", "--response-column", "0", "--groups",
                                   "0,0,1,1,2,2,3,3,4,4,5,5,6,6,7,7,8,8,9,9"});
    CHECK(gl.method == "group_lasso");

    TempDir out;
    const Run r = tgl_run({"--out", out.path.string(), "fit", "--x", (dir / "X_train.csv").string(), "--y",
                           (dir / "Y_train.csv").string(), "--method", "lasso", "--lambda", "1"});
    CHECK(r.code == 1);
    CHECK(r.err.find("--response-column") != std::string::npos);
}

TEST_CASE("unconverged fit under --strict exits 3 without outputs")
{
    const auto& dir = small_cohort();
    TempDir out;
    const std::vector<std::string> tail{"fit", "--x", (dir / "X_train.csv").string(), "--y",
                                        (dir / "Y_train.csv").string(), "--lambda3", "0.5", "--max-iters", "2"};
    std::vector<std::string> args{"--strict", "--out", out.path.string()};
    args.insert(args.end(), tail.begin(), tail.end());
    const Run strict = tgl_run(args);
    CHECK(strict.code == 3);
    CHECK_FALSE(fs::exists(out / "model.json"));

    args = {"--out", out.path.string()};
    args.insert(args.end(), tail.begin(), tail.end());
    const Run lenient = tgl_run(args);
    CHECK(lenient.code == 0);
    CHECK(lenient.out.find("NOT converged") != std::string::npos);
    CHECK(fs::exists(out / "model.json"));
}

TEST_CASE("predict on training data reproduces the in-objective residual")
{
    const auto& dir = small_cohort();
    TempDir out;
    REQUIRE(tgl_run({"--quiet", "--out", out.path.string(), "fit", "--x", (dir / "X_train.csv").string(), "--y",
                     (dir / "Y_train.csv").string(), "--lambda1", "0.3", "--lambda2", "2", "--lambda3", "1.5"})
                .code == 0);
    REQUIRE(tgl_run({"--quiet", "--out", out.path.string(), "predict", "--model", (out / "model.json").string(),
                     "--x", (dir / "X_train.csv").string()})
                .code == 0);
    const FitResult model = load_model(out / "model.json");
    const auto y = csv::read_table(dir / "Y_train.csv").values;
    const auto predictions = csv::read_table(out / "predictions.csv").values;
    const double rss = (y - predictions).squaredNorm();

    const auto r = build_difference_operator(model.n_times());
    const double penalty = 0.3 * model.w.squaredNorm() + 2.0 * temporal_penalty(model.w, r) + 1.5 * l21_norm(model.w);
    const double loss = model.final_objective() - penalty;
    CHECK(rss == doctest::Approx(loss).epsilon(1e-9));

    const double rmse = std::sqrt(rss / static_cast<double>(y.size()));
    const double rmse_objective = std::sqrt(loss / static_cast<double>(y.size()));
    CHECK(std::abs(rmse - rmse_objective) < 1e-10);
}

TEST_CASE("evaluate writes per-hour metrics")
{
    // Noiseless linear fixture: OLS reproduces it exactly.
    TempDir dir;
    Xoshiro256 rng(8);
    const DenseMatrix x = oracle::random_matrix(rng, 40, 3);
    DenseMatrix w(3, 10);
    for (Index j = 0; j < 3; ++j)
        for (Index t = 0; t < 10; ++t) w(j, t) = 0.1 * static_cast<double>(j + 1) + 0.05 * static_cast<double>(t);
    const DenseMatrix y = (x * w).rowwise() + RowVector<double>::LinSpaced(10, 1.0, 2.0);
    std::vector<std::string> hours;
    for (int h = 5; h <= 50; h += 5) hours.push_back(csv::time_header(h));
    write_text(dir / "X.csv", csv::format_table({"a", "b", "c"}, x));
    write_text(dir / "Y.csv", csv::format_table(hours, y));

    REQUIRE(tgl_run({"--quiet", "--out", (dir / "fit").string(), "fit", "--x", (dir / "X.csv").string(), "--y",
                     (dir / "Y.csv").string(), "--method", "ols"})
                .code == 0);
    const fs::path model = dir / "fit" / "model.json";
    REQUIRE(tgl_run({"--out", (dir / "ev").string(), "evaluate", "--model", model.string(), "--x",
                     (dir / "X.csv").string(), "--y", (dir / "Y.csv").string()})
                .code == 0);
    const auto metrics = csv::read_table(dir / "ev" / "metrics.csv");
    CHECK(metrics.header == std::vector<std::string>{"hour", "mean", "sd", "rmse", "r2"});
    REQUIRE(metrics.values.rows() == 10);
    for (Index t = 0; t < 10; ++t) {
        CHECK(metrics.values(t, 0) == 5.0 * static_cast<double>(t + 1));
        CHECK(metrics.values(t, 4) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(metrics.values(t, 3) < 1e-10);
        const auto col = column(y, t);
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= static_cast<double>(col.size());
        double ss = 0.0;
        for (double v : col) ss += (v - mean) * (v - mean);
        CHECK(metrics.values(t, 1) == doctest::Approx(mean).epsilon(1e-14));
        CHECK(metrics.values(t, 2) == doctest::Approx(std::sqrt(ss / static_cast<double>(col.size() - 1))).epsilon(1e-14));
    }

    // Fewer response columns than the model predicts.
    write_text(dir / "Y9.csv", csv::format_table(std::vector<std::string>(hours.begin(), hours.end() - 1),
                                                 y.leftCols(9)));
    const Run r = tgl_run({"--out", (dir / "ev2").string(), "evaluate", "--model", model.string(), "--x",
                           (dir / "X.csv").string(), "--y", (dir / "Y9.csv").string()});
    CHECK(r.code == 1);
    CHECK_FALSE(fs::exists(dir / "ev2" / "metrics.csv"));
}

TEST_CASE("box statistics")
{
    const cli::BoxStats s = cli::box_stats({7, 1, 3, 2, 4, 100, 5, 6});
    CHECK(s.min == 1);
    CHECK(s.max == 100);
    CHECK(s.q1 == doctest::Approx(2.75));
    CHECK(s.median == doctest::Approx(4.5));
    CHECK(s.q3 == doctest::Approx(6.25));
    CHECK(s.outliers == std::vector<double>{100});
    CHECK(s.upper_whisker == 7);
    CHECK(s.lower_whisker == 1);

    const cli::BoxStats c = cli::box_stats({2, 2, 2});
    CHECK(c.q1 == 2);
    CHECK(c.q3 == 2);
    CHECK(c.outliers.empty());
    CHECK_THROWS_AS(cli::box_stats({}), InputError);
}

TEST_CASE("report-boxplot on the default cohort")
{
    const auto& dir = default_cohort();
    TempDir out;
    // Huge lambda3 gives W = 0, so every prediction is the intercept.
    REQUIRE(tgl_run({"--quiet", "--out", out.path.string(), "fit", "--x", (dir / "X_train.csv").string(), "--y",
                     (dir / "Y_train.csv").string(), "--lambda3", "1e9"})
                .code == 0);
    REQUIRE(tgl_run({"--quiet", "--out", out.path.string(), "report-boxplot", "--model",
                     (out / "model.json").string(), "--x", (dir / "X_test.csv").string(), "--y",
                     (dir / "Y_test.csv").string()})
                .code == 0);

    const std::string text = slurp(out / "boxplot.csv");
    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "hour,series,min,q1,median,q3,max,lower_whisker,upper_whisker,n_outliers,outliers");

    const auto y = csv::read_table(dir / "Y_test.csv").values;
    int rows = 0, e_outliers = 0;
    while (std::getline(lines, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() == 10) f.emplace_back(); // empty outlier list
        REQUIRE(f.size() == 11);
        const double hour = std::stod(f[0]);
        const Index t = static_cast<Index>(hour / 5.0) - 1;
        const double q1 = std::stod(f[3]), median = std::stod(f[4]), q3 = std::stod(f[5]);
        if (f[1] == "P") {
            CHECK(q1 == median);
            CHECK(median == q3);
            CHECK(f[9] == "0");
        } else {
            REQUIRE(f[1] == "E");
            auto sorted = column(y, t);
            std::sort(sorted.begin(), sorted.end());
            CHECK(std::abs(q1 - oracle::quantile_sorted(sorted, 0.25)) < 1e-12);
            CHECK(std::abs(median - oracle::quantile_sorted(sorted, 0.5)) < 1e-12);
            CHECK(std::abs(q3 - oracle::quantile_sorted(sorted, 0.75)) < 1e-12);
            CHECK(std::stod(f[2]) == sorted.front());
            CHECK(std::stod(f[6]) == sorted.back());
            const double iqr = q3 - q1;
            int expected = 0;
            for (double v : sorted) expected += (v < q1 - 1.5 * iqr || v > q3 + 1.5 * iqr) ? 1 : 0;
            CHECK(std::stoi(f[9]) == expected);
            e_outliers += expected;
        }
        ++rows;
    }
    CHECK(rows == 20);
    MESSAGE("observed-series outliers: " << e_outliers);
    CHECK(e_outliers > 0);
}

TEST_CASE("help and usage errors")
{
    CHECK(tgl_run({"--help"}).code == 0);
    CHECK(tgl_run({}).code != 0);
    CHECK(tgl_run({"fit", "--method", "nope", "--x", "a", "--y", "b"}).code != 0);
    const Run r = tgl_run({"--version"});
    CHECK(r.code == 0);
    CHECK(r.out.find(cli::kToolVersion) != std::string::npos);
}
