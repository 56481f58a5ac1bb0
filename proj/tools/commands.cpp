#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <streambuf>

#include <CLI11.hpp>
#include <json.hpp>

#include "tgl/csv.hpp"
#include "tgl/log.hpp"
#include "tgl/model_io.hpp"

namespace tgl::cli {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

/// Primary outputs of one command. Nothing lands under its final name until
/// every file has been written to a temporary sibling.
class Outputs
{
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

    void commit()
    {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) {
            throw InputError("cannot create output directory " + dir_.string() + ": " + ec.message());
        }
        std::vector<fs::path> temps;
        auto discard = [&] {
            for (const auto& t : temps) fs::remove(t, ec);
        };
        for (const auto& [name, content] : files_) {
            fs::path tmp = dir_ / (name + ".tmp");
            std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
            os << content;
            os.close();
            if (!os) {
                discard();
                throw InputError("cannot write " + tmp.string());
            }
            temps.push_back(tmp);
        }
        for (std::size_t i = 0; i < files_.size(); ++i) {
            fs::rename(temps[i], dir_ / files_[i].first, ec);
            if (ec) {
                discard();
                throw InputError("cannot move " + temps[i].string() + " into place: " + ec.message());
            }
        }
    }

    json names() const
    {
        json out = json::array();
        for (const auto& f : files_) out.push_back((dir_ / f.first).string());
        return out;
    }

private:
    fs::path dir_;
    std::vector<std::pair<std::string, std::string>> files_;
};

std::string utc_now()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Run metadata written after the primary outputs. Wall-clock fields sit
/// under "timing" so the rest of the document is reproducible.
struct Manifest
{
    explicit Manifest(std::string name) : command(std::move(name)) {}

    std::string command;
    std::string started = utc_now();
    Clock::time_point start = Clock::now();
    json config = json::object();
    json inputs = json::array();
    std::optional<std::uint64_t> seed;

    void write(const fs::path& dir, const Outputs& outputs) const
    {
        json doc{{"command", command},
                 {"tool_version", kToolVersion},
                 {"config", config},
                 {"inputs", inputs},
                 {"outputs", outputs.names()},
                 {"seed", seed ? json(*seed) : json(nullptr)},
                 {"timing",
                  {{"started_utc", started},
                   {"duration_seconds", std::chrono::duration<double>(Clock::now() - start).count()}}}};
        csv::write_file_atomic(dir / "manifest.json", doc.dump(2) + "\n");
    }
};

json solver_json(const SolverConfig& s)
{
    return {{"max_iters", s.max_iters},
            {"rel_tol", s.rel_tol},
            {"backtracking_factor", s.backtracking_factor},
            {"initial_step", s.initial_step ? json(*s.initial_step) : json(nullptr)},
            {"use_acceleration", s.use_acceleration},
            {"restart_on_increase", s.restart_on_increase},
            {"seed", s.seed},
            {"scaling", to_string(s.scaling)}};
}

json penalty_json(const PenaltyConfig& p)
{
    return {{"lambda1", p.lambda1},
            {"lambda2", p.lambda2},
            {"lambda3", p.lambda3},
            {"temporal_weights", p.temporal_weights ? json(*p.temporal_weights) : json(nullptr)}};
}

std::vector<std::string> time_headers(const std::vector<double>& labels)
{
    std::vector<std::string> out;
    for (double h : labels) out.push_back(csv::time_header(h));
    return out;
}

void add_dataset(Outputs& outputs, const LongitudinalDataset& data, const std::string& suffix)
{
    outputs.add("X_" + suffix + ".csv", csv::format_table(data.feature_names, data.x));
    outputs.add("Y_" + suffix + ".csv", csv::format_table(time_headers(data.time_labels), data.y));
}

std::string format_lambda(double v) { return csv::format_double(v); }

void check_feature_names(const FitResult& model, const std::vector<std::string>& names)
{
    if (static_cast<Index>(names.size()) != model.n_features()) {
        throw InputError("model expects " + std::to_string(model.n_features()) + " feature columns, got "
                         + std::to_string(names.size()));
    }
    if (names != model.feature_names) {
        warn("feature column names differ from those the model was fitted on");
    }
}

LongitudinalDataset read_for_model(const FitResult& model, const fs::path& x_path, const fs::path& y_path)
{
    auto data = csv::read_dataset(x_path, y_path);
    check_feature_names(model, data.feature_names);
    if (data.n_times() != model.n_times()) {
        throw InputError("model predicts " + std::to_string(model.n_times()) + " time points, "
                         + y_path.string() + " has " + std::to_string(data.n_times()));
    }
    if (data.time_labels != model.time_labels) {
        warn("time labels in " + y_path.string() + " differ from those the model was fitted on");
    }
    return data;
}

PenaltyConfig best_from_report(const fs::path& path)
{
    json doc;
    try {
        doc = json::parse(csv::read_file(path));
    } catch (const json::exception& e) {
        throw InputError("cannot parse CV report " + path.string() + ": " + e.what());
    }
    if (!doc.contains("best_config")) {
        throw InputError("CV report " + path.string() + " has no best_config");
    }
    PenaltyConfig cfg;
    try {
        cfg.lambda1 = doc["best_config"].at("lambda1").get<double>();
        cfg.lambda2 = doc["best_config"].at("lambda2").get<double>();
        cfg.lambda3 = doc["best_config"].at("lambda3").get<double>();
        if (doc.contains("temporal_weights")) {
            cfg.temporal_weights = doc["temporal_weights"].get<std::vector<double>>();
        }
    } catch (const json::exception& e) {
        throw InputError("malformed best_config in " + path.string() + ": " + e.what());
    }
    return cfg;
}

LongitudinalDataset single_response(LongitudinalDataset data, std::optional<int> column)
{
    if (!column) {
        if (data.n_times() != 1) {
            throw InputError("this method fits one response column; choose one of the "
                             + std::to_string(data.n_times()) + " with --response-column");
        }
        return data;
    }
    if (*column < 0 || *column >= data.n_times()) {
        throw InputError("--response-column must lie in [0, " + std::to_string(data.n_times()) + ")");
    }
    LongitudinalDataset out = data;
    out.y = data.y.col(*column);
    out.time_labels = {data.time_labels[static_cast<std::size_t>(*column)]};
    return out;
}

} // namespace

sim::Cohort cmd_simulate(const sim::SimulationConfig& cfg, const fs::path& out_dir, std::ostream& log)
{
    Manifest manifest("simulate");
    manifest.seed = cfg.seed;
    manifest.config = {{"n_patients", cfg.n_patients},
                       {"n_features", cfg.n_features},
                       {"n_informative", cfg.n_informative},
                       {"time_points", cfg.time_points},
                       {"dose_times", cfg.dose_times},
                       {"noise_sd", cfg.noise_sd},
                       {"train_fraction", cfg.train_fraction},
                       {"seed", cfg.seed}};

    sim::Cohort cohort = sim::simulate_cohort(cfg);

    Outputs outputs(out_dir);
    add_dataset(outputs, cohort.train, "train");
    add_dataset(outputs, cohort.test, "test");
    outputs.add("truth.json", sim::truth_to_json(cohort.truth));
    outputs.commit();
    manifest.write(out_dir, outputs);

    log << "simulated " << cohort.train.n_patients() << " training and " << cohort.test.n_patients()
        << " test patients, " << cfg.n_features << " features (" << cfg.n_informative << " informative), "
        << cfg.time_points.size() << " time points\n";
    return cohort;
}

CvReport cmd_cv(const fs::path& x_path, const fs::path& y_path, const CvOptions& opts, const fs::path& out_dir,
                std::ostream& log)
{
    Manifest manifest("cv");
    manifest.seed = opts.seed;
    manifest.inputs = {x_path.string(), y_path.string()};

    const auto data = csv::read_dataset(x_path, y_path);
    CvGrid grid;
    if (opts.lambda1_values.empty() || opts.lambda2_values.empty() || opts.lambda3_values.empty()) {
        grid = default_grid(data, opts.grid_size, opts.k_folds, opts.seed);
    }
    if (!opts.lambda1_values.empty()) grid.lambda1_values = opts.lambda1_values;
    if (!opts.lambda2_values.empty()) grid.lambda2_values = opts.lambda2_values;
    if (!opts.lambda3_values.empty()) grid.lambda3_values = opts.lambda3_values;
    grid.k_folds = opts.k_folds;
    grid.seed = opts.seed;
    grid.temporal_weights = opts.temporal_weights;

    manifest.config = {{"lambda1_values", grid.lambda1_values},
                       {"lambda2_values", grid.lambda2_values},
                       {"lambda3_values", grid.lambda3_values},
                       {"k_folds", grid.k_folds},
                       {"seed", grid.seed},
                       {"threads", opts.threads},
                       {"temporal_weights", grid.temporal_weights ? json(*grid.temporal_weights) : json(nullptr)},
                       {"solver", solver_json(opts.solver)}};

    const CvReport report = grid_search_cv(data, grid, opts.solver, opts.threads);

    Outputs outputs(out_dir);
    outputs.add("cv_report.json", cv_report_to_json(report));
    outputs.add("cv_report.csv", cv_report_to_csv(report));
    outputs.commit();
    manifest.write(out_dir, outputs);

    const auto& best = report.best_config;
    log << "evaluated " << report.cells.size() << " grid cells with " << grid.k_folds << "-fold CV\n"
        << "best lambda1=" << format_lambda(best.lambda1) << " lambda2=" << format_lambda(best.lambda2)
        << " lambda3=" << format_lambda(best.lambda3) << " (mean CV RMSE " << report.best().mean_rmse << ")\n";
    return report;
}

FitResult cmd_fit(const fs::path& x_path, const fs::path& y_path, const FitOptions& opts, const fs::path& out_dir,
                  std::ostream& log)
{
    Manifest manifest("fit");
    manifest.seed = opts.solver.seed;
    manifest.inputs = {x_path.string(), y_path.string()};
    if (opts.cv_report) manifest.inputs.push_back(opts.cv_report->string());

    auto data = csv::read_dataset(x_path, y_path);
    const std::string& m = opts.method;
    if (m == "lasso" || m == "elastic_net" || m == "group_lasso") {
        data = single_response(std::move(data), opts.response_column);
    } else if (opts.response_column) {
        throw InputError("--response-column applies to lasso, elastic_net and group_lasso only");
    }
    PenaltyConfig penalty = opts.penalty;
    if (opts.cv_report) {
        if (opts.method != "tgl") {
            throw InputError("--cv-report applies to method tgl only");
        }
        penalty = best_from_report(*opts.cv_report);
    }

    FitResult fit;
    if (m == "tgl") {
        fit = fit_tgl(data, penalty, opts.solver);
    } else if (m == "ridge") {
        fit = fit_ridge(data, penalty.lambda1, opts.solver.scaling);
    } else if (m == "ols") {
        fit = fit_ols(data, opts.solver.scaling);
    } else if (m == "lasso") {
        fit = fit_lasso(data, opts.lambda, opts.solver);
    } else if (m == "elastic_net") {
        fit = fit_elastic_net(data, penalty.lambda1, penalty.lambda2, opts.solver);
    } else if (m == "group_lasso") {
        const GroupSpec groups = opts.groups.empty() ? GroupSpec::singletons(data.n_features())
                                                     : GroupSpec::from_labels(opts.groups);
        if (!opts.groups.empty() && static_cast<Index>(opts.groups.size()) != data.n_features()) {
            throw InputError("--groups needs one label per feature (" + std::to_string(data.n_features())
                             + "), got " + std::to_string(opts.groups.size()));
        }
        fit = fit_group_lasso(data, groups, opts.lambda, opts.solver);
    } else {
        throw InputError("unknown method '" + m + "'");
    }
    if (!fit.converged) {
        warn("solver stopped after " + std::to_string(fit.iterations_used)
             + " iterations without meeting rel_tol; consider raising max_iters");
    }

    manifest.config = {{"method", m},
                       {"penalty", penalty_json(penalty)},
                       {"lambda", opts.lambda},
                       {"groups", opts.groups},
                       {"response_column", opts.response_column ? json(*opts.response_column) : json(nullptr)},
                       {"solver", solver_json(opts.solver)}};

    Outputs outputs(out_dir);
    outputs.add("model.json", model_to_json(fit));
    outputs.commit();
    manifest.write(out_dir, outputs);

    const auto selected = selected_features(fit);
    log << m << ": ";
    if (m == "ols" || m == "ridge" || fit.redirected_to_ols) {
        log << "closed form" << (fit.redirected_to_ols ? " (all penalties zero, d > n: minimum-norm OLS)" : "");
    } else {
        log << fit.iterations_used << " iterations, " << (fit.converged ? "converged" : "NOT converged");
    }
    log << ", final objective " << fit.final_objective() << "\n"
        << selected.size() << " features selected\n";
    return fit;
}

DenseMatrix cmd_predict(const fs::path& model_path, const fs::path& x_path, const fs::path& out_dir,
                        std::ostream& log)
{
    Manifest manifest("predict");
    manifest.inputs = {model_path.string(), x_path.string()};
    const FitResult model = load_model(model_path);
    const auto table = csv::read_table(x_path);
    check_feature_names(model, table.header);
    const DenseMatrix predictions = predict(model, table.values);
    manifest.config = {{"method", model.method}};

    Outputs outputs(out_dir);
    outputs.add("predictions.csv", csv::format_table(time_headers(model.time_labels), predictions));
    outputs.commit();
    manifest.write(out_dir, outputs);
    log << "predicted " << predictions.rows() << " patients at " << predictions.cols() << " time points\n";
    return predictions;
}

EvaluationMetrics cmd_evaluate(const fs::path& model_path, const fs::path& x_path, const fs::path& y_path,
                               const fs::path& out_dir, std::ostream& log)
{
    Manifest manifest("evaluate");
    manifest.inputs = {model_path.string(), x_path.string(), y_path.string()};
    const FitResult model = load_model(model_path);
    const auto data = read_for_model(model, x_path, y_path);
    const EvaluationMetrics metrics = evaluate(model, data);
    manifest.config = {{"method", model.method}};

    Outputs outputs(out_dir);
    outputs.add("metrics.csv", metrics_to_csv(metrics));
    outputs.commit();
    manifest.write(out_dir, outputs);

    log << "hour      mean        sd      rmse        r2\n";
    double mean_r2 = 0.0;
    for (std::size_t t = 0; t < metrics.r2.size(); ++t) {
        char line[96];
        std::snprintf(line, sizeof line, "%4g  %8.4f  %8.4f  %8.4f  %8.4f\n", metrics.time_labels[t], metrics.mean[t],
                      metrics.sd[t], metrics.rmse[t], metrics.r2[t]);
        log << line;
        mean_r2 += metrics.r2[t];
    }
    log << "mean r2 " << mean_r2 / static_cast<double>(metrics.r2.size()) << "\n";
    return metrics;
}

double quantile(const std::vector<double>& sorted, double p)
{
    if (sorted.empty()) {
        throw InputError("quantile of an empty sample");
    }
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::vector<double> values)
{
    if (values.empty()) {
        throw InputError("box plot of an empty sample");
    }
    std::sort(values.begin(), values.end());
    BoxStats s;
    s.min = values.front();
    s.max = values.back();
    s.q1 = quantile(values, 0.25);
    s.median = quantile(values, 0.5);
    s.q3 = quantile(values, 0.75);
    const double iqr = s.q3 - s.q1;
    const double lo_fence = s.q1 - 1.5 * iqr;
    const double hi_fence = s.q3 + 1.5 * iqr;
    s.lower_whisker = s.q1;
    s.upper_whisker = s.q3;
    for (double v : values) {
        if (v < lo_fence || v > hi_fence) {
            s.outliers.push_back(v);
        } else {
            s.lower_whisker = std::min(s.lower_whisker, v);
            s.upper_whisker = std::max(s.upper_whisker, v);
        }
    }
    return s;
}

std::string boxplot_to_csv(const std::vector<BoxplotRow>& rows)
{
    std::string out = "hour,series,min,q1,median,q3,max,lower_whisker,upper_whisker,n_outliers,outliers\n";
    for (const auto& r : rows) {
        const auto& s = r.stats;
        std::string outliers;
        for (double v : s.outliers) outliers += (outliers.empty() ? "" : ";") + csv::format_double(v);
        out += csv::format_double(r.hour);
        out += ',' + r.series;
        for (double v : {s.min, s.q1, s.median, s.q3, s.max, s.lower_whisker, s.upper_whisker}) {
            out += ',' + csv::format_double(v);
        }
        out += ',' + std::to_string(s.outliers.size()) + ',' + outliers + '\n';
    }
    return out;
}

std::vector<BoxplotRow> cmd_report_boxplot(const fs::path& model_path, const fs::path& x_path,
                                           const fs::path& y_path, const fs::path& out_dir, std::ostream& log)
{
    Manifest manifest("report-boxplot");
    manifest.inputs = {model_path.string(), x_path.string(), y_path.string()};
    const FitResult model = load_model(model_path);
    const auto data = read_for_model(model, x_path, y_path);
    const DenseMatrix predictions = predict(model, data.x);
    manifest.config = {{"method", model.method}, {"quartiles", "linear interpolation at (n-1)p"}, {"fence", 1.5}};

    std::vector<BoxplotRow> rows;
    std::size_t e_outliers = 0;
    for (Index t = 0; t < data.n_times(); ++t) {
        const double hour = data.time_labels[static_cast<std::size_t>(t)];
        const auto column = [](const DenseMatrix& m, Index c) {
            return std::vector<double>(m.col(c).begin(), m.col(c).end());
        };
        rows.push_back({hour, "E", box_stats(column(data.y, t))});
        rows.push_back({hour, "P", box_stats(column(predictions, t))});
        e_outliers += rows[rows.size() - 2].stats.outliers.size();
    }

    Outputs outputs(out_dir);
    outputs.add("boxplot.csv", boxplot_to_csv(rows));
    outputs.commit();
    manifest.write(out_dir, outputs);
    log << "box-plot summaries for " << data.n_times() << " time points (" << e_outliers
        << " outliers in the observed series)\n";
    return rows;
}

namespace {

class NullBuffer : public std::streambuf
{
protected:
    int overflow(int c) override { return c; }
};

void add_solver_options(CLI::App* cmd, SolverConfig& s, std::string& scaling)
{
    cmd->add_option("--max-iters", s.max_iters, "Iteration cap for the proximal solver")->capture_default_str();
    cmd->add_option("--rel-tol", s.rel_tol, "Stop when |f_k - f_k-1| / max(1, |f_k|) falls below this")
        ->capture_default_str();
    cmd->add_option("--backtracking-factor", s.backtracking_factor, "Step shrink factor in (0, 1)")
        ->capture_default_str();
    cmd->add_option_function<double>(
        "--initial-step", [&s](double v) { s.initial_step = v; },
        "First step size (default: inverse Lipschitz estimate)");
    cmd->add_option("--acceleration", s.use_acceleration, "FISTA momentum (true/false)")->capture_default_str();
    cmd->add_option("--restart", s.restart_on_increase, "Restart momentum when the objective rises")
        ->capture_default_str();
    cmd->add_option("--scaling", scaling, "Preprocessing: standardize | center | none")
        ->check(CLI::IsMember({"standardize", "center", "none"}))
        ->capture_default_str();
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Temporal Group LASSO for longitudinal outcomes.\n"
                 "Objective: ||Y - XW||_F^2 + lambda1 ||W||_F^2 + lambda2 ||R W^T||_F^2 + lambda3 ||W||_2,1.\n"
                 "The loss is the plain sum of squares (no 1/n or 1/2 factor), so lambda values are not\n"
                 "comparable with libraries that normalize the loss by the sample size.",
                 "tgl"};
    app.set_version_flag("--version", kToolVersion);
    app.set_config("--config", "", "Key-value config file; [command] sections hold command options and flags "
                                   "given on the command line override it");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    bool quiet_flag = false;
    bool strict_flag = false;
    app.add_option_function<std::uint64_t>("--seed", [&seed](std::uint64_t v) { seed = v; },
                                           "Seed for simulation, fold assignment and the solver's power iteration");
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_flag("--quiet", quiet_flag, "Suppress warnings and progress output");
    app.add_flag("--strict", strict_flag, "Treat warnings as errors (exit code 3, no outputs written)");

    // simulate
    sim::SimulationConfig sim_cfg;
    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic cohort (X/Y train/test CSVs, truth.json)");
    simulate->add_option("--n-patients", sim_cfg.n_patients)->capture_default_str();
    simulate->add_option("--n-features", sim_cfg.n_features)->capture_default_str();
    simulate->add_option("--n-informative", sim_cfg.n_informative)->capture_default_str();
    simulate->add_option("--time-points", sim_cfg.time_points, "Sampling hours")->delimiter(',');
    simulate->add_option("--dose-times", sim_cfg.dose_times, "Injection hours")->delimiter(',');
    simulate->add_option("--noise-sd", sim_cfg.noise_sd)->capture_default_str();
    simulate->add_option("--train-fraction", sim_cfg.train_fraction)->capture_default_str();

    // cv
    CvOptions cv_opts;
    std::string cv_x, cv_y, cv_scaling = "standardize";
    std::vector<double> cv_weights;
    auto* cv = app.add_subcommand("cv", "K-fold grid search over (lambda1, lambda2, lambda3)");
    cv->add_option("--x", cv_x, "Predictor CSV")->required();
    cv->add_option("--y", cv_y, "Response CSV (columns t<hours>)")->required();
    cv->add_option("--lambda1", cv_opts.lambda1_values, "Ascending lambda1 values")->delimiter(',');
    cv->add_option("--lambda2", cv_opts.lambda2_values, "Ascending lambda2 values")->delimiter(',');
    cv->add_option("--lambda3", cv_opts.lambda3_values, "Ascending lambda3 values")->delimiter(',');
    cv->add_option("--grid-size", cv_opts.grid_size, "Values per lambda when a list is not given")
        ->capture_default_str();
    cv->add_option("--k-folds", cv_opts.k_folds)->capture_default_str();
    cv->add_option("--threads", cv_opts.threads)->capture_default_str();
    cv->add_option("--temporal-weights", cv_weights, "T-1 positive weights on adjacent differences")->delimiter(',');
    add_solver_options(cv, cv_opts.solver, cv_scaling);

    // fit
    FitOptions fit_opts;
    std::string fit_x, fit_y, fit_scaling = "standardize", fit_cv_report;
    std::vector<double> fit_weights;
    auto* fit = app.add_subcommand("fit", "Fit TGL or a baseline and write model.json");
    fit->add_option("--x", fit_x, "Predictor CSV")->required();
    fit->add_option("--y", fit_y, "Response CSV (columns t<hours>)")->required();
    fit->add_option("--method", fit_opts.method, "tgl | ridge | ols | lasso | elastic_net | group_lasso")
        ->check(CLI::IsMember({"tgl", "ridge", "ols", "lasso", "elastic_net", "group_lasso"}))
        ->capture_default_str();
    fit->add_option("--lambda1", fit_opts.penalty.lambda1,
                    "tgl and ridge: ridge weight; elastic_net: L1 weight")->capture_default_str();
    fit->add_option("--lambda2", fit_opts.penalty.lambda2,
                    "tgl: temporal smoothness weight; elastic_net: squared-L2 weight")->capture_default_str();
    fit->add_option("--lambda3", fit_opts.penalty.lambda3, "tgl: row-wise L2,1 weight")->capture_default_str();
    fit->add_option("--lambda", fit_opts.lambda, "lasso and group_lasso penalty weight")->capture_default_str();
    fit->add_option("--groups", fit_opts.groups, "group_lasso: one group label per feature")->delimiter(',');
    fit->add_option_function<int>(
        "--response-column", [&fit_opts](int c) { fit_opts.response_column = c; },
        "lasso, elastic_net, group_lasso: zero-based Y column to fit");
    fit->add_option("--cv-report", fit_cv_report, "tgl: use best_config from this cv_report.json");
    fit->add_option("--temporal-weights", fit_weights, "T-1 positive weights on adjacent differences")
        ->delimiter(',');
    add_solver_options(fit, fit_opts.solver, fit_scaling);

    // predict / evaluate / report-boxplot
    std::string model_path, x_path, y_path;
    auto* predict_cmd = app.add_subcommand("predict", "Raw-scale predictions for new patients");
    predict_cmd->add_option("--model", model_path)->required();
    predict_cmd->add_option("--x", x_path)->required();
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Per-hour RMSE, R^2, mean and sd (metrics.csv)");
    evaluate_cmd->add_option("--model", model_path)->required();
    evaluate_cmd->add_option("--x", x_path)->required();
    evaluate_cmd->add_option("--y", y_path)->required();
    auto* boxplot_cmd = app.add_subcommand("report-boxplot", "Box-plot summaries of observed vs predicted effect");
    boxplot_cmd->add_option("--model", model_path)->required();
    boxplot_cmd->add_option("--x", x_path)->required();
    boxplot_cmd->add_option("--y", y_path)->required();

    for (auto* sub : app.get_subcommands({})) {
        sub->fallthrough();
        sub->allow_config_extras(CLI::config_extras_mode::error);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    set_quiet(quiet_flag);
    set_strict(strict_flag);
    NullBuffer null_buffer;
    std::ostream null_stream(&null_buffer);
    std::ostream& log = quiet_flag ? null_stream : out;
    const fs::path dir(out_dir);

    try {
        if (simulate->parsed()) {
            if (seed) sim_cfg.seed = *seed;
            cmd_simulate(sim_cfg, dir, log);
        } else if (cv->parsed()) {
            if (seed) cv_opts.seed = *seed;
            cv_opts.solver.scaling = scaling_from_string(cv_scaling);
            if (!cv_weights.empty()) cv_opts.temporal_weights = cv_weights;
            cmd_cv(cv_x, cv_y, cv_opts, dir, log);
        } else if (fit->parsed()) {
            if (seed) fit_opts.solver.seed = *seed;
            fit_opts.solver.scaling = scaling_from_string(fit_scaling);
            if (!fit_weights.empty()) fit_opts.penalty.temporal_weights = fit_weights;
            if (!fit_cv_report.empty()) fit_opts.cv_report = fit_cv_report;
            cmd_fit(fit_x, fit_y, fit_opts, dir, log);
        } else if (predict_cmd->parsed()) {
            cmd_predict(model_path, x_path, dir, log);
        } else if (evaluate_cmd->parsed()) {
            cmd_evaluate(model_path, x_path, y_path, dir, log);
        } else if (boxplot_cmd->parsed()) {
            cmd_report_boxplot(model_path, x_path, y_path, dir, log);
        }
    } catch (const EscalatedWarning& e) {
        err << "error: warning escalated by --strict: " << e.what() << '\n';
        return 3;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

} // namespace tgl::cli
