#include "tgl/solvers.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>

#include "proximal_engine.hpp"

namespace tgl {

void SolverConfig::validate() const
{
    if (max_iters < 1) {
        throw InputError("solver: max_iters must be >= 1");
    }
    if (!(rel_tol > 0.0)) {
        throw InputError("solver: rel_tol must be > 0");
    }
    if (!(backtracking_factor > 0.0 && backtracking_factor < 1.0)) {
        throw InputError("solver: backtracking_factor must lie in (0, 1)");
    }
    if (initial_step && !(*initial_step > 0.0 && std::isfinite(*initial_step))) {
        throw InputError("solver: initial_step must be positive and finite");
    }
}

GroupSpec GroupSpec::from_labels(const std::vector<long>& labels)
{
    std::map<long, std::vector<Index>> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        by_label[labels[i]].push_back(static_cast<Index>(i));
    }
    GroupSpec spec;
    for (auto& [label, members] : by_label) {
        spec.groups.push_back(std::move(members));
    }
    return spec;
}

GroupSpec GroupSpec::singletons(Index d)
{
    GroupSpec spec;
    for (Index i = 0; i < d; ++i) {
        spec.groups.push_back({i});
    }
    return spec;
}

void GroupSpec::validate(Index d) const
{
    std::vector<int> seen(static_cast<std::size_t>(std::max<Index>(d, 0)), 0);
    std::vector<Index> out_of_range;
    bool empty_group = false;
    for (const auto& g : groups) {
        empty_group = empty_group || g.empty();
        for (Index i : g) {
            if (i < 0 || i >= d) {
                out_of_range.push_back(i);
            } else {
                ++seen[static_cast<std::size_t>(i)];
            }
        }
    }
    std::string missing;
    std::string duplicated;
    for (Index i = 0; i < d; ++i) {
        const int count = seen[static_cast<std::size_t>(i)];
        if (count == 0) missing += (missing.empty() ? "" : ",") + std::to_string(i);
        if (count > 1) duplicated += (duplicated.empty() ? "" : ",") + std::to_string(i);
    }
    if (!missing.empty() || !duplicated.empty() || !out_of_range.empty() || empty_group) {
        std::string msg = "invalid group partition:";
        if (!missing.empty()) msg += " missing [" + missing + "]";
        if (!duplicated.empty()) msg += " duplicated [" + duplicated + "]";
        if (!out_of_range.empty()) msg += " " + std::to_string(out_of_range.size()) + " index(es) out of range";
        if (empty_group) msg += " empty group present";
        throw InputError(msg);
    }
}

namespace {

struct Prepared
{
    LongitudinalDataset data;
    StandardizationParams params;
};

Prepared prepare(const LongitudinalDataset& data, Scaling scaling)
{
    data.validate();
    if (data.n_patients() < 2) {
        throw InputError("fit: need at least 2 patients");
    }
    if (data.n_times() < 1) {
        throw InputError("fit: need at least one response column");
    }
    auto [prep, params] = standardize(data, scaling);
    return {std::move(prep), std::move(params)};
}

FitResult base_result(const std::string& method, const LongitudinalDataset& data,
                      const StandardizationParams& params)
{
    FitResult fit;
    fit.method = method;
    fit.standardization = params;
    fit.intercepts = params.response_means;
    fit.feature_names = data.feature_names;
    fit.time_labels = data.time_labels;
    return fit;
}

void require_single_column(const LongitudinalDataset& data, const char* who)
{
    if (data.n_times() != 1) {
        throw InputError(std::string(who) + ": response must have exactly one column (got "
                         + std::to_string(data.n_times()) + "); use fit_tgl for multi-column responses");
    }
}

FitResult run_engine(const std::string& method, const LongitudinalDataset& data,
                     const PenaltyConfig& echo, double ridge, double temporal,
                     const detail::NonsmoothTerm& penalty, const SolverConfig& solver)
{
    solver.validate();
    Prepared prep = prepare(data, solver.scaling);
    const auto r = build_difference_operator(prep.data.n_times(), echo.temporal_weights);

    detail::SmoothProblem problem{prep.data.x, prep.data.y, ridge, temporal, {}, 0.0};
    double temporal_sigma = 0.0;
    if (temporal != 0.0 && r.t > 1) {
        problem.temporal_gram = r.gram();
        temporal_sigma = spectral_norm_sq(r.matrix, 100, solver.seed);
    } else {
        problem.temporal = 0.0;
    }
    problem.lipschitz =
        2.0 * (spectral_norm_sq(prep.data.x, 100, solver.seed) + ridge + temporal * temporal_sigma);

    auto engine = detail::minimize_composite(problem, penalty, solver);

    FitResult fit = base_result(method, data, prep.params);
    fit.w = std::move(engine.w);
    fit.objective_trajectory = std::move(engine.trajectory);
    fit.iterations_used = engine.iterations;
    fit.converged = engine.converged;
    fit.penalty = echo;
    fit.solver = solver;
    return fit;
}

detail::NonsmoothTerm l1_term(double lambda)
{
    return {[lambda](const DenseMatrix& w) { return lambda * w.lpNorm<1>(); },
            [lambda](const DenseMatrix& v, double step) { return soft_threshold(v, step * lambda); }};
}

} // namespace

FitResult fit_tgl(const LongitudinalDataset& data, const PenaltyConfig& cfg, const SolverConfig& solver)
{
    cfg.validate();
    solver.validate();
    data.validate();
    if (cfg.all_zero() && data.n_features() > data.n_patients()) {
        FitResult fit = fit_ols(data, solver.scaling);
        fit.method = "tgl";
        fit.redirected_to_ols = true;
        fit.penalty = cfg;
        fit.solver = solver;
        return fit;
    }
    const double lambda3 = cfg.lambda3;
    detail::NonsmoothTerm l21{
        [lambda3](const DenseMatrix& w) { return lambda3 * l21_norm(w); },
        [lambda3](const DenseMatrix& v, double step) { return prox_l21(v, step * lambda3); }};
    return run_engine("tgl", data, cfg, cfg.lambda1, cfg.lambda2, l21, solver);
}

FitResult fit_ols(const LongitudinalDataset& data, Scaling scaling)
{
    Prepared prep = prepare(data, scaling);
    const Eigen::MatrixXd x = prep.data.x;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? 1e-10 * sv(0) : 0.0;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);
    }
    const Eigen::MatrixXd uty = svd.matrixU().transpose() * prep.data.y;

    FitResult fit = base_result("ols", data, prep.params);
    fit.w = svd.matrixV() * (inv.asDiagonal() * uty);
    const auto r = build_difference_operator(prep.data.n_times());
    fit.objective_trajectory = {objective(fit.w, prep.data.x, prep.data.y, r, PenaltyConfig{})};
    fit.converged = true;
    fit.solver.scaling = scaling;
    return fit;
}

FitResult fit_ridge(const LongitudinalDataset& data, double lambda1, Scaling scaling)
{
    if (!(lambda1 > 0.0) || !std::isfinite(lambda1)) {
        throw InputError("fit_ridge: lambda1 must be > 0 (use fit_ols for lambda1 = 0)");
    }
    Prepared prep = prepare(data, scaling);
    const DenseMatrix& x = prep.data.x;
    DenseMatrix gram = x.transpose() * x;
    gram.diagonal().array() += lambda1;

    FitResult fit = base_result("ridge", data, prep.params);
    fit.w = solve_spd(gram, DenseMatrix(x.transpose() * prep.data.y));
    fit.penalty.lambda1 = lambda1;
    const auto r = build_difference_operator(prep.data.n_times());
    fit.objective_trajectory = {objective(fit.w, x, prep.data.y, r, fit.penalty)};
    fit.converged = true;
    fit.solver.scaling = scaling;
    return fit;
}

FitResult fit_lasso(const LongitudinalDataset& data, double lambda, const SolverConfig& solver)
{
    require_single_column(data, "fit_lasso");
    PenaltyConfig echo;
    echo.lambda3 = lambda;
    echo.validate();
    return run_engine("lasso", data, echo, 0.0, 0.0, l1_term(lambda), solver);
}

FitResult fit_elastic_net(const LongitudinalDataset& data, double lambda1, double lambda2,
                          const SolverConfig& solver)
{
    require_single_column(data, "fit_elastic_net");
    // With one time point the TGL terms line up as: ridge weight = λ2, sparsity weight = λ1.
    PenaltyConfig echo;
    echo.lambda1 = lambda2;
    echo.lambda3 = lambda1;
    echo.validate();
    return run_engine("elastic_net", data, echo, lambda2, 0.0, l1_term(lambda1), solver);
}

FitResult fit_group_lasso(const LongitudinalDataset& data, const GroupSpec& groups, double lambda,
                          const SolverConfig& solver)
{
    require_single_column(data, "fit_group_lasso");
    groups.validate(data.n_features());
    PenaltyConfig echo;
    echo.lambda3 = lambda;
    echo.validate();

    auto value = [groups, lambda](const DenseMatrix& w) {
        double total = 0.0;
        for (const auto& g : groups.groups) {
            double sq = 0.0;
            for (Index i : g) sq += w.row(i).squaredNorm();
            total += std::sqrt(sq);
        }
        return lambda * total;
    };
    auto prox = [groups, lambda](const DenseMatrix& v, double step) {
        DenseMatrix out = v;
        const double tau = step * lambda;
        for (const auto& g : groups.groups) {
            double sq = 0.0;
            for (Index i : g) sq += v.row(i).squaredNorm();
            const double norm = std::sqrt(sq);
            const double scale = norm <= tau ? 0.0 : 1.0 - tau / norm;
            for (Index i : g) out.row(i) = scale * v.row(i);
        }
        return out;
    };
    return run_engine("group_lasso", data, echo, 0.0, 0.0, {value, prox}, solver);
}

DenseMatrix predict(const FitResult& model, const DenseMatrix& x_new)
{
    if (x_new.cols() != model.n_features()) {
        throw InputError("predict: model expects " + std::to_string(model.n_features())
                         + " feature columns, got " + std::to_string(x_new.cols()));
    }
    DenseMatrix out = model.standardization.transform_features(x_new) * model.w;
    out.rowwise() += model.intercepts.transpose();
    return out;
}

std::vector<Index> selected_features(const FitResult& model, double eps)
{
    if (!(eps > 0.0)) {
        throw InputError("selected_features: eps must be > 0");
    }
    std::vector<Index> out;
    for (Index i = 0; i < model.w.rows(); ++i) {
        if (model.w.row(i).norm() > eps) {
            out.push_back(i);
        }
    }
    return out;
}

RawCoefficients raw_coefficients(const FitResult& model)
{
    const auto& p = model.standardization;
    RawCoefficients raw;
    raw.w = model.w;
    raw.w.array().colwise() /= p.feature_sds.array();
    raw.intercepts = model.intercepts - (p.feature_means.transpose() * raw.w).transpose();
    return raw;
}

} // namespace tgl
