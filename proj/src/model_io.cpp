#include "tgl/model_io.hpp"

#include <json.hpp>

#include "tgl/csv.hpp"

namespace tgl {

using nlohmann::json;

namespace {

json vector_json(const DenseVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

DenseVector vector_from(const json& j)
{
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const DenseVector>(values.data(), static_cast<Index>(values.size()));
}

json matrix_json(const DenseMatrix& m)
{
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        rows.push_back(std::vector<double>(m.row(i).data(), m.row(i).data() + m.cols()));
    }
    return rows;
}

DenseMatrix matrix_from(const json& j, Index cols_if_empty)
{
    const auto rows = j.get<std::vector<std::vector<double>>>();
    const Index cols = rows.empty() ? cols_if_empty : static_cast<Index>(rows.front().size());
    DenseMatrix m(static_cast<Index>(rows.size()), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (static_cast<Index>(rows[i].size()) != cols) {
            throw InputError("model JSON: ragged coefficient matrix");
        }
        for (Index c = 0; c < cols; ++c) {
            m(static_cast<Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
        }
    }
    return m;
}

} // namespace

std::string model_to_json(const FitResult& model)
{
    const auto& p = model.standardization;
    json penalty{{"lambda1", model.penalty.lambda1},
                 {"lambda2", model.penalty.lambda2},
                 {"lambda3", model.penalty.lambda3},
                 {"temporal_weights", model.penalty.temporal_weights
                                          ? json(*model.penalty.temporal_weights)
                                          : json(nullptr)}};
    json solver{{"max_iters", model.solver.max_iters},
                {"rel_tol", model.solver.rel_tol},
                {"backtracking_factor", model.solver.backtracking_factor},
                {"initial_step", model.solver.initial_step ? json(*model.solver.initial_step) : json(nullptr)},
                {"use_acceleration", model.solver.use_acceleration},
                {"restart_on_increase", model.solver.restart_on_increase},
                {"seed", model.solver.seed},
                {"scaling", to_string(model.solver.scaling)}};
    std::vector<long> constant(p.constant_features.begin(), p.constant_features.end());
    json doc{{"method", model.method},
             {"w", matrix_json(model.w)},
             {"intercepts", vector_json(model.intercepts)},
             {"feature_means", vector_json(p.feature_means)},
             {"feature_sds", vector_json(p.feature_sds)},
             {"response_means", vector_json(p.response_means)},
             {"constant_features", constant},
             {"scaling", to_string(p.scaling)},
             {"feature_names", model.feature_names},
             {"time_labels", model.time_labels},
             {"penalty_config", penalty},
             {"solver_config", solver},
             {"converged", model.converged},
             {"redirected_to_ols", model.redirected_to_ols},
             {"iterations_used", model.iterations_used},
             {"final_objective", model.final_objective()}};
    return doc.dump(2) + "\n";
}

FitResult model_from_json(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("model JSON: ") + e.what());
    }
    try {
        FitResult model;
        model.method = doc.at("method").get<std::string>();
        model.time_labels = doc.at("time_labels").get<std::vector<double>>();
        model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        model.w = matrix_from(doc.at("w"), static_cast<Index>(model.time_labels.size()));
        model.intercepts = vector_from(doc.at("intercepts"));
        auto& p = model.standardization;
        p.feature_means = vector_from(doc.at("feature_means"));
        p.feature_sds = vector_from(doc.at("feature_sds"));
        p.response_means = vector_from(doc.at("response_means"));
        for (long i : doc.value("constant_features", std::vector<long>{})) {
            p.constant_features.push_back(static_cast<Index>(i));
        }
        p.scaling = scaling_from_string(doc.value("scaling", std::string("standardize")));

        const auto& pen = doc.at("penalty_config");
        model.penalty.lambda1 = pen.at("lambda1").get<double>();
        model.penalty.lambda2 = pen.at("lambda2").get<double>();
        model.penalty.lambda3 = pen.at("lambda3").get<double>();
        if (pen.contains("temporal_weights") && !pen.at("temporal_weights").is_null()) {
            model.penalty.temporal_weights = pen.at("temporal_weights").get<std::vector<double>>();
        }
        const auto& sol = doc.at("solver_config");
        model.solver.max_iters = sol.at("max_iters").get<int>();
        model.solver.rel_tol = sol.at("rel_tol").get<double>();
        model.solver.backtracking_factor = sol.at("backtracking_factor").get<double>();
        if (!sol.at("initial_step").is_null()) {
            model.solver.initial_step = sol.at("initial_step").get<double>();
        }
        model.solver.use_acceleration = sol.at("use_acceleration").get<bool>();
        model.solver.restart_on_increase = sol.at("restart_on_increase").get<bool>();
        model.solver.seed = sol.at("seed").get<std::uint64_t>();
        model.solver.scaling = scaling_from_string(sol.value("scaling", std::string("standardize")));

        model.converged = doc.at("converged").get<bool>();
        model.redirected_to_ols = doc.value("redirected_to_ols", false);
        model.iterations_used = doc.at("iterations_used").get<int>();
        if (doc.contains("final_objective")) {
            model.objective_trajectory = {doc.at("final_objective").get<double>()};
        }

        const auto d = model.w.rows();
        const auto t = model.w.cols();
        if (model.intercepts.size() != t || p.response_means.size() != t
            || p.feature_means.size() != d || p.feature_sds.size() != d
            || static_cast<Index>(model.feature_names.size()) != d
            || static_cast<Index>(model.time_labels.size()) != t) {
            throw InputError("model JSON: inconsistent dimensions");
        }
        return model;
    } catch (const json::exception& e) {
        throw InputError(std::string("model JSON: ") + e.what());
    }
}

void save_model(const FitResult& model, const std::filesystem::path& path)
{
    csv::write_file_atomic(path, model_to_json(model));
}

FitResult load_model(const std::filesystem::path& path) { return model_from_json(csv::read_file(path)); }

} // namespace tgl
