#include "tgl/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "tgl/csv.hpp"
#include "tgl/random.hpp"

namespace tgl::sim {

namespace {

struct ParameterSpec
{
    const char* name;
    double share;  // fraction of the informative features
    double lower;
    double upper;
    double center; // softplus(offset)
    double spread; // sd of the linear combination before softplus
};

// Informative features are split evenly across the six parameters.
constexpr double kShare = 1.0 / 6.0;
constexpr std::array<ParameterSpec, 6> kParameters{{
    {"absorption_rate", kShare, 0.5, 2.0, 1.0, 0.35},
    {"elimination_rate", kShare, 0.05, 0.3, 0.12, 0.45},
    {"amplitude_1", kShare, 0.1, 0.6, 0.3, 0.4},
    {"amplitude_2", kShare, 0.1, 0.6, 0.3, 0.4},
    {"amplitude_3", kShare, 0.1, 0.6, 0.3, 0.4},
    {"baseline", kShare, 0.0, 1.0, 0.5, 0.3},
}};

// Loading magnitudes are U(0.02, 1)^kMagnitudeExponent: a few strong
// features per parameter and a tail of weak ones.
constexpr double kMagnitudeExponent = 6.0;

double inverse_softplus(double v) { return std::log(std::expm1(v)); }

std::vector<Index> allocate(Index total)
{
    std::vector<Index> sizes(kParameters.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    Index assigned = 0;
    for (std::size_t p = 0; p < kParameters.size(); ++p) {
        const double exact = kParameters[p].share * static_cast<double>(total);
        sizes[p] = static_cast<Index>(std::floor(exact));
        assigned += sizes[p];
        remainders.emplace_back(exact - std::floor(exact), p);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < total; ++i, ++assigned) {
        ++sizes[remainders[i % remainders.size()].second];
    }
    return sizes;
}

std::string feature_name(Index j) { return "x" + std::to_string(j); }

} // namespace

void SimulationConfig::validate() const
{
    if (n_patients < 4) throw InputError("simulation: n_patients must be >= 4");
    if (n_features < 1) throw InputError("simulation: n_features must be >= 1");
    if (n_informative < 0 || n_informative > n_features) {
        throw InputError("simulation: n_informative must lie in [0, n_features]");
    }
    if (time_points.empty()) throw InputError("simulation: time_points is empty");
    for (std::size_t i = 0; i < time_points.size(); ++i) {
        if (!std::isfinite(time_points[i]) || (i > 0 && !(time_points[i] > time_points[i - 1]))) {
            throw InputError("simulation: time_points must be finite and strictly increasing");
        }
    }
    if (dose_times.empty()) throw InputError("simulation: dose_times is empty");
    const double horizon = time_points.back();
    for (double t : dose_times) {
        if (!(t >= 0.0 && t < horizon)) {
            throw InputError("simulation: dose times must lie in [0, last time point)");
        }
    }
    if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) {
        throw InputError("simulation: noise_sd must be finite and >= 0");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw InputError("simulation: train_fraction must lie in (0, 1)");
    }
    const Index train = n_train();
    if (train < 2 || n_patients - train < 2) {
        throw InputError("simulation: train/test split leaves fewer than 2 patients on one side");
    }
}

Index SimulationConfig::n_train() const
{
    // The small slack keeps products such as 0.7·500 = 349.99999999999994 at 350.
    return static_cast<Index>(std::ceil(train_fraction * static_cast<double>(n_patients) - 1e-9));
}

double ParameterModel::value(const Eigen::Ref<const RowVector<double>>& features) const
{
    double z = offset;
    for (const auto& [index, weight] : loadings) {
        z += weight * features(index);
    }
    return std::clamp(softplus(z), lower, upper);
}

const ParameterModel& GroundTruth::parameter(const std::string& name) const
{
    for (const auto& p : parameters) {
        if (p.name == name) return p;
    }
    throw InputError("ground truth has no parameter '" + name + "'");
}

double softplus(double z) { return z > 30.0 ? z : std::log1p(std::exp(z)); }

double unit_dose_response(double s, double absorption_rate, double elimination_rate)
{
    if (s <= 0.0) {
        return 0.0;
    }
    const double ka = absorption_rate;
    const double ke = elimination_rate;
    const double peak_time = std::log(ka / ke) / (ka - ke);
    const double peak = std::exp(-ke * peak_time) - std::exp(-ka * peak_time);
    return (std::exp(-ke * s) - std::exp(-ka * s)) / peak;
}

DenseMatrix effect_curves(const GroundTruth& truth, const DenseMatrix& x,
                          const std::vector<double>& time_points, const std::vector<double>& dose_times)
{
    const auto& ka_model = truth.parameter("absorption_rate");
    const auto& ke_model = truth.parameter("elimination_rate");
    std::vector<const ParameterModel*> amplitudes;
    for (std::size_t d = 0; d < dose_times.size(); ++d) {
        amplitudes.push_back(&truth.parameter("amplitude_" + std::to_string((d % 3) + 1)));
    }

    DenseMatrix effect = DenseMatrix::Zero(x.rows(), static_cast<Index>(time_points.size()));
    for (Index i = 0; i < x.rows(); ++i) {
        const auto row = x.row(i);
        const double ka = ka_model.value(row);
        const double ke = ke_model.value(row);
        for (std::size_t d = 0; d < dose_times.size(); ++d) {
            const double amp = amplitudes[d]->value(row);
            for (std::size_t t = 0; t < time_points.size(); ++t) {
                effect(i, static_cast<Index>(t)) += amp * unit_dose_response(time_points[t] - dose_times[d], ka, ke);
            }
        }
    }
    return effect;
}

Cohort simulate_cohort(const SimulationConfig& cfg)
{
    cfg.validate();
    Xoshiro256 rng(cfg.seed);
    const Index n = cfg.n_patients;
    const Index d = cfg.n_features;
    const auto n_times = static_cast<Index>(cfg.time_points.size());

    DenseMatrix x(n, d);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < d; ++j) {
            x(i, j) = rng.normal();
        }
    }

    std::vector<Index> features(static_cast<std::size_t>(d));
    std::iota(features.begin(), features.end(), Index{0});
    rng.shuffle(std::span<Index>(features));
    std::vector<Index> informative(features.begin(), features.begin() + cfg.n_informative);

    GroundTruth truth;
    const auto sizes = allocate(cfg.n_informative);
    std::size_t cursor = 0;
    for (std::size_t p = 0; p < kParameters.size(); ++p) {
        const auto& param = kParameters[p];
        ParameterModel model;
        model.name = param.name;
        model.offset = inverse_softplus(param.center);
        model.lower = param.lower;
        model.upper = param.upper;
        double sq = 0.0;
        for (Index k = 0; k < sizes[p]; ++k, ++cursor) {
            const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            const double magnitude = std::pow(rng.uniform(0.02, 1.0), kMagnitudeExponent);
            model.loadings.emplace_back(informative[cursor], sign * magnitude);
            sq += magnitude * magnitude;
        }
        const double scale = sq > 0.0 ? param.spread / std::sqrt(sq) : 0.0;
        for (auto& loading : model.loadings) {
            loading.second *= scale;
        }
        std::sort(model.loadings.begin(), model.loadings.end());
        truth.parameters.push_back(std::move(model));
    }
    std::sort(informative.begin(), informative.end());
    truth.informative_indices = informative;

    DenseMatrix y = effect_curves(truth, x, cfg.time_points, cfg.dose_times);
    for (Index i = 0; i < n; ++i) {
        for (Index t = 0; t < n_times; ++t) {
            y(i, t) += cfg.noise_sd * rng.normal();
        }
    }

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    rng.shuffle(std::span<Index>(order));
    const auto n_train = static_cast<std::size_t>(cfg.n_train());

    LongitudinalDataset all;
    all.x = std::move(x);
    all.y = std::move(y);
    for (Index j = 0; j < d; ++j) all.feature_names.push_back(feature_name(j));
    all.time_labels = cfg.time_points;
    all.informative_truth = informative;

    Cohort cohort;
    cohort.train = take_rows(all, std::span<const Index>(order.data(), n_train));
    cohort.test = take_rows(all, std::span<const Index>(order.data() + n_train, order.size() - n_train));
    cohort.truth = std::move(truth);
    return cohort;
}

std::string truth_to_json(const GroundTruth& truth)
{
    using nlohmann::json;
    json params = json::array();
    for (const auto& p : truth.parameters) {
        json loadings = json::array();
        for (const auto& [index, weight] : p.loadings) {
            loadings.push_back({{"feature", index}, {"weight", weight}});
        }
        params.push_back({{"name", p.name},
                          {"offset", p.offset},
                          {"lower", p.lower},
                          {"upper", p.upper},
                          {"loadings", loadings}});
    }
    json doc{{"informative_indices", truth.informative_indices},
             {"n_informative", truth.informative_indices.size()},
             {"parameter_loadings", params}};
    return doc.dump(2) + "\n";
}

} // namespace tgl::sim
