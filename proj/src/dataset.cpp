#include "tgl/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "tgl/log.hpp"

namespace tgl {

void LongitudinalDataset::validate() const
{
    if (x.rows() != y.rows()) {
        throw InputError("dataset: X has " + std::to_string(x.rows()) + " rows but Y has "
                         + std::to_string(y.rows()));
    }
    if (static_cast<Index>(feature_names.size()) != x.cols()) {
        throw InputError("dataset: " + std::to_string(feature_names.size())
                         + " feature names for " + std::to_string(x.cols()) + " columns");
    }
    if (static_cast<Index>(time_labels.size()) != y.cols()) {
        throw InputError("dataset: " + std::to_string(time_labels.size())
                         + " time labels for " + std::to_string(y.cols()) + " response columns");
    }
    for (std::size_t t = 1; t < time_labels.size(); ++t) {
        if (!(time_labels[t] > time_labels[t - 1])) {
            throw InputError("dataset: time labels must be strictly increasing");
        }
    }
    if (!all_finite(x) || !all_finite(y)) {
        throw InputError("dataset: non-finite entries in X or Y");
    }
    if (informative_truth) {
        for (Index i : *informative_truth) {
            if (i < 0 || i >= x.cols()) {
                throw InputError("dataset: informative index " + std::to_string(i) + " out of range");
            }
        }
    }
}

LongitudinalDataset make_dataset(DenseMatrix x, DenseMatrix y)
{
    LongitudinalDataset data;
    data.feature_names.reserve(static_cast<std::size_t>(x.cols()));
    for (Index j = 0; j < x.cols(); ++j) {
        data.feature_names.push_back("x" + std::to_string(j));
    }
    for (Index t = 0; t < y.cols(); ++t) {
        data.time_labels.push_back(static_cast<double>(t + 1));
    }
    data.x = std::move(x);
    data.y = std::move(y);
    data.validate();
    return data;
}

LongitudinalDataset take_rows(const LongitudinalDataset& data, std::span<const Index> rows)
{
    LongitudinalDataset out;
    out.x.resize(static_cast<Index>(rows.size()), data.x.cols());
    out.y.resize(static_cast<Index>(rows.size()), data.y.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Index r = rows[i];
        if (r < 0 || r >= data.x.rows()) {
            throw InputError("take_rows: row index " + std::to_string(r) + " out of range");
        }
        out.x.row(static_cast<Index>(i)) = data.x.row(r);
        out.y.row(static_cast<Index>(i)) = data.y.row(r);
    }
    out.feature_names = data.feature_names;
    out.time_labels = data.time_labels;
    out.informative_truth = data.informative_truth;
    return out;
}

std::string to_string(Scaling scaling)
{
    switch (scaling) {
    case Scaling::standardize: return "standardize";
    case Scaling::center: return "center";
    case Scaling::none: return "none";
    }
    return "standardize";
}

Scaling scaling_from_string(const std::string& name)
{
    if (name == "standardize") return Scaling::standardize;
    if (name == "center") return Scaling::center;
    if (name == "none") return Scaling::none;
    throw InputError("unknown scaling '" + name + "' (expected standardize, center or none)");
}

DenseMatrix StandardizationParams::transform_features(const DenseMatrix& x) const
{
    if (x.cols() != feature_means.size()) {
        throw InputError("standardization: expected " + std::to_string(feature_means.size())
                         + " feature columns, got " + std::to_string(x.cols()));
    }
    DenseMatrix out = x.rowwise() - feature_means.transpose();
    out.array().rowwise() /= feature_sds.transpose().array();
    return out;
}

DenseMatrix StandardizationParams::inverse_transform_features(const DenseMatrix& x_std) const
{
    DenseMatrix out = x_std;
    out.array().rowwise() *= feature_sds.transpose().array();
    out.rowwise() += feature_means.transpose();
    return out;
}

DenseMatrix StandardizationParams::transform_responses(const DenseMatrix& y) const
{
    return y.rowwise() - response_means.transpose();
}

DenseMatrix StandardizationParams::inverse_transform_responses(const DenseMatrix& y_centered) const
{
    return y_centered.rowwise() + response_means.transpose();
}

std::pair<LongitudinalDataset, StandardizationParams> standardize(const LongitudinalDataset& data,
                                                                  Scaling scaling)
{
    const Index n = data.x.rows();
    const Index d = data.x.cols();
    const Index t = data.y.cols();
    if (n < 2) {
        throw InputError("standardize: need at least 2 patients, got " + std::to_string(n));
    }

    StandardizationParams params;
    params.scaling = scaling;
    params.feature_means = DenseVector::Zero(d);
    params.feature_sds = DenseVector::Ones(d);
    params.response_means = DenseVector::Zero(t);

    if (scaling != Scaling::none) {
        params.feature_means = data.x.colwise().mean().transpose();
        params.response_means = data.y.colwise().mean().transpose();
    }
    if (scaling == Scaling::standardize) {
        const DenseMatrix centered = data.x.rowwise() - params.feature_means.transpose();
        for (Index j = 0; j < d; ++j) {
            const double sd = std::sqrt(centered.col(j).squaredNorm() / static_cast<double>(n - 1));
            const double scale = std::max(1.0, std::abs(params.feature_means(j)));
            if (sd <= 1e-12 * scale) {
                params.constant_features.push_back(j);
                warn("feature '" + data.feature_names[static_cast<std::size_t>(j)]
                     + "' is constant; centered but not scaled");
            } else {
                params.feature_sds(j) = sd;
            }
        }
    }

    LongitudinalDataset out = data;
    out.x = params.transform_features(data.x);
    out.y = params.transform_responses(data.y);
    return {std::move(out), std::move(params)};
}

} // namespace tgl
