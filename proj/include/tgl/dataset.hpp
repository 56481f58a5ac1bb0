#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tgl/matrix.hpp"

namespace tgl {

/// Patients in rows; X columns are predictors, Y columns are time points.
struct LongitudinalDataset
{
    DenseMatrix x;
    DenseMatrix y;
    std::vector<std::string> feature_names;
    std::vector<double> time_labels; // hours, strictly increasing
    std::optional<std::vector<Index>> informative_truth;

    Index n_patients() const noexcept { return x.rows(); }
    Index n_features() const noexcept { return x.cols(); }
    Index n_times() const noexcept { return y.cols(); }

    /// Throws InputError when any structural invariant is violated.
    void validate() const;
};

/// Builds a dataset with generated names (x0, x1, ...) and labels (1, 2, ...).
LongitudinalDataset make_dataset(DenseMatrix x, DenseMatrix y);

/// Patient subset in the order given by `rows`.
LongitudinalDataset take_rows(const LongitudinalDataset& data, std::span<const Index> rows);

enum class Scaling
{
    standardize, // center X and scale to unit sample sd; center Y
    center,      // center X and Y only
    none,        // leave data untouched, no intercept
};

std::string to_string(Scaling scaling);
Scaling scaling_from_string(const std::string& name);

struct StandardizationParams
{
    DenseVector feature_means;
    DenseVector feature_sds;
    DenseVector response_means;
    std::vector<Index> constant_features;
    Scaling scaling = Scaling::standardize;

    /// (x - mean) / sd, column-wise.
    DenseMatrix transform_features(const DenseMatrix& x) const;
    DenseMatrix inverse_transform_features(const DenseMatrix& x_std) const;
    DenseMatrix transform_responses(const DenseMatrix& y) const;
    DenseMatrix inverse_transform_responses(const DenseMatrix& y_centered) const;
};

/**
 * Column statistics use the sample (n - 1) standard deviation. A constant
 * predictor column is centered only, recorded with sd = 1 and reported
 * through a warning.
 */
std::pair<LongitudinalDataset, StandardizationParams>
standardize(const LongitudinalDataset& data, Scaling scaling = Scaling::standardize);

} // namespace tgl
