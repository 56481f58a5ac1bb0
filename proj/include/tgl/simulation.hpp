#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tgl/dataset.hpp"

namespace tgl::sim {

struct SimulationConfig
{
    Index n_patients = 500;
    Index n_features = 300;
    Index n_informative = 170;
    std::vector<double> time_points{5, 10, 15, 20, 25, 30, 35, 40, 45, 50}; // hours
    std::vector<double> dose_times{0, 17, 34};                              // hours
    double noise_sd = 0.02;
    double train_fraction = 0.70;
    std::uint64_t seed = 42;

    void validate() const;
    /// ⌈train_fraction · n_patients⌉
    Index n_train() const;
};

/// One latent pharmacologic parameter:
///   clamp(softplus(offset + Σ weight·x[index]), lower, upper).
struct ParameterModel
{
    std::string name;
    double offset = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    std::vector<std::pair<Index, double>> loadings;

    double value(const Eigen::Ref<const RowVector<double>>& features) const;
};

struct GroundTruth
{
    std::vector<Index> informative_indices; // ascending
    /// absorption_rate, elimination_rate, amplitude_1..3, baseline.
    std::vector<ParameterModel> parameters;

    const ParameterModel& parameter(const std::string& name) const;
};

struct Cohort
{
    LongitudinalDataset train;
    LongitudinalDataset test;
    GroundTruth truth;
};

double softplus(double z);

/// Double-exponential response of one unit dose, s hours after dosing,
/// scaled so its peak equals 1; zero for s <= 0.
double unit_dose_response(double s, double absorption_rate, double elimination_rate);

/// Noiseless effect curves (rows: patients, columns: time points). The
/// baseline parameter is carried in the ground truth but does not enter
/// the effect.
DenseMatrix effect_curves(const GroundTruth& truth, const DenseMatrix& x,
                          const std::vector<double>& time_points, const std::vector<double>& dose_times);

/**
 * Features are i.i.d. standard Gaussian. Each parameter depends on its own
 * disjoint share of the informative features; the effect sums the three
 * dose responses, and Gaussian noise with sd noise_sd is added per
 * observation. Patients are shuffled and the first ⌈train_fraction·n⌉ form
 * the training set. All randomness comes from one Xoshiro256 stream seeded
 * with cfg.seed.
 */
Cohort simulate_cohort(const SimulationConfig& cfg);

std::string truth_to_json(const GroundTruth& truth);

} // namespace tgl::sim
