#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace uqr {

// Row-major N x D feature matrix with binary labels.
struct Dataset {
    std::vector<std::vector<double>> features;  // N rows of D values
    std::vector<int> labels;                    // values in {0, 1}
    std::vector<std::string> feature_names;     // D names

    std::size_t size() const { return features.size(); }
    std::size_t dim() const { return features.empty() ? feature_names.size() : features.front().size(); }
};

enum class ShiftLevel { none, small, large };

std::string to_string(ShiftLevel level);
ShiftLevel shift_level_from_string(const std::string& s);

// Parameters of one synthetic shift, in units of the base generator's
// cluster standard deviation.
struct ShiftSpec {
    ShiftLevel level = ShiftLevel::none;
    std::vector<double> mean_shift = {0.0, 0.0};
    double rotation_degrees = 0.0;
    double label_flip_rate = 0.0;   // in [0, 0.5]
    double class_prior = 0.56;      // probability of class 1, in (0, 1)

    static ShiftSpec preset(ShiftLevel level);
};

// Parameters of the bounded two-cluster generator (the base distribution
// every shifted test set derives from).
struct TwoRegionSpec {
    double class1_prior = 0.56;
    std::vector<double> class0_mean = {0.0, 0.0};
    std::vector<double> class1_mean = {2.5, 0.0};
    double cluster_std = 1.0;
};

// Fitted z-score parameters. Constant features are dropped, not divided by 0.
struct StandardizerParams {
    std::vector<double> mean;
    std::vector<double> stddev;
    std::vector<std::size_t> kept_columns;     // indices into the fitted dataset
    std::vector<std::string> dropped_features; // zero-variance, excluded
};

Dataset load_csv(const std::string& path);
void save_csv(const Dataset& ds, const std::string& path);

StandardizerParams standardize_fit(const Dataset& train);
Dataset standardize_apply(const StandardizerParams& params, const Dataset& ds);

// Seeded shuffle then cut: first part holds round(fraction * N) rows.
std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, std::uint64_t seed);

Dataset gen_two_region(std::size_t n, std::uint64_t seed, const TwoRegionSpec& spec = {});
Dataset gen_shifted(const TwoRegionSpec& base, const ShiftSpec& shift, std::size_t n, std::uint64_t seed);

}  // namespace uqr
