#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "uqr/mlp.hpp"

namespace uqr {

enum class PredictorKind { standard, mc_dropout, deep_ensemble };

std::string to_string(PredictorKind kind);
PredictorKind predictor_kind_from_string(const std::string& s);

// S x 2 matrix of class-probability rows: one row per forward pass (MC
// Dropout, t = 1..T) or ensemble member (m = 1..M). Rows sum to 1.
struct PredictiveMatrix {
    std::vector<std::array<double, 2>> rows;
    PredictorKind source = PredictorKind::standard;

    std::size_t sample_count() const { return rows.size(); }
    void validate() const;  // throws InvariantError on malformed rows
};

// Entropy decomposition in bits: total = data + model.
struct UncertaintyTriple {
    double total = 0.0;
    double data = 0.0;
    double model = 0.0;
};

PredictiveMatrix predict_standard(const Mlp& model, const std::vector<double>& x);
PredictiveMatrix predict_mc_dropout(const Mlp& model, const std::vector<double>& x,
                                    std::size_t passes, std::uint64_t seed);
PredictiveMatrix predict_deep_ensemble(const std::vector<Mlp>& models, const std::vector<double>& x);

// Column-wise mean; the mixture distribution the predicted label comes from.
std::array<double, 2> mean_prediction(const PredictiveMatrix& pm);

// Predicted label: class 1 iff mean class-1 probability > 0.5 (ties -> 0).
int predicted_label(const std::array<double, 2>& mean);

// Shannon entropy in bits, 0 log 0 := 0. Throws if the vector is not a
// distribution (entries in [0,1], sum within 1e-9 of 1).
double entropy_bits(const std::array<double, 2>& p);

UncertaintyTriple decompose(const PredictiveMatrix& pm);

// How batch_uncertainty turns inputs into predictive samples.
struct PredictorSpec {
    PredictorKind kind = PredictorKind::standard;
    std::size_t mc_passes = 128;  // T, used by mc_dropout only
};

struct BatchResult {
    std::array<double, 2> mean;
    int predicted;
    UncertaintyTriple uncertainty;
};

// Element i equals the single-input pipeline on inputs[i]; the MC Dropout
// stream for input i is seeded with seed ^ i.
std::vector<BatchResult> batch_uncertainty(const PredictorSpec& spec, const std::vector<Mlp>& models,
                                           const std::vector<std::vector<double>>& inputs,
                                           std::uint64_t seed);

// CSV per the batch interface: obs_id, p_class1, pred_label, true_label,
// u_total, u_data, u_model (floats with 9 significant digits).
void write_uncertainty_csv(const std::string& path, const std::vector<BatchResult>& results,
                           const std::vector<int>& true_labels);

struct UncertaintyRow {
    std::uint64_t obs_id = 0;
    double p_class1 = 0.0;
    int pred_label = 0;
    int true_label = 0;
    UncertaintyTriple uncertainty;
};

std::vector<UncertaintyRow> read_uncertainty_csv(const std::string& path);

}  // namespace uqr
