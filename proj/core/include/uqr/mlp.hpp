#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "uqr/dataset.hpp"
#include "uqr/rng.hpp"

namespace uqr {

// Dense fan_in x fan_out weight block, row-major (row = input unit).
struct WeightMatrix {
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    std::vector<double> values;  // fan_in * fan_out

    double& at(std::size_t i, std::size_t o) { return values[i * fan_out + o]; }
    double at(std::size_t i, std::size_t o) const { return values[i * fan_out + o]; }
};

struct MlpConfig {
    std::size_t input_dim = 2;
    std::vector<std::size_t> hidden_dims = {64, 64};
    std::vector<double> dropout_rates = {0.4, 0.5};
    double learning_rate = 5e-4;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t early_stop_patience = 5;
    double validation_fraction = 0.1;
    std::uint64_t seed = 0;

    void validate() const;  // throws ConfigError on out-of-range values
};

// Sigmoid-head binary classifier. Immutable after training; safe to share
// across threads for inference.
struct Mlp {
    MlpConfig config;
    std::vector<WeightMatrix> weights;  // layer 0..L: input->h1, ..., hidden->1
    std::vector<std::vector<double>> biases;

    std::size_t layer_count() const { return weights.size(); }
};

struct TrainReport {
    std::vector<double> train_loss_per_epoch;
    std::vector<double> val_loss_per_epoch;
    std::size_t stopped_epoch = 0;  // 1-based count of epochs actually run
    std::size_t best_epoch = 0;     // 1-based epoch the returned weights came from
};

// Per-layer gradient set, shaped exactly like the model parameters.
struct Gradients {
    std::vector<WeightMatrix> weights;
    std::vector<std::vector<double>> biases;
};

// Dropout masks for one forward pass: keep-scale factor per hidden unit
// (0 when dropped, 1/(1-rate) when kept).
using DropoutMasks = std::vector<std::vector<double>>;

// Entries i.i.d. uniform on [-L, L], L = sqrt(6 / (fan_in + fan_out)).
WeightMatrix glorot_init(std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Builds an untrained model: Glorot weights, zero biases.
Mlp make_mlp(const MlpConfig& config, Rng& rng);

DropoutMasks sample_dropout_masks(const MlpConfig& config, Rng& rng);

// Forward pass; when dropout_active, masks are sampled from rng (inverted
// dropout: survivors pre-scaled by 1/(1-rate)).
double forward(const Mlp& model, const std::vector<double>& x, bool dropout_active, Rng& rng);
double forward_with_masks(const Mlp& model, const std::vector<double>& x, const DropoutMasks& masks);

double bce_loss(double p, int y);

// Exact gradient of the mean batch BCE under fixed dropout masks (one mask
// set per observation, shared between forward and backward).
Gradients gradients(const Mlp& model, const std::vector<std::vector<double>>& xs,
                    const std::vector<int>& ys, const std::vector<DropoutMasks>& masks);

struct AdamState {
    std::vector<WeightMatrix> m_weights;
    std::vector<std::vector<double>> m_biases;
    std::vector<WeightMatrix> v_weights;
    std::vector<std::vector<double>> v_biases;
    std::size_t t = 0;

    static AdamState zeros_like(const Mlp& model);
};

void adam_step(Mlp& model, const Gradients& grads, AdamState& state);

std::pair<Mlp, TrainReport> train(const MlpConfig& config, const Dataset& data);

}  // namespace uqr
