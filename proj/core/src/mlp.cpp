#include "uqr/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "uqr/errors.hpp"

namespace uqr {

namespace {

constexpr double kEpsClip = 1e-7;  // clamp on p before logs in the loss

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Hidden activations for every layer under the given masks. activations[0]
// is the input; activations[l+1] the (masked) output of hidden layer l; the
// final entry is the single sigmoid probability.
struct ForwardCache {
    std::vector<std::vector<double>> activations;
    double p = 0.5;
};

ForwardCache forward_cached(const Mlp& model, const std::vector<double>& x, const DropoutMasks& masks) {
    if (x.size() != model.config.input_dim) {
        throw ConfigError("input has " + std::to_string(x.size()) + " features, model expects " +
                          std::to_string(model.config.input_dim));
    }
    ForwardCache cache;
    cache.activations.reserve(model.layer_count());
    cache.activations.push_back(x);

    const std::size_t hidden_layers = model.config.hidden_dims.size();
    for (std::size_t l = 0; l < hidden_layers; ++l) {
        const WeightMatrix& w = model.weights[l];
        const std::vector<double>& in = cache.activations.back();
        std::vector<double> out(w.fan_out, 0.0);
        for (std::size_t i = 0; i < w.fan_in; ++i) {
            const double xi = in[i];
            if (xi == 0.0) continue;
            const double* row = &w.values[i * w.fan_out];
            for (std::size_t o = 0; o < w.fan_out; ++o) out[o] += xi * row[o];
        }
        for (std::size_t o = 0; o < w.fan_out; ++o) {
            double a = out[o] + model.biases[l][o];
            a = a > 0.0 ? a : 0.0;  // ReLU
            if (!masks.empty()) a *= masks[l][o];
            out[o] = a;
        }
        cache.activations.push_back(std::move(out));
    }

    const WeightMatrix& w_out = model.weights.back();
    const std::vector<double>& last = cache.activations.back();
    double z = model.biases.back()[0];
    for (std::size_t i = 0; i < w_out.fan_in; ++i) z += last[i] * w_out.values[i];
    cache.p = sigmoid(z);
    return cache;
}

}  // namespace

void MlpConfig::validate() const {
    if (input_dim == 0) throw ConfigError("input_dim must be positive");
    if (hidden_dims.empty()) throw ConfigError("at least one hidden layer required");
    for (const std::size_t h : hidden_dims)
        if (h == 0) throw ConfigError("hidden layer width must be positive");
    if (dropout_rates.size() != hidden_dims.size()) {
        throw ConfigError("need one dropout rate per hidden layer");
    }
    for (const double r : dropout_rates)
        if (!(r >= 0.0 && r < 1.0)) throw ConfigError("dropout rates must lie in [0, 1)");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (epochs == 0) throw ConfigError("epochs must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1 must lie in (0, 1)");
    if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2 must lie in (0, 1)");
    if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be positive");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw ConfigError("validation_fraction must lie in [0, 1)");
    }
}

WeightMatrix glorot_init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    WeightMatrix w;
    w.fan_in = fan_in;
    w.fan_out = fan_out;
    w.values.resize(fan_in * fan_out);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : w.values) v = rng.uniform(-limit, limit);
    return w;
}

Mlp make_mlp(const MlpConfig& config, Rng& rng) {
    config.validate();
    Mlp model;
    model.config = config;
    std::vector<std::size_t> dims;
    dims.push_back(config.input_dim);
    dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
    dims.push_back(1);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        model.weights.push_back(glorot_init(dims[l], dims[l + 1], rng));
        model.biases.emplace_back(dims[l + 1], 0.0);
    }
    return model;
}

DropoutMasks sample_dropout_masks(const MlpConfig& config, Rng& rng) {
    DropoutMasks masks(config.hidden_dims.size());
    for (std::size_t l = 0; l < config.hidden_dims.size(); ++l) {
        const double rate = config.dropout_rates[l];
        const double keep_scale = rate > 0.0 ? 1.0 / (1.0 - rate) : 1.0;
        masks[l].resize(config.hidden_dims[l]);
        for (double& m : masks[l]) m = (rate > 0.0 && rng.bernoulli(rate)) ? 0.0 : keep_scale;
    }
    return masks;
}

double forward(const Mlp& model, const std::vector<double>& x, bool dropout_active, Rng& rng) {
    if (!dropout_active) return forward_cached(model, x, {}).p;
    return forward_cached(model, x, sample_dropout_masks(model.config, rng)).p;
}

double forward_with_masks(const Mlp& model, const std::vector<double>& x, const DropoutMasks& masks) {
    return forward_cached(model, x, masks).p;
}

double bce_loss(double p, int y) {
    const double pc = std::clamp(p, kEpsClip, 1.0 - kEpsClip);
    return -(y == 1 ? std::log(pc) : std::log(1.0 - pc));
}

Gradients gradients(const Mlp& model, const std::vector<std::vector<double>>& xs,
                    const std::vector<int>& ys, const std::vector<DropoutMasks>& masks) {
    if (xs.size() != ys.size() || (!masks.empty() && masks.size() != xs.size())) {
        throw ConfigError("batch features, labels, and masks must have equal length");
    }
    if (xs.empty()) throw ConfigError("cannot take gradients of an empty batch");

    Gradients g;
    for (const WeightMatrix& w : model.weights) {
        g.weights.push_back({w.fan_in, w.fan_out, std::vector<double>(w.values.size(), 0.0)});
    }
    for (const auto& b : model.biases) g.biases.emplace_back(b.size(), 0.0);

    const std::size_t hidden_layers = model.config.hidden_dims.size();
    const double inv_n = 1.0 / static_cast<double>(xs.size());

    static const DropoutMasks no_masks;
    for (std::size_t s = 0; s < xs.size(); ++s) {
        const DropoutMasks& mask = masks.empty() ? no_masks : masks[s];
        const ForwardCache cache = forward_cached(model, xs[s], mask);

        // d(mean BCE)/d(logit) for sigmoid + cross-entropy
        double delta_out = (cache.p - static_cast<double>(ys[s])) * inv_n;

        const WeightMatrix& w_out = model.weights.back();
        const std::vector<double>& last = cache.activations[hidden_layers];
        for (std::size_t i = 0; i < w_out.fan_in; ++i) {
            g.weights.back().values[i] += delta_out * last[i];
        }
        g.biases.back()[0] += delta_out;

        // Backpropagate through hidden layers; the mask factor carries both
        // the drop and the inverted-dropout scale.
        std::vector<double> delta(w_out.fan_in);
        for (std::size_t i = 0; i < w_out.fan_in; ++i) delta[i] = delta_out * w_out.values[i];

        for (std::size_t l = hidden_layers; l-- > 0;) {
            const WeightMatrix& w = model.weights[l];
            const std::vector<double>& in = cache.activations[l];
            const std::vector<double>& out = cache.activations[l + 1];

            for (std::size_t o = 0; o < w.fan_out; ++o) {
                // out[o] > 0 iff the ReLU was active and the unit survived
                if (out[o] <= 0.0) {
                    delta[o] = 0.0;
                    continue;
                }
                if (!mask.empty()) delta[o] *= mask[l][o];
                g.biases[l][o] += delta[o];
            }
            for (std::size_t i = 0; i < w.fan_in; ++i) {
                const double xi = in[i];
                if (xi != 0.0) {
                    double* grow = &g.weights[l].values[i * w.fan_out];
                    const double* drow = delta.data();
                    for (std::size_t o = 0; o < w.fan_out; ++o) grow[o] += xi * drow[o];
                }
            }
            if (l > 0) {
                std::vector<double> prev(w.fan_in, 0.0);
                for (std::size_t i = 0; i < w.fan_in; ++i) {
                    const double* row = &w.values[i * w.fan_out];
                    double acc = 0.0;
                    for (std::size_t o = 0; o < w.fan_out; ++o) acc += row[o] * delta[o];
                    prev[i] = acc;
                }
                delta = std::move(prev);
            }
        }
    }
    return g;
}

AdamState AdamState::zeros_like(const Mlp& model) {
    AdamState st;
    for (const WeightMatrix& w : model.weights) {
        st.m_weights.push_back({w.fan_in, w.fan_out, std::vector<double>(w.values.size(), 0.0)});
        st.v_weights.push_back({w.fan_in, w.fan_out, std::vector<double>(w.values.size(), 0.0)});
    }
    for (const auto& b : model.biases) {
        st.m_biases.emplace_back(b.size(), 0.0);
        st.v_biases.emplace_back(b.size(), 0.0);
    }
    return st;
}

namespace {

void adam_update(std::vector<double>& params, const std::vector<double>& grad,
                 std::vector<double>& m, std::vector<double>& v, const MlpConfig& cfg,
                 double bc1, double bc2) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * grad[i];
        v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
    }
}

}  // namespace

void adam_step(Mlp& model, const Gradients& grads, AdamState& state) {
    state.t += 1;
    const MlpConfig& cfg = model.config;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t));
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        adam_update(model.weights[l].values, grads.weights[l].values, state.m_weights[l].values,
                    state.v_weights[l].values, cfg, bc1, bc2);
        adam_update(model.biases[l], grads.biases[l], state.m_biases[l], state.v_biases[l], cfg, bc1, bc2);
    }
}

namespace {

double mean_loss(const Mlp& model, const std::vector<std::vector<double>>& xs,
                 const std::vector<int>& ys) {
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        total += bce_loss(forward_cached(model, xs[i], {}).p, ys[i]);
    }
    return total / static_cast<double>(xs.size());
}

}  // namespace

std::pair<Mlp, TrainReport> train(const MlpConfig& config, const Dataset& data) {
    config.validate();
    if (data.size() == 0) throw ConfigError("cannot train on an empty dataset");
    for (const int y : data.labels)
        if (y != 0 && y != 1) throw ConfigError("labels must be 0 or 1");

    const std::size_t n = data.size();
    std::size_t n_val = static_cast<std::size_t>(std::llround(config.validation_fraction *
                                                              static_cast<double>(n)));
    if (n_val >= n) n_val = n - 1;
    if (n_val == 0 && config.early_stop_patience > 0) {
        throw ConfigError("early stopping needs a nonempty validation split");
    }

    Rng rng(mix64(config.seed));

    // Seeded validation split
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    std::vector<std::vector<double>> train_x, val_x;
    std::vector<int> train_y, val_y;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t idx = order[i];
        if (i < n_val) {
            val_x.push_back(data.features[idx]);
            val_y.push_back(data.labels[idx]);
        } else {
            train_x.push_back(data.features[idx]);
            train_y.push_back(data.labels[idx]);
        }
    }

    Mlp model = make_mlp(config, rng);
    AdamState state = AdamState::zeros_like(model);
    TrainReport report;

    Mlp best_model = model;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t best_epoch = 0;
    std::size_t epochs_since_best = 0;

    std::vector<std::size_t> batch_order(train_x.size());
    std::iota(batch_order.begin(), batch_order.end(), std::size_t{0});

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        rng.shuffle(batch_order);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < batch_order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(start + config.batch_size, batch_order.size());
            std::vector<std::vector<double>> bx;
            std::vector<int> by;
            std::vector<DropoutMasks> bmasks;
            bx.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                bx.push_back(train_x[batch_order[i]]);
                by.push_back(train_y[batch_order[i]]);
                bmasks.push_back(sample_dropout_masks(config, rng));
            }
            for (std::size_t i = 0; i < bx.size(); ++i) {
                epoch_loss += bce_loss(forward_with_masks(model, bx[i], bmasks[i]), by[i]);
            }
            seen += bx.size();
            const Gradients g = gradients(model, bx, by, bmasks);
            adam_step(model, g, state);
        }
        report.train_loss_per_epoch.push_back(epoch_loss / static_cast<double>(seen));
        report.stopped_epoch = epoch;

        if (n_val > 0) {
            const double val_loss = mean_loss(model, val_x, val_y);
            report.val_loss_per_epoch.push_back(val_loss);
            if (val_loss < best_val) {
                best_val = val_loss;
                best_model = model;
                best_epoch = epoch;
                epochs_since_best = 0;
            } else {
                ++epochs_since_best;
            }
            if (config.early_stop_patience > 0 && epochs_since_best >= config.early_stop_patience) {
                break;
            }
        }
    }

    if (config.early_stop_patience > 0 && best_epoch > 0) {
        report.best_epoch = best_epoch;
        return {std::move(best_model), std::move(report)};
    }
    report.best_epoch = report.stopped_epoch;
    return {std::move(model), std::move(report)};
}

}  // namespace uqr
