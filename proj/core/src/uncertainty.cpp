#include "uqr/uncertainty.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "uqr/errors.hpp"
#include "uqr/rng.hpp"

namespace uqr {

namespace {

constexpr double kRowTolerance = 1e-9;

}  // namespace

std::string to_string(PredictorKind kind) {
    switch (kind) {
        case PredictorKind::standard: return "standard";
        case PredictorKind::mc_dropout: return "mc_dropout";
        case PredictorKind::deep_ensemble: return "deep_ensemble";
    }
    return "standard";
}

PredictorKind predictor_kind_from_string(const std::string& s) {
    if (s == "standard") return PredictorKind::standard;
    if (s == "mc_dropout") return PredictorKind::mc_dropout;
    if (s == "deep_ensemble") return PredictorKind::deep_ensemble;
    throw ConfigError("unknown method '" + s + "' (expected standard|mc_dropout|deep_ensemble)");
}

void PredictiveMatrix::validate() const {
    if (rows.empty()) throw InvariantError("predictive matrix must have at least one row");
    if (source == PredictorKind::standard && rows.size() != 1) {
        throw InvariantError("standard predictor produces exactly one row");
    }
    for (const auto& row : rows) {
        for (const double v : row) {
            if (!(v >= 0.0 && v <= 1.0)) throw InvariantError("probability outside [0, 1]");
        }
        if (std::abs(row[0] + row[1] - 1.0) > kRowTolerance) {
            throw InvariantError("predictive row does not sum to 1");
        }
    }
}

PredictiveMatrix predict_standard(const Mlp& model, const std::vector<double>& x) {
    Rng unused(0);
    const double p = forward(model, x, false, unused);
    return {{{p, 1.0 - p}}, PredictorKind::standard};
}

PredictiveMatrix predict_mc_dropout(const Mlp& model, const std::vector<double>& x,
                                    std::size_t passes, std::uint64_t seed) {
    if (passes == 0) throw ConfigError("MC Dropout needs at least one forward pass");
    PredictiveMatrix pm;
    pm.source = PredictorKind::mc_dropout;
    pm.rows.reserve(passes);
    Rng rng(mix64(seed));
    for (std::size_t t = 0; t < passes; ++t) {
        const double p = forward(model, x, true, rng);
        pm.rows.push_back({p, 1.0 - p});
    }
    return pm;
}

PredictiveMatrix predict_deep_ensemble(const std::vector<Mlp>& models, const std::vector<double>& x) {
    if (models.empty()) throw ConfigError("ensemble needs at least one member");
    const std::size_t input_dim = models.front().config.input_dim;
    PredictiveMatrix pm;
    pm.source = PredictorKind::deep_ensemble;
    pm.rows.reserve(models.size());
    Rng unused(0);
    for (const Mlp& member : models) {
        if (member.config.input_dim != input_dim) {
            throw ConfigError("ensemble members disagree on input dimension");
        }
        const double p = forward(member, x, false, unused);
        pm.rows.push_back({p, 1.0 - p});
    }
    return pm;
}

std::array<double, 2> mean_prediction(const PredictiveMatrix& pm) {
    pm.validate();
    double p1 = 0.0;
    for (const auto& row : pm.rows) p1 += row[0];
    p1 /= static_cast<double>(pm.rows.size());
    return {p1, 1.0 - p1};
}

int predicted_label(const std::array<double, 2>& mean) { return mean[0] > 0.5 ? 1 : 0; }

double entropy_bits(const std::array<double, 2>& p) {
    double sum = 0.0;
    for (const double v : p) {
        if (!(v >= 0.0)) throw InvariantError("entropy input has a negative entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) throw InvariantError("entropy input does not sum to 1");
    double h = 0.0;
    for (const double v : p) {
        if (v > 0.0) h -= v * std::log2(v);
    }
    return h;
}

UncertaintyTriple decompose(const PredictiveMatrix& pm) {
    pm.validate();
    UncertaintyTriple u;
    u.total = entropy_bits(mean_prediction(pm));
    double data = 0.0;
    for (const auto& row : pm.rows) data += entropy_bits(row);
    u.data = data / static_cast<double>(pm.rows.size());
    u.model = u.total - u.data;
    if (u.model < 0.0) {
        if (u.model < -kRowTolerance) {
            throw InvariantError("model uncertainty below the Jensen round-off tolerance");
        }
        // Round-off clamp; keep total = data + model additive.
        u.model = 0.0;
        u.data = u.total;
    }
    return u;
}

std::vector<BatchResult> batch_uncertainty(const PredictorSpec& spec, const std::vector<Mlp>& models,
                                           const std::vector<std::vector<double>>& inputs,
                                           std::uint64_t seed) {
    if (models.empty()) throw ConfigError("batch_uncertainty needs at least one model");
    std::vector<BatchResult> out;
    out.reserve(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        PredictiveMatrix pm;
        switch (spec.kind) {
            case PredictorKind::standard:
                pm = predict_standard(models.front(), inputs[i]);
                break;
            case PredictorKind::mc_dropout:
                pm = predict_mc_dropout(models.front(), inputs[i], spec.mc_passes,
                                        seed ^ static_cast<std::uint64_t>(i));
                break;
            case PredictorKind::deep_ensemble:
                pm = predict_deep_ensemble(models, inputs[i]);
                break;
        }
        BatchResult r;
        r.mean = mean_prediction(pm);
        r.predicted = predicted_label(r.mean);
        r.uncertainty = decompose(pm);
        out.push_back(r);
    }
    return out;
}

void write_uncertainty_csv(const std::string& path, const std::vector<BatchResult>& results,
                           const std::vector<int>& true_labels) {
    if (results.size() != true_labels.size()) {
        throw ConfigError("results and labels must have the same length");
    }
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << "obs_id,p_class1,pred_label,true_label,u_total,u_data,u_model\n";
    char buf[128];
    for (std::size_t i = 0; i < results.size(); ++i) {
        const BatchResult& r = results[i];
        std::snprintf(buf, sizeof buf, "%zu,%.9g,%d,%d,%.9g,%.9g,%.9g\n", i, r.mean[0], r.predicted,
                      true_labels[i], r.uncertainty.total, r.uncertainty.data, r.uncertainty.model);
        out << buf;
    }
}

}  // namespace uqr
