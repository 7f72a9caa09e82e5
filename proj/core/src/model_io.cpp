#include "uqr/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "uqr/errors.hpp"

namespace uqr {

namespace {

std::string fmt17(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void append_double_array(std::string& out, const std::vector<double>& values) {
    out += '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        out += fmt17(values[i]);
    }
    out += ']';
}

}  // namespace

std::string model_to_json(const Mlp& model) {
    const MlpConfig& c = model.config;
    std::string out = "{\n  \"config\": {";
    out += "\"input_dim\": " + std::to_string(c.input_dim);
    out += ", \"hidden_dims\": [";
    for (std::size_t i = 0; i < c.hidden_dims.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(c.hidden_dims[i]);
    }
    out += "], \"dropout_rates\": ";
    append_double_array(out, c.dropout_rates);
    out += ", \"learning_rate\": " + fmt17(c.learning_rate);
    out += ", \"epochs\": " + std::to_string(c.epochs);
    out += ", \"batch_size\": " + std::to_string(c.batch_size);
    out += ", \"adam_beta1\": " + fmt17(c.adam_beta1);
    out += ", \"adam_beta2\": " + fmt17(c.adam_beta2);
    out += ", \"adam_epsilon\": " + fmt17(c.adam_epsilon);
    out += ", \"early_stop_patience\": " + std::to_string(c.early_stop_patience);
    out += ", \"validation_fraction\": " + fmt17(c.validation_fraction);
    out += ", \"seed\": " + std::to_string(c.seed);
    out += "},\n  \"weights\": [";
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
        if (l) out += ',';
        const WeightMatrix& w = model.weights[l];
        out += "\n    [";
        for (std::size_t i = 0; i < w.fan_in; ++i) {
            if (i) out += ',';
            out += '[';
            for (std::size_t o = 0; o < w.fan_out; ++o) {
                if (o) out += ',';
                out += fmt17(w.at(i, o));
            }
            out += ']';
        }
        out += ']';
    }
    out += "\n  ],\n  \"biases\": [";
    for (std::size_t l = 0; l < model.biases.size(); ++l) {
        if (l) out += ',';
        out += "\n    ";
        append_double_array(out, model.biases[l]);
    }
    out += "\n  ]\n}\n";
    return out;
}

Mlp model_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model JSON parse error: ") + e.what());
    }
    try {
        Mlp model;
        const auto& c = doc.at("config");
        model.config.input_dim = c.at("input_dim").get<std::size_t>();
        model.config.hidden_dims = c.at("hidden_dims").get<std::vector<std::size_t>>();
        model.config.dropout_rates = c.at("dropout_rates").get<std::vector<double>>();
        model.config.learning_rate = c.at("learning_rate").get<double>();
        model.config.epochs = c.at("epochs").get<std::size_t>();
        model.config.batch_size = c.at("batch_size").get<std::size_t>();
        model.config.adam_beta1 = c.at("adam_beta1").get<double>();
        model.config.adam_beta2 = c.at("adam_beta2").get<double>();
        model.config.adam_epsilon = c.at("adam_epsilon").get<double>();
        model.config.early_stop_patience = c.at("early_stop_patience").get<std::size_t>();
        model.config.validation_fraction = c.at("validation_fraction").get<double>();
        model.config.seed = c.at("seed").get<std::uint64_t>();
        model.config.validate();

        for (const auto& rows : doc.at("weights")) {
            WeightMatrix w;
            w.fan_in = rows.size();
            if (w.fan_in == 0) throw ConfigError("empty weight matrix");
            w.fan_out = rows.front().size();
            for (const auto& row : rows) {
                if (row.size() != w.fan_out) throw ConfigError("ragged weight matrix");
                for (const auto& v : row) w.values.push_back(v.get<double>());
            }
            model.weights.push_back(std::move(w));
        }
        for (const auto& b : doc.at("biases")) {
            model.biases.push_back(b.get<std::vector<double>>());
        }

        // Shape chain: input_dim -> hidden dims -> 1
        std::vector<std::size_t> dims;
        dims.push_back(model.config.input_dim);
        dims.insert(dims.end(), model.config.hidden_dims.begin(), model.config.hidden_dims.end());
        dims.push_back(1);
        if (model.weights.size() != dims.size() - 1 || model.biases.size() != dims.size() - 1) {
            throw ConfigError("model has wrong layer count");
        }
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            if (model.weights[l].fan_in != dims[l] || model.weights[l].fan_out != dims[l + 1] ||
                model.biases[l].size() != dims[l + 1]) {
                throw ConfigError("model weight shapes do not chain with the config");
            }
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("model JSON missing or mistyped field: ") + e.what());
    }
}

void save_model(const Mlp& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << model_to_json(model);
}

Mlp load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

std::string train_report_to_json(const TrainReport& report) {
    nlohmann::json doc;
    doc["train_loss_per_epoch"] = report.train_loss_per_epoch;
    doc["val_loss_per_epoch"] = report.val_loss_per_epoch;
    doc["stopped_epoch"] = report.stopped_epoch;
    doc["best_epoch"] = report.best_epoch;
    return doc.dump(2) + "\n";
}

void save_train_report(const TrainReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << train_report_to_json(report);
}

}  // namespace uqr
