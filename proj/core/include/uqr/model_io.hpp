#pragma once

#include <string>

#include "uqr/mlp.hpp"

namespace uqr {

// Single JSON document {config, weights, biases}; weights are row-major
// nested arrays and floats carry 17 significant digits so a save/load
// round trip reproduces bit-identical predictions.
std::string model_to_json(const Mlp& model);
Mlp model_from_json(const std::string& text);

void save_model(const Mlp& model, const std::string& path);
Mlp load_model(const std::string& path);

std::string train_report_to_json(const TrainReport& report);
void save_train_report(const TrainReport& report, const std::string& path);

}  // namespace uqr
