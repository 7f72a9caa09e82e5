#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "uqr/dataset.hpp"
#include "uqr/mlp.hpp"
#include "uqr/rejection.hpp"
#include "uqr/uncertainty.hpp"

namespace uqr {

// One named test condition: either a synthetic shift preset or a CSV path.
struct TestSetSpec {
    std::string name;
    ShiftSpec shift;      // used when the experiment is synthetic
    std::string csv_path; // used otherwise
};

struct ExperimentConfig {
    bool synthetic = true;
    std::size_t train_n = 2000;
    std::size_t test_n = 1000;
    TwoRegionSpec base;
    std::string train_csv;
    std::vector<TestSetSpec> test_sets;  // defaults to none/small/large presets

    MlpConfig mlp;
    std::vector<PredictorKind> methods = {PredictorKind::standard, PredictorKind::mc_dropout,
                                          PredictorKind::deep_ensemble};
    std::size_t mc_passes = 128;    // T
    std::size_t ensemble_size = 10; // M
    std::size_t runs = 10;
    std::uint64_t seed = 42;
    std::string out_dir = "uqr_out";
    std::vector<double> rejection_grid = default_rejection_grid();

    void validate() const;
    static ExperimentConfig from_json_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);
};

// Fixed 20-bin histogram over [0, 1] bits.
struct UncertaintyHistogram {
    static constexpr std::size_t kBins = 20;
    std::array<std::uint64_t, kBins> counts{};
    std::uint64_t mass = 0;
    double mean = 0.0;

    void add(double value);
};

struct RunResult {
    double accuracy = 0.0;
    double mean_total = 0.0;
    double mean_data = 0.0;
    double mean_model = 0.0;
    RejectionCurve curve;
};

struct CellResult {  // one (method, test set) cell
    std::vector<RunResult> runs;
    UncertaintyHistogram hist_total;
    UncertaintyHistogram hist_data;
    UncertaintyHistogram hist_model;

    double accuracy_mean() const;
    double accuracy_stderr() const;
};

struct ExperimentReport {
    ExperimentConfig config;
    // keyed by (method name, test set name), in config order
    std::map<std::string, std::map<std::string, CellResult>> cells;
};

// Runs the full pipeline `runs` times with derived seeds and, when out_dir
// is nonempty, writes report.json, histogram CSVs, per-run curve CSVs, and
// summary.csv under it.
ExperimentReport run_experiment(const ExperimentConfig& config);

std::string report_to_json(const ExperimentReport& report);

// Seed scheme shared by the CLI and the experiment: run r uses
// base + 1000 * r; ensemble member m of a run adds m on top.
std::uint64_t run_base_seed(std::uint64_t base, std::size_t run);

// Trains the shared standard/MC-Dropout model plus M ensemble members.
// Member m uses seed base_seed + m; members train concurrently.
struct TrainedModels {
    Mlp standard;                // also serves MC Dropout
    std::vector<Mlp> ensemble;   // M members
};
TrainedModels train_models(const MlpConfig& mlp, const Dataset& train, std::uint64_t base_seed,
                           std::size_t ensemble_size);

}  // namespace uqr
