#include "uqr/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>

#include "uqr/errors.hpp"
#include "uqr/rng.hpp"

namespace uqr {

namespace {

std::string fmt9(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
    mlp.validate();
    if (runs == 0) throw ConfigError("runs must be >= 1");
    if (methods.empty()) throw ConfigError("at least one method required");
    if (mc_passes == 0) throw ConfigError("T (mc_passes) must be >= 1");
    if (ensemble_size == 0) throw ConfigError("M (ensemble_size) must be >= 1");
    if (test_sets.empty()) throw ConfigError("at least one test set required");
    if (synthetic) {
        if (train_n < 4 || test_n < 4) throw ConfigError("synthetic sets need n >= 4");
    } else if (train_csv.empty()) {
        throw ConfigError("non-synthetic experiments need a train_csv path");
    }
    double prev = -1.0;
    for (const double q : rejection_grid) {
        if (!(q >= 0.0 && q <= 0.95) || q <= prev) {
            throw ConfigError("rejection grid must be strictly increasing within [0, 0.95]");
        }
        prev = q;
    }
}

namespace {

ShiftSpec shift_from_json(const nlohmann::json& j) {
    ShiftSpec s;
    if (j.contains("level")) s = ShiftSpec::preset(shift_level_from_string(j.at("level").get<std::string>()));
    if (j.contains("mean_shift")) s.mean_shift = j.at("mean_shift").get<std::vector<double>>();
    if (j.contains("rotation_degrees")) s.rotation_degrees = j.at("rotation_degrees").get<double>();
    if (j.contains("label_flip_rate")) s.label_flip_rate = j.at("label_flip_rate").get<double>();
    if (j.contains("class_prior")) s.class_prior = j.at("class_prior").get<double>();
    return s;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig cfg;
    // default three-shift design
    cfg.test_sets = {{"none", ShiftSpec::preset(ShiftLevel::none), ""},
                     {"small", ShiftSpec::preset(ShiftLevel::small), ""},
                     {"large", ShiftSpec::preset(ShiftLevel::large), ""}};
    try {
        if (doc.contains("data")) {
            const auto& d = doc.at("data");
            if (d.contains("train_csv")) {
                cfg.synthetic = false;
                cfg.train_csv = d.at("train_csv").get<std::string>();
                cfg.test_sets.clear();
                for (const auto& [name, path] : d.at("test_csvs").items()) {
                    cfg.test_sets.push_back({name, ShiftSpec{}, path.get<std::string>()});
                }
            } else {
                if (d.contains("train_n")) cfg.train_n = d.at("train_n").get<std::size_t>();
                if (d.contains("test_n")) cfg.test_n = d.at("test_n").get<std::size_t>();
                if (d.contains("shifts")) {
                    cfg.test_sets.clear();
                    for (const auto& [name, spec] : d.at("shifts").items()) {
                        cfg.test_sets.push_back({name, shift_from_json(spec), ""});
                    }
                }
            }
        }
        if (doc.contains("mlp")) {
            const auto& m = doc.at("mlp");
            MlpConfig& c = cfg.mlp;
            if (m.contains("input_dim")) c.input_dim = m.at("input_dim").get<std::size_t>();
            if (m.contains("hidden_dims")) c.hidden_dims = m.at("hidden_dims").get<std::vector<std::size_t>>();
            if (m.contains("dropout_rates")) c.dropout_rates = m.at("dropout_rates").get<std::vector<double>>();
            if (m.contains("learning_rate")) c.learning_rate = m.at("learning_rate").get<double>();
            if (m.contains("epochs")) c.epochs = m.at("epochs").get<std::size_t>();
            if (m.contains("batch_size")) c.batch_size = m.at("batch_size").get<std::size_t>();
            if (m.contains("adam_beta1")) c.adam_beta1 = m.at("adam_beta1").get<double>();
            if (m.contains("adam_beta2")) c.adam_beta2 = m.at("adam_beta2").get<double>();
            if (m.contains("adam_epsilon")) c.adam_epsilon = m.at("adam_epsilon").get<double>();
            if (m.contains("early_stop_patience"))
                c.early_stop_patience = m.at("early_stop_patience").get<std::size_t>();
            if (m.contains("validation_fraction"))
                c.validation_fraction = m.at("validation_fraction").get<double>();
        }
        if (doc.contains("methods")) {
            cfg.methods.clear();
            for (const auto& m : doc.at("methods")) {
                cfg.methods.push_back(predictor_kind_from_string(m.get<std::string>()));
            }
        }
        if (doc.contains("T")) cfg.mc_passes = doc.at("T").get<std::size_t>();
        if (doc.contains("M")) cfg.ensemble_size = doc.at("M").get<std::size_t>();
        if (doc.contains("runs")) cfg.runs = doc.at("runs").get<std::size_t>();
        if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("out_dir")) cfg.out_dir = doc.at("out_dir").get<std::string>();
        if (doc.contains("rejection_grid"))
            cfg.rejection_grid = doc.at("rejection_grid").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

void UncertaintyHistogram::add(double value) {
    const double clipped = std::clamp(value, 0.0, 1.0);
    auto bin = static_cast<std::size_t>(clipped * kBins);
    if (bin >= kBins) bin = kBins - 1;  // value exactly 1.0
    counts[bin] += 1;
    mean += (value - mean) / static_cast<double>(++mass);
}

double CellResult::accuracy_mean() const {
    double m = 0.0;
    for (const auto& r : runs) m += r.accuracy;
    return m / static_cast<double>(runs.size());
}

double CellResult::accuracy_stderr() const {
    if (runs.size() < 2) return 0.0;
    const double m = accuracy_mean();
    double var = 0.0;
    for (const auto& r : runs) var += (r.accuracy - m) * (r.accuracy - m);
    var /= static_cast<double>(runs.size() - 1);
    return std::sqrt(var / static_cast<double>(runs.size()));
}

std::uint64_t run_base_seed(std::uint64_t base, std::size_t run) {
    return base + 1000ULL * static_cast<std::uint64_t>(run);
}

TrainedModels train_models(const MlpConfig& mlp, const Dataset& train, std::uint64_t base_seed,
                           std::size_t ensemble_size) {
    TrainedModels out;
    {
        MlpConfig cfg = mlp;
        cfg.seed = base_seed;
        out.standard = train(cfg, train).first;
    }
    std::vector<std::future<Mlp>> futures;
    futures.reserve(ensemble_size);
    for (std::size_t m = 0; m < ensemble_size; ++m) {
        futures.push_back(std::async(std::launch::async, [&mlp, &train, base_seed, m] {
            MlpConfig cfg = mlp;
            cfg.seed = base_seed + static_cast<std::uint64_t>(m);
            return uqr::train(cfg, train).first;
        }));
    }
    for (auto& f : futures) out.ensemble.push_back(f.get());
    return out;
}

namespace {

EvaluatedSet evaluate(const std::vector<BatchResult>& results, const std::vector<int>& labels) {
    EvaluatedSet es;
    es.records.reserve(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        es.records.push_back({i, results[i].predicted == labels[i], results[i].uncertainty.total});
    }
    return es;
}

void write_histogram_csv(const std::string& path, const UncertaintyHistogram& hist) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < UncertaintyHistogram::kBins; ++b) {
        out << fmt9(static_cast<double>(b) / UncertaintyHistogram::kBins) << ','
            << fmt9(static_cast<double>(b + 1) / UncertaintyHistogram::kBins) << ','
            << hist.counts[b] << '\n';
    }
}

nlohmann::json histogram_json(const UncertaintyHistogram& hist) {
    nlohmann::json j;
    j["counts"] = hist.counts;
    j["mass"] = hist.mass;
    j["mean"] = hist.mean;
    return j;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    ExperimentReport report;
    report.config = config;

    namespace fs = std::filesystem;
    const bool write_files = !config.out_dir.empty();
    if (write_files) {
        std::error_code ec;
        fs::create_directories(config.out_dir, ec);
        if (ec) throw ConfigError("cannot create output directory '" + config.out_dir + "'");
    }

    Dataset csv_train;
    std::vector<Dataset> csv_tests;
    if (!config.synthetic) {
        csv_train = load_csv(config.train_csv);
        for (const auto& ts : config.test_sets) csv_tests.push_back(load_csv(ts.csv_path));
    }

    for (std::size_t run = 0; run < config.runs; ++run) {
        const std::uint64_t base = run_base_seed(config.seed, run);

        Dataset train_raw;
        std::vector<Dataset> tests_raw;
        if (config.synthetic) {
            train_raw = gen_two_region(config.train_n, mix64(base ^ 0x747261696eULL), config.base);
            for (std::size_t t = 0; t < config.test_sets.size(); ++t) {
                tests_raw.push_back(gen_shifted(config.base, config.test_sets[t].shift, config.test_n,
                                                mix64(base ^ (0x74657374ULL + t))));
            }
        } else {
            train_raw = csv_train;
            tests_raw = csv_tests;
        }

        const StandardizerParams scaler = standardize_fit(train_raw);
        const Dataset train_std = standardize_apply(scaler, train_raw);

        MlpConfig mlp_cfg = config.mlp;
        mlp_cfg.input_dim = train_std.dim();
        const TrainedModels models = train_models(mlp_cfg, train_std, base, config.ensemble_size);

        for (std::size_t t = 0; t < config.test_sets.size(); ++t) {
            const Dataset test_std = standardize_apply(scaler, tests_raw[t]);
            const std::string& set_name = config.test_sets[t].name;

            for (const PredictorKind method : config.methods) {
                PredictorSpec spec;
                spec.kind = method;
                spec.mc_passes = config.mc_passes;
                const std::vector<Mlp> standard_pool{models.standard};
                const std::vector<Mlp>& pool =
                    method == PredictorKind::deep_ensemble ? models.ensemble : standard_pool;
                const std::uint64_t unc_seed = mix64(base ^ mix64(0x756e63ULL + t * 131 +
                                                                  static_cast<std::size_t>(method)));
                const auto results = batch_uncertainty(spec, pool, test_std.features, unc_seed);

                const EvaluatedSet es = evaluate(results, test_std.labels);
                const std::uint64_t curve_seed = mix64(unc_seed ^ 0x72656a656374ULL);
                RunResult rr;
                rr.curve = sweep_curve(es, config.rejection_grid, curve_seed);
                rr.accuracy = es.accuracy();
                for (const auto& r : results) {
                    rr.mean_total += r.uncertainty.total;
                    rr.mean_data += r.uncertainty.data;
                    rr.mean_model += r.uncertainty.model;
                }
                const auto n = static_cast<double>(results.size());
                rr.mean_total /= n;
                rr.mean_data /= n;
                rr.mean_model /= n;

                CellResult& cell = report.cells[to_string(method)][set_name];
                for (const auto& r : results) {
                    cell.hist_total.add(r.uncertainty.total);
                    cell.hist_data.add(r.uncertainty.data);
                    cell.hist_model.add(r.uncertainty.model);
                }
                if (write_files) {
                    const std::string stem = to_string(method) + "_" + set_name;
                    write_curve_csv((fs::path(config.out_dir) /
                                     ("curve_" + stem + "_run" + std::to_string(run) + ".csv"))
                                        .string(),
                                    rr.curve);
                }
                cell.runs.push_back(std::move(rr));
            }
        }
    }

    if (write_files) {
        for (const auto& [method, sets] : report.cells) {
            for (const auto& [set_name, cell] : sets) {
                const std::string stem = method + "_" + set_name;
                write_histogram_csv((fs::path(config.out_dir) / ("hist_" + stem + "_total.csv")).string(),
                                    cell.hist_total);
                write_histogram_csv((fs::path(config.out_dir) / ("hist_" + stem + "_data.csv")).string(),
                                    cell.hist_data);
                write_histogram_csv((fs::path(config.out_dir) / ("hist_" + stem + "_model.csv")).string(),
                                    cell.hist_model);
            }
        }
        // Summary table: one row per (method, shift), mean ± standard error.
        std::ofstream summary(fs::path(config.out_dir) / "summary.csv");
        summary << "method,test_set,accuracy_mean,accuracy_stderr,u_total_mean,u_data_mean,u_model_mean\n";
        for (const auto& ts : config.test_sets) {
            for (const PredictorKind method : config.methods) {
                const CellResult& cell = report.cells.at(to_string(method)).at(ts.name);
                double ut = 0.0, ud = 0.0, um = 0.0;
                for (const auto& r : cell.runs) {
                    ut += r.mean_total;
                    ud += r.mean_data;
                    um += r.mean_model;
                }
                const auto nr = static_cast<double>(cell.runs.size());
                summary << to_string(method) << ',' << ts.name << ',' << fmt9(cell.accuracy_mean()) << ','
                        << fmt9(cell.accuracy_stderr()) << ',' << fmt9(ut / nr) << ',' << fmt9(ud / nr)
                        << ',' << fmt9(um / nr) << '\n';
            }
        }
        std::ofstream out(fs::path(config.out_dir) / "report.json");
        if (!out) throw ConfigError("cannot write report.json");
        out << report_to_json(report);
    }
    return report;
}

std::string report_to_json(const ExperimentReport& report) {
    nlohmann::json doc;
    doc["seed"] = report.config.seed;
    doc["runs"] = report.config.runs;
    doc["T"] = report.config.mc_passes;
    doc["M"] = report.config.ensemble_size;
    nlohmann::json cells = nlohmann::json::object();
    for (const auto& [method, sets] : report.cells) {
        nlohmann::json per_set = nlohmann::json::object();
        for (const auto& [set_name, cell] : sets) {
            nlohmann::json jc;
            jc["accuracy_mean"] = cell.accuracy_mean();
            jc["accuracy_stderr"] = cell.accuracy_stderr();
            nlohmann::json jruns = nlohmann::json::array();
            for (const auto& r : cell.runs) {
                nlohmann::json jr;
                jr["accuracy"] = r.accuracy;
                jr["u_total_mean"] = r.mean_total;
                jr["u_data_mean"] = r.mean_data;
                jr["u_model_mean"] = r.mean_model;
                nlohmann::json jcurve = nlohmann::json::array();
                for (const auto& pt : r.curve.points) {
                    jcurve.push_back({{"q", pt.fraction},
                                      {"nra", pt.nra},
                                      {"cq", pt.cq},
                                      {"rq", pt.rq_defined && !pt.rq_infinite ? nlohmann::json(pt.rq)
                                                                              : nlohmann::json()},
                                      {"rq_defined", pt.rq_defined},
                                      {"rq_infinite", pt.rq_infinite}});
                }
                jr["curve"] = std::move(jcurve);
                jruns.push_back(std::move(jr));
            }
            jc["runs"] = std::move(jruns);
            jc["hist_total"] = histogram_json(cell.hist_total);
            jc["hist_data"] = histogram_json(cell.hist_data);
            jc["hist_model"] = histogram_json(cell.hist_model);
            per_set[set_name] = std::move(jc);
        }
        cells[method] = std::move(per_set);
    }
    doc["cells"] = std::move(cells);
    return doc.dump(2) + "\n";
}

}  // namespace uqr
