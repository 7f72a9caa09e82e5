#include "uqr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "uqr/errors.hpp"
#include "uqr/rng.hpp"

namespace uqr {

std::string to_string(ShiftLevel level) {
    switch (level) {
        case ShiftLevel::none: return "none";
        case ShiftLevel::small: return "small";
        case ShiftLevel::large: return "large";
    }
    return "none";
}

ShiftLevel shift_level_from_string(const std::string& s) {
    if (s == "none") return ShiftLevel::none;
    if (s == "small") return ShiftLevel::small;
    if (s == "large") return ShiftLevel::large;
    throw ConfigError("unknown shift level '" + s + "' (expected none|small|large)");
}

ShiftSpec ShiftSpec::preset(ShiftLevel level) {
    ShiftSpec spec;
    spec.level = level;
    switch (level) {
        case ShiftLevel::none:
            break;
        case ShiftLevel::small:
            spec.mean_shift = {0.0, 1.0};
            spec.class_prior = 0.46;
            break;
        case ShiftLevel::large:
            spec.mean_shift = {0.0, 4.0};
            spec.rotation_degrees = 90.0;
            spec.class_prior = 0.28;
            break;
    }
    return spec;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no, const std::string& column) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError("line " + std::to_string(line_no) + ": non-numeric value '" + cell +
                          "' in column '" + column + "'");
    }
    if (!std::isfinite(value)) {
        throw ConfigError("line " + std::to_string(line_no) + ": non-finite value '" + cell +
                          "' in column '" + column + "'");
    }
    return value;
}

}  // namespace

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw ConfigError("'" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const auto header = split_line(line);
    std::size_t label_col = header.size();
    Dataset ds;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "label") {
            label_col = c;
        } else {
            ds.feature_names.push_back(header[c]);
        }
    }
    if (label_col == header.size()) throw ConfigError("'" + path + "' has no 'label' column");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
        }
        std::vector<double> row;
        row.reserve(header.size() - 1);
        int label = 0;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const double value = parse_cell(cells[c], line_no, header[c]);
            if (c == label_col) {
                if (value != 0.0 && value != 1.0) {
                    throw ConfigError("line " + std::to_string(line_no) + ": label must be 0 or 1, got '" +
                                      cells[c] + "'");
                }
                label = static_cast<int>(value);
            } else {
                row.push_back(value);
            }
        }
        ds.features.push_back(std::move(row));
        ds.labels.push_back(label);
    }
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    for (const auto& name : ds.feature_names) out << name << ',';
    out << "label\n";
    char buf[64];
    for (std::size_t i = 0; i < ds.size(); ++i) {
        for (const double v : ds.features[i]) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf << ',';
        }
        out << ds.labels[i] << '\n';
    }
}

StandardizerParams standardize_fit(const Dataset& train) {
    if (train.size() == 0) throw ConfigError("cannot fit standardizer on an empty dataset");
    const std::size_t n = train.size();
    const std::size_t d = train.dim();
    StandardizerParams params;
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += train.features[i][c];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dx = train.features[i][c] - mean;
            var += dx * dx;
        }
        var /= static_cast<double>(n);
        if (var <= 0.0) {
            params.dropped_features.push_back(c < train.feature_names.size() ? train.feature_names[c]
                                                                             : "f" + std::to_string(c));
            continue;
        }
        params.kept_columns.push_back(c);
        params.mean.push_back(mean);
        params.stddev.push_back(std::sqrt(var));
    }
    return params;
}

Dataset standardize_apply(const StandardizerParams& params, const Dataset& ds) {
    Dataset out;
    out.labels = ds.labels;
    for (const std::size_t c : params.kept_columns) {
        out.feature_names.push_back(c < ds.feature_names.size() ? ds.feature_names[c]
                                                                : "f" + std::to_string(c));
    }
    out.features.reserve(ds.size());
    for (const auto& row : ds.features) {
        std::vector<double> z(params.kept_columns.size());
        for (std::size_t k = 0; k < params.kept_columns.size(); ++k) {
            const std::size_t c = params.kept_columns[k];
            if (c >= row.size()) throw ConfigError("standardizer fitted on wider dataset than applied to");
            z[k] = (row[c] - params.mean[k]) / params.stddev[k];
        }
        out.features.push_back(std::move(z));
    }
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("split fraction must be in (0, 1)");
    const std::size_t n = ds.size();
    const auto first_n = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    if (first_n == 0 || first_n == n) throw ConfigError("split fraction leaves one side empty");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(order);

    Dataset a, b;
    a.feature_names = ds.feature_names;
    b.feature_names = ds.feature_names;
    for (std::size_t i = 0; i < n; ++i) {
        Dataset& side = (i < first_n) ? a : b;
        side.features.push_back(ds.features[order[i]]);
        side.labels.push_back(ds.labels[order[i]]);
    }
    return {std::move(a), std::move(b)};
}

namespace {

void sample_cluster_point(Rng& rng, const std::vector<double>& mean, double stddev,
                          std::vector<double>& out) {
    out.resize(mean.size());
    for (std::size_t d = 0; d < mean.size(); ++d) out[d] = rng.normal(mean[d], stddev);
}

}  // namespace

Dataset gen_two_region(std::size_t n, std::uint64_t seed, const TwoRegionSpec& spec) {
    if (n < 4) throw ConfigError("two-region generator needs n >= 4");
    Dataset ds;
    ds.feature_names = {"x1", "x2"};
    ds.features.reserve(n);
    ds.labels.reserve(n);
    Rng rng(seed);
    std::vector<double> point;
    for (std::size_t i = 0; i < n; ++i) {
        const int label = rng.bernoulli(spec.class1_prior) ? 1 : 0;
        sample_cluster_point(rng, label == 1 ? spec.class1_mean : spec.class0_mean, spec.cluster_std, point);
        ds.features.push_back(point);
        ds.labels.push_back(label);
    }
    return ds;
}

Dataset gen_shifted(const TwoRegionSpec& base, const ShiftSpec& shift, std::size_t n, std::uint64_t seed) {
    if (shift.label_flip_rate < 0.0 || shift.label_flip_rate > 0.5) {
        throw ConfigError("label_flip_rate must be in [0, 0.5]");
    }
    if (!(shift.class_prior > 0.0 && shift.class_prior < 1.0)) {
        throw ConfigError("class_prior must be in (0, 1)");
    }

    TwoRegionSpec spec = base;
    spec.class1_prior = shift.class_prior;
    Dataset ds = gen_two_region(std::max<std::size_t>(n, 4), seed, spec);

    // Rotation is applied about the mixture centroid of the base distribution
    // so it reshapes geometry without doubling as a translation.
    const double p1 = base.class1_prior;
    const double cx = (1.0 - p1) * base.class0_mean[0] + p1 * base.class1_mean[0];
    const double cy = (1.0 - p1) * base.class0_mean[1] + p1 * base.class1_mean[1];
    const double theta = shift.rotation_degrees * 3.141592653589793238462643383279502884 / 180.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);

    const double dx = shift.mean_shift.size() > 0 ? shift.mean_shift[0] * base.cluster_std : 0.0;
    const double dy = shift.mean_shift.size() > 1 ? shift.mean_shift[1] * base.cluster_std : 0.0;

    Rng flip_rng(mix64(seed ^ 0x666c6970ULL));  // separate stream for label noise
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double x = ds.features[i][0] - cx;
        const double y = ds.features[i][1] - cy;
        ds.features[i][0] = cx + c * x - s * y + dx;
        ds.features[i][1] = cy + s * x + c * y + dy;
        if (shift.label_flip_rate > 0.0 && flip_rng.bernoulli(shift.label_flip_rate)) {
            ds.labels[i] = 1 - ds.labels[i];
        }
    }
    return ds;
}

}  // namespace uqr
