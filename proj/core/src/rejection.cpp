#include "uqr/rejection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "uqr/errors.hpp"
#include "uqr/rng.hpp"

namespace uqr {

void EvaluatedSet::validate() const {
    std::unordered_set<std::uint64_t> seen;
    for (const auto& r : records) {
        if (!std::isfinite(r.uncertainty)) throw ConfigError("non-finite uncertainty value");
        if (!seen.insert(r.obs_id).second) {
            throw ConfigError("duplicate obs_id " + std::to_string(r.obs_id));
        }
    }
}

double EvaluatedSet::accuracy() const {
    if (records.empty()) throw ConfigError("empty evaluated set has no accuracy");
    std::size_t correct = 0;
    for (const auto& r : records) correct += r.correct ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(records.size());
}

RejectionPartition partition(const EvaluatedSet& es, double q, std::uint64_t seed) {
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("rejection fraction must lie in [0, 1]");
    es.validate();

    const std::size_t n = es.records.size();
    const auto reject_count = static_cast<std::size_t>(std::floor(q * static_cast<double>(n)));

    // Stable order by descending uncertainty, then resolve the boundary tie
    // group with a seeded shuffle.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return es.records[a].uncertainty > es.records[b].uncertainty;
    });

    if (reject_count > 0 && reject_count < n) {
        const double boundary = es.records[order[reject_count - 1]].uncertainty;
        std::size_t group_begin = reject_count - 1;
        while (group_begin > 0 && es.records[order[group_begin - 1]].uncertainty == boundary) {
            --group_begin;
        }
        std::size_t group_end = reject_count;
        while (group_end < n && es.records[order[group_end]].uncertainty == boundary) {
            ++group_end;
        }
        if (group_end - group_begin > 1) {
            std::vector<std::size_t> group(order.begin() + static_cast<std::ptrdiff_t>(group_begin),
                                           order.begin() + static_cast<std::ptrdiff_t>(group_end));
            Rng rng(mix64(seed));
            rng.shuffle(group);
            std::copy(group.begin(), group.end(), order.begin() + static_cast<std::ptrdiff_t>(group_begin));
        }
    }

    RejectionPartition p;
    for (std::size_t rank = 0; rank < n; ++rank) {
        const EvaluatedRecord& rec = es.records[order[rank]];
        if (rank < reject_count) {
            p.rejected_ids.push_back(rec.obs_id);
            (rec.correct ? p.accurate_rejected : p.misclassified_rejected) += 1;
        } else {
            p.retained_ids.push_back(rec.obs_id);
            (rec.correct ? p.accurate_retained : p.misclassified_retained) += 1;
        }
    }
    return p;
}

double nra(const RejectionPartition& p) {
    const std::size_t retained = p.accurate_retained + p.misclassified_retained;
    if (retained == 0) throw ConfigError("NRA is undefined when every observation is rejected");
    return static_cast<double>(p.accurate_retained) / static_cast<double>(retained);
}

double cq(const RejectionPartition& p) {
    const std::size_t n = p.total();
    if (n == 0) throw ConfigError("CQ is undefined on an empty set");
    return static_cast<double>(p.accurate_retained + p.misclassified_rejected) / static_cast<double>(n);
}

RejectionMetrics rq(const RejectionPartition& p) {
    RejectionMetrics m;
    const std::size_t accurate = p.accurate_retained + p.accurate_rejected;
    const std::size_t misclassified = p.misclassified_retained + p.misclassified_rejected;
    const std::size_t rejected = p.accurate_rejected + p.misclassified_rejected;
    if (rejected == 0 || misclassified == 0) {
        m.rq_defined = false;
        return m;
    }
    m.rq_defined = true;
    if (p.accurate_rejected == 0) {
        m.rq_infinite = true;
        return m;
    }
    // (m_r / a_r) / (|M| / |A|), in the overflow-free product form
    m.rq = (static_cast<double>(p.misclassified_rejected) * static_cast<double>(accurate)) /
           (static_cast<double>(p.accurate_rejected) * static_cast<double>(misclassified));
    return m;
}

RejectionMetrics all_metrics(const RejectionPartition& p) {
    RejectionMetrics m = rq(p);
    m.nra = nra(p);
    m.cq = cq(p);
    return m;
}

std::vector<double> default_rejection_grid() {
    std::vector<double> grid;
    for (int i = 0; i < 20; ++i) grid.push_back(static_cast<double>(i) * 0.05);
    return grid;
}

RejectionCurve sweep_curve(const EvaluatedSet& es, const std::vector<double>& grid, std::uint64_t seed) {
    if (es.records.empty()) throw ConfigError("cannot sweep an empty evaluated set");
    double prev = -1.0;
    for (const double q : grid) {
        if (!(q >= 0.0 && q <= 0.95)) throw ConfigError("grid fractions must lie in [0, 0.95]");
        if (q <= prev) throw ConfigError("grid fractions must be strictly increasing");
        prev = q;
    }
    RejectionCurve curve;
    curve.seed = seed;
    for (const double q : grid) {
        const std::uint64_t q_seed = seed ^ mix64(std::bit_cast<std::uint64_t>(q));
        const RejectionPartition p = partition(es, q, q_seed);
        const RejectionMetrics m = all_metrics(p);
        curve.points.push_back({q, m.nra, m.cq, m.rq, m.rq_defined, m.rq_infinite});
    }
    return curve;
}

RejectionMetrics naive_metrics_oracle(const EvaluatedSet& es,
                                      const std::vector<std::uint64_t>& rejected_ids) {
    es.validate();
    std::unordered_map<std::uint64_t, bool> correct_by_id;
    for (const auto& r : es.records) correct_by_id[r.obs_id] = r.correct;

    std::size_t a_r = 0, m_r = 0;
    std::unordered_set<std::uint64_t> rejected;
    for (const std::uint64_t id : rejected_ids) {
        const auto it = correct_by_id.find(id);
        if (it == correct_by_id.end()) throw ConfigError("unknown obs_id " + std::to_string(id));
        rejected.insert(id);
        (it->second ? a_r : m_r) += 1;
    }
    std::size_t a_n = 0, m_n = 0;
    for (const auto& r : es.records) {
        if (rejected.count(r.obs_id)) continue;
        (r.correct ? a_n : m_n) += 1;
    }

    const std::size_t n = es.records.size();
    const std::size_t accurate = a_n + a_r;
    const std::size_t misclassified = m_n + m_r;

    RejectionMetrics m;
    if (a_n + m_n == 0) throw ConfigError("NRA is undefined when every observation is rejected");
    m.nra = static_cast<double>(a_n) / static_cast<double>(a_n + m_n);
    m.cq = static_cast<double>(a_n + m_r) / static_cast<double>(n);
    if (rejected.empty() || misclassified == 0) {
        m.rq_defined = false;
    } else if (a_r == 0) {
        m.rq_defined = true;
        m.rq_infinite = true;
    } else {
        m.rq_defined = true;
        m.rq = (static_cast<double>(m_r) * static_cast<double>(accurate)) /
               (static_cast<double>(a_r) * static_cast<double>(misclassified));
    }
    return m;
}

void write_curve_csv(const std::string& path, const RejectionCurve& curve) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << "q,nra,cq,rq,rq_defined,rq_infinite\n";
    char buf[160];
    for (const auto& pt : curve.points) {
        std::string rq_text;
        if (pt.rq_defined) rq_text = pt.rq_infinite ? "inf" : [&] {
            char b[48];
            std::snprintf(b, sizeof b, "%.9g", pt.rq);
            return std::string(b);
        }();
        std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%s,%d,%d\n", pt.fraction, pt.nra, pt.cq,
                      rq_text.c_str(), pt.rq_defined ? 1 : 0, pt.rq_infinite ? 1 : 0);
        out << buf;
    }
}

RejectionCurve read_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("'" + path + "' is empty");
    RejectionCurve curve;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (cells.size() != 6) throw ConfigError("malformed curve row in '" + path + "'");
        RejectionCurvePoint pt;
        pt.fraction = std::stod(cells[0]);
        pt.nra = std::stod(cells[1]);
        pt.cq = std::stod(cells[2]);
        pt.rq_defined = cells[4] == "1";
        pt.rq_infinite = cells[5] == "1";
        if (pt.rq_defined && !pt.rq_infinite) pt.rq = std::stod(cells[3]);
        curve.points.push_back(pt);
    }
    return curve;
}

}  // namespace uqr
