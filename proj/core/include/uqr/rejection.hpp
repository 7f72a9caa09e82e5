#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace uqr {

// One evaluated prediction: was it correct, and how uncertain was it.
struct EvaluatedRecord {
    std::uint64_t obs_id = 0;
    bool correct = false;
    double uncertainty = 0.0;
};

struct EvaluatedSet {
    std::vector<EvaluatedRecord> records;

    void validate() const;  // unique ids, finite uncertainties
    double accuracy() const;
};

// Confusion counts over accurate/misclassified x rejected/non-rejected.
struct RejectionPartition {
    std::vector<std::uint64_t> rejected_ids;
    std::vector<std::uint64_t> retained_ids;
    std::size_t accurate_retained = 0;      // |A ∩ N|
    std::size_t misclassified_retained = 0; // |M ∩ N|
    std::size_t accurate_rejected = 0;      // |A ∩ R|
    std::size_t misclassified_rejected = 0; // |M ∩ R|

    std::size_t total() const {
        return accurate_retained + misclassified_retained + accurate_rejected + misclassified_rejected;
    }
};

struct RejectionMetrics {
    double nra = 0.0;
    double cq = 0.0;
    double rq = 0.0;
    bool rq_defined = false;
    bool rq_infinite = false;
};

struct RejectionCurvePoint {
    double fraction = 0.0;
    double nra = 0.0;
    double cq = 0.0;
    double rq = 0.0;
    bool rq_defined = false;
    bool rq_infinite = false;
};

struct RejectionCurve {
    std::vector<RejectionCurvePoint> points;
    std::uint64_t seed = 0;
};

// Rejects floor(q * n) observations in order of descending uncertainty;
// groups of exactly tied values are broken by a seeded shuffle.
RejectionPartition partition(const EvaluatedSet& es, double q, std::uint64_t seed);

double nra(const RejectionPartition& p);  // throws when nothing is retained
double cq(const RejectionPartition& p);   // throws on an empty partition
RejectionMetrics rq(const RejectionPartition& p);  // degeneracies become flags

RejectionMetrics all_metrics(const RejectionPartition& p);

std::vector<double> default_rejection_grid();  // {0.00, 0.05, ..., 0.95}

// One partition per grid fraction, each with a seed derived from (seed, q).
RejectionCurve sweep_curve(const EvaluatedSet& es, const std::vector<double>& grid, std::uint64_t seed);

// Independent recount from an explicit rejected-id set, no sorting involved.
RejectionMetrics naive_metrics_oracle(const EvaluatedSet& es,
                                      const std::vector<std::uint64_t>& rejected_ids);

// Curve CSV: q, nra, cq, rq, rq_defined, rq_infinite; rq prints empty when
// undefined and "inf" when infinite.
void write_curve_csv(const std::string& path, const RejectionCurve& curve);
RejectionCurve read_curve_csv(const std::string& path);

}  // namespace uqr
