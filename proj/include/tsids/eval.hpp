#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsids/errors.hpp"

namespace tsids::eval {

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

/// Undefined ratios stay empty rather than collapsing to 0; a detector that
/// flags nothing has no precision, not a precision of zero.
struct Metrics {
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    double accuracy = 0.0;
};

/// Per-second confusion counts. Seconds outside the evaluable mask are
/// excluded from all four counters.
inline ConfusionCounts confusion(std::span<const std::size_t> flagged,
                                 std::span<const std::uint8_t> labels,
                                 std::span<const std::uint8_t> evaluable) {
    if (labels.size() != evaluable.size())
        throw validation_error("confusion: labels and evaluable mask must share length");
    std::vector<std::uint8_t> is_flagged(labels.size(), 0);
    for (const std::size_t t : flagged) {
        if (t >= labels.size() || !evaluable[t])
            throw validation_error("confusion: flag at second " + std::to_string(t) +
                                   " outside the evaluable range");
        is_flagged[t] = 1;
    }
    ConfusionCounts c;
    for (std::size_t t = 0; t < labels.size(); ++t) {
        if (!evaluable[t]) continue;
        if (is_flagged[t])
            ++(labels[t] ? c.tp : c.fp);
        else
            ++(labels[t] ? c.fn : c.tn);
    }
    return c;
}

/// Precision, recall, F1 and accuracy from confusion counts.
inline Metrics metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw validation_error("metrics: all counts are zero");
    Metrics m;
    if (c.tp + c.fp > 0)
        m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0)
        m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0)
        m.f1 = 2.0 * (*m.precision * *m.recall) / (*m.precision + *m.recall);
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    return m;
}

/// Attack interval in real (sub-second) time.
struct RealInterval {
    double start_s = 0.0;
    double end_s = 0.0;
};

struct LatencyRow {
    double attack_start = 0.0;
    std::optional<std::size_t> first_detection;
};

struct LatencyTable {
    std::vector<LatencyRow> rows;
    std::vector<std::size_t> false_positives; // flags matching no attack window
};

/// First-detection table. A flag counts toward an attack when it falls in
/// [floor(start), end + 1]; the one-second grace mirrors sub-second attack
/// ends reported at the following whole second. Flags covering no attack
/// are listed as false positives.
inline LatencyTable latency(std::span<const std::size_t> flagged,
                            std::span<const RealInterval> attacks) {
    for (std::size_t i = 0; i + 1 < attacks.size(); ++i)
        if (attacks[i].start_s > attacks[i + 1].start_s)
            throw validation_error("latency: attacks must be sorted by start time");

    const auto in_window = [](std::size_t t, const RealInterval& a) {
        const double td = static_cast<double>(t);
        return td >= std::floor(a.start_s) && td <= a.end_s + 1.0;
    };

    LatencyTable table;
    for (const auto& a : attacks) {
        LatencyRow row;
        row.attack_start = a.start_s;
        for (const std::size_t t : flagged) {
            if (in_window(t, a)) {
                row.first_detection = t;
                break;
            }
        }
        table.rows.push_back(row);
    }
    for (const std::size_t t : flagged) {
        bool covered = false;
        for (const auto& a : attacks)
            if (in_window(t, a)) {
                covered = true;
                break;
            }
        if (!covered) table.false_positives.push_back(t);
    }
    return table;
}

struct DetectionReport {
    std::string detector;
    std::string feature;
    std::map<std::string, double> thresholds;
    std::vector<std::size_t> flagged;
    std::optional<ConfusionCounts> counts;
    std::optional<Metrics> metric_values;
    std::vector<LatencyRow> latency_rows;
    std::vector<std::size_t> false_positives;
};

inline nlohmann::json report_to_json(const DetectionReport& r) {
    nlohmann::json j;
    j["detector"] = r.detector;
    j["feature"] = r.feature;
    j["thresholds"] = r.thresholds;
    j["flagged"] = r.flagged;
    if (r.counts)
        j["counts"] = {{"tp", r.counts->tp},
                       {"fp", r.counts->fp},
                       {"tn", r.counts->tn},
                       {"fn", r.counts->fn}};
    else
        j["counts"] = nullptr;
    if (r.metric_values) {
        const auto opt = [](const std::optional<double>& v) {
            return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
        };
        j["metrics"] = {{"precision", opt(r.metric_values->precision)},
                        {"recall", opt(r.metric_values->recall)},
                        {"f1", opt(r.metric_values->f1)},
                        {"accuracy", r.metric_values->accuracy}};
    } else {
        j["metrics"] = nullptr;
    }
    nlohmann::json lat = nlohmann::json::array();
    for (const auto& row : r.latency_rows)
        lat.push_back({{"attack_start", row.attack_start},
                       {"first_detection",
                        row.first_detection ? nlohmann::json(*row.first_detection)
                                            : nlohmann::json(nullptr)}});
    j["latency"] = lat;
    j["false_positives"] = r.false_positives;
    return j;
}

} // namespace tsids::eval
