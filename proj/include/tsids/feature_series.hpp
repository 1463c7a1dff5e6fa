#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tsids/errors.hpp"

namespace tsids {

/// Maximal run of attack-labeled seconds, both endpoints inclusive.
struct AttackInterval {
    std::size_t start_s = 0;
    std::size_t end_s = 0;
};

/// Labeled per-second multivariate feature series. Every series has length
/// n_seconds; seconds without traffic hold zeros rather than gaps so the
/// detectors always see a gapless timeline.
struct FeatureSeries {
    std::size_t n_seconds = 0;
    std::vector<double> packets;
    std::vector<double> ip_pairs;
    std::vector<double> port_pairs;

    // Extra aggregates kept alongside the three detector features but not
    // consumed by any detector.
    std::vector<double> bytes;
    std::vector<double> protocols;
    std::map<std::string, std::vector<double>> onehot;

    std::vector<std::uint8_t> label; // 1 when the second holds >=1 malicious packet
    std::vector<AttackInterval> attack_intervals;

    const std::vector<double>& feature(std::string_view name) const {
        if (name == "packets") return packets;
        if (name == "ip_pairs") return ip_pairs;
        if (name == "port_pairs") return port_pairs;
        if (name == "bytes") return bytes;
        if (name == "protocols") return protocols;
        throw validation_error("unknown feature '" + std::string(name) + "'");
    }
};

inline const std::vector<std::string>& detector_features() {
    static const std::vector<std::string> names = {"packets", "ip_pairs", "port_pairs"};
    return names;
}

/// Rebuild the maximal labeled runs from the per-second labels.
inline std::vector<AttackInterval> label_runs(const std::vector<std::uint8_t>& label) {
    std::vector<AttackInterval> runs;
    std::size_t t = 0;
    while (t < label.size()) {
        if (!label[t]) {
            ++t;
            continue;
        }
        std::size_t end = t;
        while (end + 1 < label.size() && label[end + 1]) ++end;
        runs.push_back({t, end});
        t = end + 1;
    }
    return runs;
}

} // namespace tsids
