#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace tsids {

/// One observed packet, already reduced to the fields the feature
/// aggregation needs. Timestamps are microseconds relative to capture
/// start; converting from absolute epoch time is the producer's job.
struct PacketEvent {
    std::int64_t timestamp_us = 0;
    std::string src_ip;
    std::string dst_ip;
    int src_port = 0;
    int dst_port = 0;
    std::string protocol;
    std::int64_t length_bytes = 0;
    std::vector<std::string> flags;
    std::optional<int> function_code;
    bool malicious = false;
};

} // namespace tsids
