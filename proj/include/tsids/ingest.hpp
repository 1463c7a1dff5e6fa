#pragma once

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tsids/csv.hpp"
#include "tsids/errors.hpp"
#include "tsids/event.hpp"
#include "tsids/feature_series.hpp"

namespace tsids::ingest {

inline constexpr std::string_view kEventCsvHeader =
    "timestamp_us,src_ip,dst_ip,src_port,dst_port,protocol,length_bytes,flags,"
    "function_code,malicious";

namespace detail {

inline void validate_event(const PacketEvent& ev, std::size_t line_no) {
    const auto ctx = [&](std::string_view what) {
        return "line " + std::to_string(line_no) + ": " + std::string(what);
    };
    if (ev.timestamp_us < 0) throw validation_error(ctx("negative timestamp_us"));
    if (ev.src_port < 0 || ev.src_port > 65535)
        throw validation_error(ctx("src_port out of range 0-65535"));
    if (ev.dst_port < 0 || ev.dst_port > 65535)
        throw validation_error(ctx("dst_port out of range 0-65535"));
    if (ev.length_bytes < 0) throw validation_error(ctx("negative length_bytes"));
}

inline PacketEvent event_from_csv_row(const std::vector<std::string>& f, std::size_t line_no) {
    if (f.size() != 10)
        throw parse_error("line " + std::to_string(line_no) + ": expected 10 fields, got " +
                          std::to_string(f.size()));
    PacketEvent ev;
    ev.timestamp_us = csv::to_int(f[0], line_no, "timestamp_us");
    ev.src_ip = f[1];
    ev.dst_ip = f[2];
    ev.src_port = static_cast<int>(csv::to_int(f[3], line_no, "src_port"));
    ev.dst_port = static_cast<int>(csv::to_int(f[4], line_no, "dst_port"));
    ev.protocol = f[5];
    ev.length_bytes = csv::to_int(f[6], line_no, "length_bytes");
    if (!f[7].empty())
        for (auto& flag : csv::split(f[7], ';'))
            if (!flag.empty()) ev.flags.push_back(std::move(flag));
    if (!f[8].empty()) ev.function_code = static_cast<int>(csv::to_int(f[8], line_no, "function_code"));
    if (f[9] == "0")
        ev.malicious = false;
    else if (f[9] == "1")
        ev.malicious = true;
    else
        throw parse_error("line " + std::to_string(line_no) + ": malicious must be 0 or 1, got '" +
                          f[9] + "'");
    validate_event(ev, line_no);
    return ev;
}

inline PacketEvent event_from_json_line(const std::string& line, std::size_t line_no) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error("line " + std::to_string(line_no) + ": " + e.what());
    }
    PacketEvent ev;
    try {
        ev.timestamp_us = j.at("timestamp_us").get<std::int64_t>();
        ev.src_ip = j.at("src_ip").get<std::string>();
        ev.dst_ip = j.at("dst_ip").get<std::string>();
        ev.src_port = j.at("src_port").get<int>();
        ev.dst_port = j.at("dst_port").get<int>();
        ev.protocol = j.value("protocol", std::string{});
        ev.length_bytes = j.value("length_bytes", std::int64_t{0});
        if (j.contains("flags") && !j["flags"].is_null()) {
            if (j["flags"].is_array())
                ev.flags = j["flags"].get<std::vector<std::string>>();
            else
                for (auto& flag : csv::split(j["flags"].get<std::string>(), ';'))
                    if (!flag.empty()) ev.flags.push_back(std::move(flag));
        }
        if (j.contains("function_code") && !j["function_code"].is_null())
            ev.function_code = j["function_code"].get<int>();
        if (j.at("malicious").is_boolean())
            ev.malicious = j["malicious"].get<bool>();
        else
            ev.malicious = j["malicious"].get<int>() != 0;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error("line " + std::to_string(line_no) + ": " + e.what());
    }
    validate_event(ev, line_no);
    return ev;
}

} // namespace detail

/// Parse packet events from CSV (header required) or JSONL (one object per
/// line, detected by a leading '{'). Events come back sorted by timestamp;
/// the sort is stable so same-second input order is preserved.
inline std::vector<PacketEvent> parse_events(std::istream& in) {
    std::vector<PacketEvent> events;
    std::string line;
    std::size_t line_no = 0;
    bool jsonl = false;
    bool decided = false;
    bool header_seen = false;

    while (std::getline(in, line)) {
        ++line_no;
        line = csv::strip_cr(std::move(line));
        if (line.empty()) continue;
        if (!decided) {
            jsonl = line.front() == '{';
            decided = true;
        }
        if (jsonl) {
            events.push_back(detail::event_from_json_line(line, line_no));
            continue;
        }
        if (!header_seen) {
            if (line != kEventCsvHeader)
                throw parse_error("line " + std::to_string(line_no) +
                                  ": missing or wrong header; expected '" +
                                  std::string(kEventCsvHeader) + "'");
            header_seen = true;
            continue;
        }
        events.push_back(detail::event_from_csv_row(csv::split(line), line_no));
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const PacketEvent& a, const PacketEvent& b) {
                         return a.timestamp_us < b.timestamp_us;
                     });
    return events;
}

inline std::vector<PacketEvent> parse_events(const std::string& text) {
    std::istringstream in(text);
    return parse_events(in);
}

inline void write_events_csv(std::ostream& out, std::span<const PacketEvent> events) {
    out << kEventCsvHeader << '\n';
    for (const auto& ev : events) {
        out << ev.timestamp_us << ',' << ev.src_ip << ',' << ev.dst_ip << ',' << ev.src_port
            << ',' << ev.dst_port << ',' << ev.protocol << ',' << ev.length_bytes << ',';
        for (std::size_t i = 0; i < ev.flags.size(); ++i) {
            if (i) out << ';';
            out << ev.flags[i];
        }
        out << ',';
        if (ev.function_code) out << *ev.function_code;
        out << ',' << (ev.malicious ? '1' : '0') << '\n';
    }
}

/// Aggregate timestamp-sorted events into per-second features. Second t
/// covers [t*10^6, (t+1)*10^6) microseconds; the series runs through the
/// second of the last event. An empty event list gives an empty series.
inline FeatureSeries aggregate_per_second(std::span<const PacketEvent> events) {
    FeatureSeries fs;
    if (events.empty()) return fs;

    for (std::size_t i = 0; i + 1 < events.size(); ++i)
        if (events[i].timestamp_us > events[i + 1].timestamp_us)
            throw validation_error("aggregate_per_second: events not sorted by timestamp");
    if (events.front().timestamp_us < 0)
        throw validation_error("aggregate_per_second: negative timestamp");

    const std::size_t n =
        static_cast<std::size_t>(events.back().timestamp_us / 1'000'000) + 1;
    fs.n_seconds = n;
    fs.packets.assign(n, 0.0);
    fs.ip_pairs.assign(n, 0.0);
    fs.port_pairs.assign(n, 0.0);
    fs.bytes.assign(n, 0.0);
    fs.protocols.assign(n, 0.0);
    fs.label.assign(n, 0);

    std::size_t begin = 0;
    while (begin < events.size()) {
        const std::size_t sec =
            static_cast<std::size_t>(events[begin].timestamp_us / 1'000'000);
        std::size_t end = begin;
        while (end < events.size() &&
               static_cast<std::size_t>(events[end].timestamp_us / 1'000'000) == sec)
            ++end;

        std::set<std::pair<std::string, std::string>> ip_pairs;
        std::set<std::pair<int, int>> port_pairs;
        std::set<std::string> protocols;
        for (std::size_t i = begin; i < end; ++i) {
            const auto& ev = events[i];
            ip_pairs.insert(std::minmax(ev.src_ip, ev.dst_ip));
            port_pairs.insert(std::minmax(ev.src_port, ev.dst_port));
            protocols.insert(ev.protocol);
            fs.bytes[sec] += static_cast<double>(ev.length_bytes);
            if (ev.malicious) fs.label[sec] = 1;
            for (const auto& flag : ev.flags) {
                auto& col = fs.onehot["flag_" + flag];
                col.resize(n, 0.0);
                col[sec] += 1.0;
            }
            if (ev.function_code) {
                auto& col = fs.onehot["fc_" + std::to_string(*ev.function_code)];
                col.resize(n, 0.0);
                col[sec] += 1.0;
            }
        }
        fs.packets[sec] = static_cast<double>(end - begin);
        fs.ip_pairs[sec] = static_cast<double>(ip_pairs.size());
        fs.port_pairs[sec] = static_cast<double>(port_pairs.size());
        fs.protocols[sec] = static_cast<double>(protocols.size());
        begin = end;
    }
    fs.attack_intervals = label_runs(fs.label);
    return fs;
}

/// Write the feature CSV. The base schema is fixed; with_extras appends the
/// byte and protocol count columns that no detector consumes.
inline void write_features_csv(std::ostream& out, const FeatureSeries& fs,
                               bool with_extras = false) {
    out << "second,packets,ip_pairs,port_pairs,label";
    if (with_extras) out << ",bytes,protocols";
    out << '\n';
    for (std::size_t t = 0; t < fs.n_seconds; ++t) {
        out << t << ',' << csv::format_double(fs.packets[t]) << ','
            << csv::format_double(fs.ip_pairs[t]) << ',' << csv::format_double(fs.port_pairs[t])
            << ',' << int(fs.label[t]);
        if (with_extras)
            out << ',' << csv::format_double(fs.bytes[t]) << ','
                << csv::format_double(fs.protocols[t]);
        out << '\n';
    }
}

inline FeatureSeries read_features_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw parse_error("feature CSV: empty file");
    line = csv::strip_cr(std::move(line));
    const auto header = csv::split(line);
    const auto col = [&](std::string_view name) -> std::ptrdiff_t {
        const auto it = std::find(header.begin(), header.end(), std::string(name));
        return it == header.end() ? -1 : it - header.begin();
    };
    const std::ptrdiff_t c_second = col("second"), c_packets = col("packets"),
                         c_ip = col("ip_pairs"), c_port = col("port_pairs"),
                         c_label = col("label"), c_bytes = col("bytes"),
                         c_protocols = col("protocols");
    if (c_second < 0 || c_packets < 0 || c_ip < 0 || c_port < 0 || c_label < 0)
        throw parse_error("feature CSV: header must contain second,packets,ip_pairs,port_pairs,label");

    FeatureSeries fs;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = csv::strip_cr(std::move(line));
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != header.size())
            throw parse_error("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header.size()) + " fields");
        const auto sec = csv::to_int(f[c_second], line_no, "second");
        if (sec != static_cast<std::int64_t>(fs.n_seconds))
            throw parse_error("line " + std::to_string(line_no) + ": seconds must be consecutive");
        fs.packets.push_back(csv::to_double(f[c_packets], line_no, "packets"));
        fs.ip_pairs.push_back(csv::to_double(f[c_ip], line_no, "ip_pairs"));
        fs.port_pairs.push_back(csv::to_double(f[c_port], line_no, "port_pairs"));
        fs.label.push_back(csv::to_int(f[c_label], line_no, "label") != 0);
        if (c_bytes >= 0) fs.bytes.push_back(csv::to_double(f[c_bytes], line_no, "bytes"));
        if (c_protocols >= 0)
            fs.protocols.push_back(csv::to_double(f[c_protocols], line_no, "protocols"));
        ++fs.n_seconds;
    }
    fs.attack_intervals = label_runs(fs.label);
    return fs;
}

} // namespace tsids::ingest
