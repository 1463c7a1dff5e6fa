#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsids/errors.hpp"
#include "tsids/event.hpp"
#include "tsids/rng.hpp"

namespace tsids::simulate {

enum class AttackKind { scan_burst, file_transfer, fake_command };

inline std::string to_string(AttackKind k) {
    switch (k) {
    case AttackKind::scan_burst: return "scan_burst";
    case AttackKind::file_transfer: return "file_transfer";
    case AttackKind::fake_command: return "fake_command";
    }
    return "?";
}

inline AttackKind attack_kind_from_string(const std::string& s) {
    if (s == "scan_burst") return AttackKind::scan_burst;
    if (s == "file_transfer") return AttackKind::file_transfer;
    if (s == "fake_command") return AttackKind::fake_command;
    throw validation_error("unknown attack kind '" + s + "'");
}

struct AttackSpec {
    double start_s = 0.0;
    double duration_s = 1.0;
    AttackKind kind = AttackKind::scan_burst;
    double intensity = 50.0; // packets per second

    double end_s() const { return start_s + duration_s; }
};

/// Emulated Modbus/TCP plant: one or two masters polling a handful of
/// outstations on a fixed interval, plus aperiodic operator actions and
/// injected attacks.
struct SimConfig {
    int n_rtus = 6;
    int n_mtus = 1;
    int poll_interval_s = 10;
    int duration_s = 0;
    double manual_op_rate = 1.0; // expected operations per minute
    std::vector<AttackSpec> attacks;
    std::uint64_t rng_seed = 0;
};

namespace detail {

inline void validate(const SimConfig& cfg) {
    if (cfg.duration_s <= 0) throw validation_error("simulate: duration_s must be positive");
    if (cfg.poll_interval_s < 1) throw validation_error("simulate: poll_interval_s must be >= 1");
    if (cfg.n_rtus < 1) throw validation_error("simulate: need at least one RTU");
    if (cfg.n_mtus < 1 || cfg.n_mtus > 2) throw validation_error("simulate: n_mtus must be 1 or 2");
    if (cfg.manual_op_rate < 0.0) throw validation_error("simulate: manual_op_rate must be >= 0");
    if (cfg.n_mtus * cfg.n_rtus > 90)
        throw validation_error("simulate: too many MTU-RTU pairs for one polling second");

    auto sorted = cfg.attacks;
    std::sort(sorted.begin(), sorted.end(),
              [](const AttackSpec& a, const AttackSpec& b) { return a.start_s < b.start_s; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto& a = sorted[i];
        if (a.duration_s <= 0.0) throw validation_error("simulate: attack duration must be positive");
        if (a.intensity <= 0.0) throw validation_error("simulate: attack intensity must be positive");
        if (a.start_s < 0.0 || a.end_s() > cfg.duration_s)
            throw validation_error("simulate: attack must lie inside [0, duration_s)");
        if (i > 0 && sorted[i - 1].end_s() > a.start_s)
            throw validation_error("simulate: overlapping attacks");
    }
}

inline std::string mtu_ip(int i) { return "192.168.0." + std::to_string(10 + i); }
inline std::string rtu_ip(int j) { return "192.168.1." + std::to_string(10 + j); }
inline int pair_port(int pair_idx) { return 49152 + pair_idx; }

} // namespace detail

/// Generate the labeled packet stream for a configuration. Deterministic for
/// a fixed seed: polling, operator actions and attacks each draw from their
/// own derived random stream, so toggling attacks never perturbs the benign
/// traffic.
///
/// Polling sends one request/response pair per MTU-RTU link every
/// poll_interval_s, all inside the polling second. Manual operations arrive
/// as a Poisson process but execute over the already-open connection during
/// the polling second of their period: they add 2-6 packets there without
/// touching the IP or port pair topology. Attack packets, and only attack
/// packets, carry malicious=true.
inline std::vector<PacketEvent> generate(const SimConfig& cfg) {
    detail::validate(cfg);

    const Rng root(cfg.rng_seed);
    std::vector<PacketEvent> events;

    // Periodic polling.
    {
        Rng rng = root.derive(0);
        for (std::int64_t T = 0; T < cfg.duration_s; T += cfg.poll_interval_s) {
            int pair_idx = 0;
            for (int i = 0; i < cfg.n_mtus; ++i) {
                for (int j = 0; j < cfg.n_rtus; ++j, ++pair_idx) {
                    const std::int64_t base =
                        T * 1'000'000 + pair_idx * 10'000 + rng.uniform_int(0, 2'000);
                    PacketEvent req;
                    req.timestamp_us = base;
                    req.src_ip = detail::mtu_ip(i);
                    req.dst_ip = detail::rtu_ip(j);
                    req.src_port = detail::pair_port(pair_idx);
                    req.dst_port = 502;
                    req.protocol = "modbus/tcp";
                    req.length_bytes = rng.uniform_int(60, 120);
                    req.flags = {"PSH", "ACK"};
                    req.function_code = 3;
                    PacketEvent rsp = req;
                    rsp.timestamp_us = base + 1'000 + rng.uniform_int(0, 1'000);
                    std::swap(rsp.src_ip, rsp.dst_ip);
                    std::swap(rsp.src_port, rsp.dst_port);
                    rsp.length_bytes = rng.uniform_int(60, 120);
                    events.push_back(std::move(req));
                    events.push_back(std::move(rsp));
                }
            }
        }
    }

    // Aperiodic manual operations.
    if (cfg.manual_op_rate > 0.0) {
        Rng rng = root.derive(1);
        const double rate_per_s = cfg.manual_op_rate / 60.0;
        double t = rng.exponential(rate_per_s);
        while (t < cfg.duration_s) {
            const std::int64_t poll_second =
                static_cast<std::int64_t>(t / cfg.poll_interval_s) * cfg.poll_interval_s;
            const int pair_idx =
                static_cast<int>(rng.uniform_int(0, cfg.n_mtus * cfg.n_rtus - 1));
            const int mtu = pair_idx / cfg.n_rtus;
            const int rtu = pair_idx % cfg.n_rtus;
            const int count = static_cast<int>(rng.uniform_int(2, 6));
            for (int k = 0; k < count; ++k) {
                PacketEvent ev;
                ev.timestamp_us = poll_second * 1'000'000 + 300'000 + k * 20'000 +
                                  rng.uniform_int(0, 5'000);
                const bool request = (k % 2 == 0);
                ev.src_ip = request ? detail::mtu_ip(mtu) : detail::rtu_ip(rtu);
                ev.dst_ip = request ? detail::rtu_ip(rtu) : detail::mtu_ip(mtu);
                ev.src_port = request ? detail::pair_port(pair_idx) : 502;
                ev.dst_port = request ? 502 : detail::pair_port(pair_idx);
                ev.protocol = "modbus/tcp";
                ev.length_bytes = rng.uniform_int(60, 120);
                ev.flags = {"PSH", "ACK"};
                ev.function_code = 16;
                events.push_back(std::move(ev));
            }
            t += rng.exponential(rate_per_s);
        }
    }

    // Attacks.
    {
        Rng rng = root.derive(2);
        int attack_idx = 0;
        for (const auto& atk : cfg.attacks) {
            const std::int64_t n_packets =
                std::max<std::int64_t>(1, std::llround(atk.intensity * atk.duration_s));
            for (std::int64_t k = 0; k < n_packets; ++k) {
                PacketEvent ev;
                ev.timestamp_us = static_cast<std::int64_t>(
                    std::llround((atk.start_s + static_cast<double>(k) / atk.intensity) * 1e6));
                ev.malicious = true;
                switch (atk.kind) {
                case AttackKind::scan_burst:
                    ev.src_ip = "10.66.6.6";
                    ev.dst_ip = detail::rtu_ip(static_cast<int>(k) % cfg.n_rtus);
                    ev.src_port = 55555;
                    ev.dst_port = 1000 + static_cast<int>(k % 60000);
                    ev.protocol = "tcp";
                    ev.length_bytes = 60;
                    ev.flags = {"SYN"};
                    break;
                case AttackKind::file_transfer:
                    ev.src_ip = "10.66.6.7";
                    ev.dst_ip = detail::rtu_ip(0);
                    ev.src_port = 56666;
                    ev.dst_port = 20;
                    ev.protocol = "tcp";
                    ev.length_bytes = rng.uniform_int(400, 1400);
                    ev.flags = {"PSH", "ACK"};
                    break;
                case AttackKind::fake_command:
                    // Reuses the first polling IP pair but a fresh source
                    // port, so packets and port pairs rise while IP pairs
                    // stay put.
                    ev.src_ip = detail::mtu_ip(0);
                    ev.dst_ip = detail::rtu_ip(0);
                    ev.src_port = 60000 + attack_idx;
                    ev.dst_port = 502;
                    ev.protocol = "modbus/tcp";
                    ev.length_bytes = rng.uniform_int(60, 80);
                    ev.flags = {"PSH", "ACK"};
                    ev.function_code = 5;
                    break;
                }
                events.push_back(std::move(ev));
            }
            ++attack_idx;
        }
    }

    std::stable_sort(events.begin(), events.end(),
                     [](const PacketEvent& a, const PacketEvent& b) {
                         return a.timestamp_us < b.timestamp_us;
                     });
    return events;
}

/// Ground-truth sidecar describing the injected attacks.
inline nlohmann::json truth_json(const SimConfig& cfg) {
    nlohmann::json attacks = nlohmann::json::array();
    for (const auto& a : cfg.attacks)
        attacks.push_back({{"kind", to_string(a.kind)},
                           {"start_s", a.start_s},
                           {"duration_s", a.duration_s},
                           {"end_s", a.end_s()},
                           {"intensity", a.intensity}});
    return {{"duration_s", cfg.duration_s},
            {"poll_interval_s", cfg.poll_interval_s},
            {"n_rtus", cfg.n_rtus},
            {"n_mtus", cfg.n_mtus},
            {"seed", cfg.rng_seed},
            {"attacks", attacks}};
}

} // namespace tsids::simulate
