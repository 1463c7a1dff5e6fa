#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <sstream>
#include <string>

#include <tsids/ingest.hpp>

using namespace tsids;

namespace {

std::string header() { return std::string(ingest::kEventCsvHeader) + "\n"; }

PacketEvent mk(std::int64_t us, std::string src, std::string dst, int sport, int dport,
               bool malicious = false) {
    PacketEvent ev;
    ev.timestamp_us = us;
    ev.src_ip = std::move(src);
    ev.dst_ip = std::move(dst);
    ev.src_port = sport;
    ev.dst_port = dport;
    ev.protocol = "modbus/tcp";
    ev.length_bytes = 64;
    ev.malicious = malicious;
    return ev;
}

} // namespace

TEST_CASE("parse_events: empty stream gives empty list", "[ingest]") {
    CHECK(ingest::parse_events(std::string{}).empty());
    CHECK(ingest::parse_events(header()).empty());
}

TEST_CASE("parse_events: one well-formed malicious row", "[ingest]") {
    const auto events = ingest::parse_events(
        header() + "1500000,10.0.0.1,10.0.0.2,49152,502,modbus/tcp,64,PSH;ACK,3,1\n");
    REQUIRE(events.size() == 1);
    const auto& ev = events[0];
    CHECK(ev.timestamp_us == 1'500'000);
    CHECK(ev.src_ip == "10.0.0.1");
    CHECK(ev.dst_port == 502);
    CHECK(ev.flags == std::vector<std::string>{"PSH", "ACK"});
    REQUIRE(ev.function_code.has_value());
    CHECK(*ev.function_code == 3);
    CHECK(ev.malicious);
}

TEST_CASE("parse_events: optional cells may be empty", "[ingest]") {
    const auto events =
        ingest::parse_events(header() + "0,a,b,1,2,tcp,60,,,0\n");
    REQUIRE(events.size() == 1);
    CHECK(events[0].flags.empty());
    CHECK_FALSE(events[0].function_code.has_value());
}

TEST_CASE("parse_events: shuffled timestamps come back sorted", "[ingest]") {
    std::string text = header();
    const std::int64_t stamps[] = {4'000'000, 1'000'000, 3'000'000, 0, 2'000'000};
    for (const auto us : stamps)
        text += std::to_string(us) + ",a,b,1,2,tcp,60,,,0\n";
    const auto events = ingest::parse_events(text);
    REQUIRE(events.size() == 5);
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(events[i].timestamp_us == static_cast<std::int64_t>(i) * 1'000'000);
}

TEST_CASE("parse_events: errors carry line numbers", "[ingest]") {
    CHECK_THROWS_WITH(ingest::parse_events(header() + "0,a,b,1,2,tcp,60,,0\n"),
                      Catch::Matchers::ContainsSubstring("line 2"));
    CHECK_THROWS_AS(ingest::parse_events(header() + "0,a,b,1,2,tcp,60,,,2\n"), parse_error);
    CHECK_THROWS_AS(ingest::parse_events(header() + "0,a,b,1,99999,tcp,60,,,0\n"),
                    validation_error);
    CHECK_THROWS_AS(ingest::parse_events(header() + "notanumber,a,b,1,2,tcp,60,,,0\n"),
                    parse_error);
    CHECK_THROWS_AS(ingest::parse_events("wrong,header\n0,a,b,1,2,tcp,60,,,0\n"), parse_error);
}

TEST_CASE("parse_events: JSONL input", "[ingest]") {
    const std::string text =
        R"({"timestamp_us": 2000000, "src_ip": "a", "dst_ip": "b", "src_port": 1, "dst_port": 2,)"
        R"( "protocol": "tcp", "length_bytes": 60, "flags": ["SYN"], "malicious": true})"
        "\n"
        R"({"timestamp_us": 1000000, "src_ip": "a", "dst_ip": "b", "src_port": 1, "dst_port": 2,)"
        R"( "protocol": "tcp", "length_bytes": 61, "function_code": 5, "malicious": 0})"
        "\n";
    const auto events = ingest::parse_events(text);
    REQUIRE(events.size() == 2);
    CHECK(events[0].timestamp_us == 1'000'000); // sorted
    CHECK(events[0].function_code.value() == 5);
    CHECK(events[1].malicious);
    CHECK(events[1].flags == std::vector<std::string>{"SYN"});
}

TEST_CASE("aggregate: empty input gives empty series", "[ingest]") {
    const auto fs = ingest::aggregate_per_second({});
    CHECK(fs.n_seconds == 0);
    CHECK(fs.packets.empty());
}

TEST_CASE("aggregate: distinct pair counting", "[ingest]") {
    // 3 packets between A and B on port pairs {502,1000}, {502,1000}, {502,1001}.
    std::vector<PacketEvent> events = {
        mk(100, "A", "B", 1000, 502),
        mk(200, "B", "A", 502, 1000), // response direction, same pairs
        mk(300, "A", "B", 1001, 502),
    };
    const auto fs = ingest::aggregate_per_second(events);
    REQUIRE(fs.n_seconds == 1);
    CHECK(fs.packets[0] == 3.0);
    CHECK(fs.ip_pairs[0] == 1.0);
    CHECK(fs.port_pairs[0] == 2.0);
}

TEST_CASE("aggregate: labels mark the malicious second and its interval", "[ingest]") {
    std::vector<PacketEvent> events;
    for (int t = 0; t < 8; ++t) events.push_back(mk(t * 1'000'000, "A", "B", 1000, 502));
    events.push_back(mk(4'500'000, "X", "B", 7777, 502, true));
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.timestamp_us < b.timestamp_us; });
    const auto fs = ingest::aggregate_per_second(events);
    REQUIRE(fs.n_seconds == 8);
    for (std::size_t t = 0; t < 8; ++t) CHECK(int(fs.label[t]) == (t == 4 ? 1 : 0));
    REQUIRE(fs.attack_intervals.size() == 1);
    CHECK(fs.attack_intervals[0].start_s == 4);
    CHECK(fs.attack_intervals[0].end_s == 4);
}

TEST_CASE("aggregate: second boundaries are half-open", "[ingest]") {
    std::vector<PacketEvent> events = {mk(999'999, "A", "B", 1, 2), mk(1'000'000, "A", "B", 1, 2)};
    const auto fs = ingest::aggregate_per_second(events);
    REQUIRE(fs.n_seconds == 2);
    CHECK(fs.packets[0] == 1.0);
    CHECK(fs.packets[1] == 1.0);
}

TEST_CASE("aggregate: zero-packet seconds are zeros, not gaps", "[ingest]") {
    std::vector<PacketEvent> events = {mk(0, "A", "B", 1, 2), mk(5'000'000, "A", "B", 1, 2)};
    const auto fs = ingest::aggregate_per_second(events);
    REQUIRE(fs.n_seconds == 6);
    for (std::size_t t = 1; t < 5; ++t) {
        CHECK(fs.packets[t] == 0.0);
        CHECK(fs.ip_pairs[t] == 0.0);
    }
}

TEST_CASE("aggregate: unsorted input is rejected", "[ingest]") {
    std::vector<PacketEvent> events = {mk(2'000'000, "A", "B", 1, 2), mk(0, "A", "B", 1, 2)};
    CHECK_THROWS_AS(ingest::aggregate_per_second(events), validation_error);
}

TEST_CASE("aggregate properties: conservation, pair bounds, direction symmetry", "[ingest]") {
    std::mt19937_64 eng(99);
    std::vector<PacketEvent> events;
    const char* hosts[] = {"h0", "h1", "h2", "h3"};
    for (int i = 0; i < 300; ++i) {
        PacketEvent ev = mk(static_cast<std::int64_t>(eng() % 20'000'000),
                            hosts[eng() % 4], hosts[eng() % 4], static_cast<int>(eng() % 5) + 500,
                            static_cast<int>(eng() % 5) + 500, eng() % 7 == 0);
        events.push_back(ev);
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.timestamp_us < b.timestamp_us; });
    const auto fs = ingest::aggregate_per_second(events);

    double total = 0.0;
    for (std::size_t t = 0; t < fs.n_seconds; ++t) {
        total += fs.packets[t];
        CHECK(fs.ip_pairs[t] <= fs.packets[t]);
        CHECK(fs.port_pairs[t] <= fs.packets[t]);
    }
    CHECK(total == static_cast<double>(events.size()));

    // Swapping src/dst on every event leaves all three series unchanged.
    auto swapped = events;
    for (auto& ev : swapped) {
        std::swap(ev.src_ip, ev.dst_ip);
        std::swap(ev.src_port, ev.dst_port);
    }
    const auto fs2 = ingest::aggregate_per_second(swapped);
    CHECK(fs2.packets == fs.packets);
    CHECK(fs2.ip_pairs == fs.ip_pairs);
    CHECK(fs2.port_pairs == fs.port_pairs);
}

TEST_CASE("round-trip: serialize, reparse, re-aggregate is identical", "[ingest]") {
    std::mt19937_64 eng(7);
    std::vector<PacketEvent> events;
    for (int i = 0; i < 120; ++i) {
        PacketEvent ev = mk(static_cast<std::int64_t>(eng() % 9'000'000), "a", "b",
                            static_cast<int>(eng() % 100) + 1000, 502, eng() % 11 == 0);
        if (eng() % 3 == 0) ev.flags = {"PSH", "ACK"};
        if (eng() % 4 == 0) ev.function_code = static_cast<int>(eng() % 16);
        events.push_back(ev);
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const auto& a, const auto& b) { return a.timestamp_us < b.timestamp_us; });

    std::ostringstream out;
    ingest::write_events_csv(out, events);
    const auto reparsed = ingest::parse_events(out.str());
    REQUIRE(reparsed.size() == events.size());

    const auto fs1 = ingest::aggregate_per_second(events);
    const auto fs2 = ingest::aggregate_per_second(reparsed);
    CHECK(fs1.packets == fs2.packets);
    CHECK(fs1.ip_pairs == fs2.ip_pairs);
    CHECK(fs1.port_pairs == fs2.port_pairs);
    CHECK(fs1.bytes == fs2.bytes);
    CHECK(fs1.protocols == fs2.protocols);
    CHECK(fs1.label == fs2.label);
    CHECK(fs1.onehot == fs2.onehot);
}

TEST_CASE("feature csv: write then read round-trips", "[ingest]") {
    std::vector<PacketEvent> events = {mk(0, "A", "B", 1, 2), mk(1'200'000, "A", "B", 1, 2, true),
                                       mk(3'400'000, "A", "C", 3, 4)};
    const auto fs = ingest::aggregate_per_second(events);
    std::ostringstream out;
    ingest::write_features_csv(out, fs, /*with_extras=*/true);
    std::istringstream in(out.str());
    const auto back = ingest::read_features_csv(in);
    CHECK(back.n_seconds == fs.n_seconds);
    CHECK(back.packets == fs.packets);
    CHECK(back.ip_pairs == fs.ip_pairs);
    CHECK(back.port_pairs == fs.port_pairs);
    CHECK(back.bytes == fs.bytes);
    CHECK(back.label == fs.label);
    REQUIRE(back.attack_intervals.size() == 1);
    CHECK(back.attack_intervals[0].start_s == 1);
}
