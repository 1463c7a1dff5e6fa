#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include <tsids/eval.hpp>
#include <tsids/rng.hpp>

using namespace tsids;
namespace ev = tsids::eval;

namespace {

std::vector<std::uint8_t> mask(std::size_t n, std::initializer_list<std::size_t> ones) {
    std::vector<std::uint8_t> m(n, 0);
    for (const auto i : ones) m[i] = 1;
    return m;
}

std::vector<std::uint8_t> all_ones(std::size_t n) { return std::vector<std::uint8_t>(n, 1); }

} // namespace

TEST_CASE("confusion: exact flag set gives no errors", "[eval]") {
    const auto labels = mask(10, {2, 5});
    const std::vector<std::size_t> flagged = {2, 5};
    const auto c = ev::confusion(flagged, labels, all_ones(10));
    CHECK(c.tp == 2);
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);
    CHECK(c.tn == 8);
}

TEST_CASE("confusion: nothing flagged counts all malicious as misses", "[eval]") {
    const auto labels = mask(12, {1, 4, 9});
    const auto c = ev::confusion({}, labels, all_ones(12));
    CHECK(c.tp == 0);
    CHECK(c.fn == 3);
    CHECK(c.tn == 9);
}

TEST_CASE("confusion: hand-counted mixed case", "[eval]") {
    const auto labels = mask(10, {2, 5});
    const std::vector<std::size_t> flagged = {2, 4};
    const auto c = ev::confusion(flagged, labels, all_ones(10));
    CHECK(c.tp == 1);
    CHECK(c.fp == 1);
    CHECK(c.fn == 1);
    CHECK(c.tn == 7);

    // Flag order does not matter, and recomputing is idempotent.
    const std::vector<std::size_t> reversed = {4, 2};
    const auto c2 = ev::confusion(reversed, labels, all_ones(10));
    CHECK(c2.tp == c.tp);
    CHECK(c2.fp == c.fp);
    CHECK(c2.fn == c.fn);
    CHECK(c2.tn == c.tn);
    const auto m1 = ev::metrics(c);
    const auto m2 = ev::metrics(c2);
    CHECK(m1.accuracy == m2.accuracy);
    CHECK(m1.f1 == m2.f1);
}

TEST_CASE("confusion: non-evaluable seconds are excluded everywhere", "[eval]") {
    auto evaluable = all_ones(10);
    evaluable[0] = evaluable[1] = 0;
    const auto labels = mask(10, {1, 5});
    const auto c = ev::confusion(std::vector<std::size_t>{5}, labels, evaluable);
    CHECK(c.total() == 8);
    CHECK(c.tp == 1);
    CHECK(c.fn == 0); // the labeled second 1 is not evaluable

    CHECK_THROWS_AS(ev::confusion(std::vector<std::size_t>{0}, labels, evaluable),
                    validation_error);
    CHECK_THROWS_AS(ev::confusion(std::vector<std::size_t>{42}, labels, evaluable),
                    validation_error);
}

TEST_CASE("metrics: direct evaluation", "[eval]") {
    const auto m = ev::metrics({2, 1, 5, 2});
    REQUIRE(m.precision);
    REQUIRE(m.recall);
    REQUIRE(m.f1);
    CHECK(*m.precision == Catch::Approx(0.6667).margin(1e-4));
    CHECK(*m.recall == Catch::Approx(0.5).margin(1e-4));
    CHECK(*m.f1 == Catch::Approx(0.5714).margin(1e-4));
    CHECK(m.accuracy == Catch::Approx(0.7).margin(1e-4));
}

TEST_CASE("metrics: perfect detection", "[eval]") {
    const auto m = ev::metrics({4, 0, 6, 0});
    CHECK(*m.precision == 1.0);
    CHECK(*m.recall == 1.0);
    CHECK(*m.f1 == 1.0);
    CHECK(m.accuracy == 1.0);
}

TEST_CASE("metrics: class-imbalance pathology keeps accuracy high with undefined f1",
          "[eval]") {
    // One missed attack among hundreds of quiet seconds.
    const auto m = ev::metrics({0, 0, 670, 1});
    CHECK(m.accuracy > 0.99);
    CHECK_FALSE(m.precision.has_value()); // nothing was flagged
    REQUIRE(m.recall.has_value());
    CHECK(*m.recall == 0.0);
    CHECK_FALSE(m.f1.has_value());

    CHECK_THROWS_AS(ev::metrics({0, 0, 0, 0}), validation_error);
}

TEST_CASE("metrics: undefined is explicit, never coerced to zero", "[eval]") {
    const auto j = ev::report_to_json([] {
        ev::DetectionReport r;
        r.detector = "lstm";
        r.feature = "packets";
        r.counts = ev::ConfusionCounts{0, 0, 670, 1};
        r.metric_values = ev::metrics(*r.counts);
        return r;
    }());
    CHECK(j["metrics"]["precision"].is_null());
    CHECK(j["metrics"]["f1"].is_null());
    CHECK(j["metrics"]["recall"].get<double>() == 0.0);
    CHECK(j["metrics"]["accuracy"].get<double>() > 0.99);
}

TEST_CASE("metrics invariants on generated counts", "[eval]") {
    Rng rng(44);
    for (int rep = 0; rep < 200; ++rep) {
        ev::ConfusionCounts c{static_cast<std::size_t>(rng.uniform_int(0, 20)),
                              static_cast<std::size_t>(rng.uniform_int(0, 20)),
                              static_cast<std::size_t>(rng.uniform_int(0, 2000)),
                              static_cast<std::size_t>(rng.uniform_int(0, 20))};
        if (c.total() == 0) continue;
        const auto m = ev::metrics(c);
        CHECK(m.accuracy >= 0.0);
        CHECK(m.accuracy <= 1.0);
        if (m.f1 && c.tn >= 100 * (c.tp + c.fp + c.fn)) CHECK(m.accuracy >= *m.f1);

        // A further true negative lifts accuracy and leaves the rest alone.
        auto c2 = c;
        c2.tn += 1;
        const auto m2 = ev::metrics(c2);
        CHECK(m2.accuracy >= m.accuracy);
        CHECK(m2.precision == m.precision);
        CHECK(m2.recall == m.recall);
        CHECK(m2.f1 == m.f1);
    }
}

TEST_CASE("latency: sub-second attack start detected at the following second", "[eval]") {
    const std::vector<ev::RealInterval> attacks = {{32.9679, 33.9679}};
    const std::vector<std::size_t> flagged = {34};
    const auto table = ev::latency(flagged, attacks);
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].attack_start == 32.9679);
    REQUIRE(table.rows[0].first_detection);
    CHECK(*table.rows[0].first_detection == 34);
    CHECK(table.false_positives.empty());
}

TEST_CASE("latency: flag at the floor second means sub-second latency", "[eval]") {
    const std::vector<ev::RealInterval> attacks = {{44.3293, 45.3293}};
    const auto table = ev::latency(std::vector<std::size_t>{44}, attacks);
    REQUIRE(table.rows[0].first_detection);
    CHECK(*table.rows[0].first_detection == 44);
}

TEST_CASE("latency: unattributed flags become false-positive rows", "[eval]") {
    const std::vector<ev::RealInterval> attacks = {{44.3293, 45.0}, {64.1758, 65.0}};
    const std::vector<std::size_t> flagged = {45, 63, 65};
    const auto table = ev::latency(flagged, attacks);
    REQUIRE(table.rows.size() == 2);
    CHECK(*table.rows[0].first_detection == 45);
    CHECK(*table.rows[1].first_detection == 65);
    // Second 63 covers no attack window: 63 < floor(64.1758).
    CHECK(table.false_positives == std::vector<std::size_t>{63});

    // Missed attack reports null.
    const auto missed = ev::latency(std::vector<std::size_t>{}, attacks);
    CHECK_FALSE(missed.rows[0].first_detection.has_value());

    const std::vector<ev::RealInterval> unsorted = {{64.0, 65.0}, {44.0, 45.0}};
    CHECK_THROWS_AS(ev::latency(flagged, unsorted), validation_error);
}

TEST_CASE("report json shape", "[eval]") {
    ev::DetectionReport r;
    r.detector = "sarima";
    r.feature = "port_pairs";
    r.thresholds = {{"abs_error", 1.05293}};
    r.flagged = {290};
    r.counts = ev::ConfusionCounts{1, 0, 650, 0};
    r.metric_values = ev::metrics(*r.counts);
    r.latency_rows = {{289.4079, 290}};
    const auto j = ev::report_to_json(r);
    CHECK(j["detector"] == "sarima");
    CHECK(j["feature"] == "port_pairs");
    CHECK(j["thresholds"]["abs_error"].get<double>() == Catch::Approx(1.05293));
    CHECK(j["counts"]["tp"] == 1);
    CHECK(j["latency"][0]["attack_start"].get<double>() == Catch::Approx(289.4079));
    CHECK(j["latency"][0]["first_detection"] == 290);
    CHECK(j["false_positives"].empty());

    // Matrix-profile style report: latency only, metrics explicitly absent.
    ev::DetectionReport mp;
    mp.detector = "matrix_profile";
    mp.feature = "packets";
    const auto jmp = ev::report_to_json(mp);
    CHECK(jmp["counts"].is_null());
    CHECK(jmp["metrics"].is_null());
}
