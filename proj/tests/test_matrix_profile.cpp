#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <tsids/matrix_profile.hpp>
#include <tsids/rng.hpp>

#include "oracles.hpp"

using namespace tsids;
namespace mp = tsids::matrix_profile;

namespace {

std::vector<double> random_series(std::mt19937_64& eng, std::size_t n) {
    std::vector<double> s(n);
    for (auto& v : s) v = static_cast<double>(eng() >> 11) * 0x1.0p-53 * 10.0 - 5.0;
    return s;
}

} // namespace

TEST_CASE("sliding stats: constant series", "[matrix_profile]") {
    const std::vector<double> s(20, 3.25);
    const auto [means, stds] = mp::sliding_stats(s, 5);
    REQUIRE(means.size() == 16);
    for (const double m : means) CHECK(m == Catch::Approx(3.25));
    for (const double sd : stds) CHECK(sd == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("sliding stats: direct evaluation on [0,1,2,3]", "[matrix_profile]") {
    const std::vector<double> s = {0, 1, 2, 3};
    const auto [means, stds] = mp::sliding_stats(s, 2);
    REQUIRE(means.size() == 3);
    CHECK(means[0] == Catch::Approx(0.5));
    CHECK(means[1] == Catch::Approx(1.5));
    CHECK(means[2] == Catch::Approx(2.5));
    for (const double sd : stds) CHECK(sd == Catch::Approx(0.5));
}

TEST_CASE("sliding stats: running sums match per-window recomputation", "[matrix_profile]") {
    std::mt19937_64 eng(31);
    const auto s = random_series(eng, 300);
    const std::size_t m = 10;
    const auto [means, stds] = mp::sliding_stats(s, m);
    for (std::size_t t = 0; t < means.size(); ++t) {
        const auto mo = oracles::moments(std::span(s).subspan(t, m));
        CHECK(means[t] == Catch::Approx(mo.mean).margin(1e-9));
        CHECK(stds[t] == Catch::Approx(mo.sigma).margin(1e-9));
    }
    CHECK_THROWS_AS(mp::sliding_stats(std::vector<double>{1, 2}, 3), validation_error);
}

TEST_CASE("znorm distance: identical non-constant windows are at distance 0",
          "[matrix_profile]") {
    // The sqrt in d = sqrt(2m(1-corr)) amplifies the last-bit rounding of
    // corr at corr ~ 1, so "zero" means zero up to ~1e-7 here.
    const std::vector<double> x = {1, 5, 2, 8, 3};
    CHECK(mp::znorm_distance(x, x) == Catch::Approx(0.0).margin(1e-6));
}

TEST_CASE("znorm distance: uncorrelated windows sit at sqrt(2m)", "[matrix_profile]") {
    // Orthogonal shapes after normalization: corr = 0 exactly.
    const std::vector<double> x = {1, -1, 1, -1, 1, -1, 1, -1, 1, -1};
    const std::vector<double> y = {1, 1, -1, -1, 1, 1, -1, -1, 1, 1};
    CHECK(oracles::correlation(x, y) == Catch::Approx(0.0).margin(1e-12));
    CHECK(mp::znorm_distance(x, y) == Catch::Approx(std::sqrt(20.0)).margin(1e-9));
    CHECK(mp::znorm_distance(x, y) == Catch::Approx(4.47214).margin(1e-5));
}

TEST_CASE("znorm distance: working formula equals direct normalization", "[matrix_profile]") {
    std::mt19937_64 eng(77);
    for (int rep = 0; rep < 200; ++rep) {
        const auto x = random_series(eng, 10);
        const auto y = random_series(eng, 10);
        CHECK(mp::znorm_distance(x, y) ==
              Catch::Approx(oracles::znorm_distance_direct(x, y)).margin(1e-9));
    }
}

TEST_CASE("znorm distance properties: symmetry, shift/scale invariance, corr identity",
          "[matrix_profile]") {
    std::mt19937_64 eng(78);
    for (int rep = 0; rep < 100; ++rep) {
        const auto x = random_series(eng, 12);
        auto y = random_series(eng, 12);
        const double d = mp::znorm_distance(x, y);
        CHECK(d >= 0.0);
        CHECK(mp::znorm_distance(y, x) == Catch::Approx(d).margin(1e-12));

        // d = sqrt(2m(1-corr)) with corr from the covariance sum form.
        const double via_corr = std::sqrt(2.0 * 12 * (1.0 - oracles::correlation(x, y)));
        CHECK(d == Catch::Approx(via_corr).margin(1e-9));

        // Positive affine maps leave the distance unchanged.
        const double a = 0.5 + static_cast<double>(eng() % 100) / 25.0;
        const double b = static_cast<double>(eng() % 100) - 50.0;
        for (auto& v : y) v = a * v + b;
        CHECK(mp::znorm_distance(x, y) == Catch::Approx(d).margin(1e-9));
    }
}

TEST_CASE("znorm distance: degenerate windows follow the documented limits",
          "[matrix_profile]") {
    const std::vector<double> flat(10, 2.0);
    const std::vector<double> flat2(10, -7.0);
    const std::vector<double> wavy = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(mp::znorm_distance(flat, flat2) == 0.0);
    CHECK(mp::znorm_distance(flat, wavy) == Catch::Approx(std::sqrt(20.0)));
    CHECK(mp::znorm_distance(wavy, flat) == Catch::Approx(std::sqrt(20.0)));
}

TEST_CASE("left profile: periodic series goes quiet after the first period",
          "[matrix_profile]") {
    std::vector<double> s;
    for (int i = 0; i < 100; ++i) s.push_back(std::sin(2.0 * 3.14159265358979 * i / 10.0));
    mp::ProfileConfig cfg;
    cfg.m = 10;
    const auto result = mp::left_matrix_profile(s, cfg);
    REQUIRE(result.profile.size() == s.size());
    for (std::size_t t = 10; t + cfg.m <= s.size(); ++t) {
        REQUIRE(mp::defined(result.profile[t]));
        CHECK(result.profile[t] == Catch::Approx(0.0).margin(1e-7));
    }
    // No admissible predecessor inside the exclusion zone.
    for (std::size_t t = 0; t < cfg.effective_exclusion(); ++t)
        CHECK_FALSE(mp::defined(result.profile[t]));
}

TEST_CASE("left profile: spike discord stands out near the spike", "[matrix_profile]") {
    // Two clean periods as prefix, as in the detection setup; without one,
    // the earliest windows only see phase-shifted candidates and would
    // dominate the profile.
    std::vector<double> s, prefix;
    for (int i = 0; i < 20; ++i) prefix.push_back(std::sin(2.0 * 3.14159265358979 * i / 10.0));
    for (int i = 0; i < 200; ++i) s.push_back(std::sin(2.0 * 3.14159265358979 * i / 10.0));
    const std::size_t spike = 140;
    s[spike] += 8.0;
    mp::ProfileConfig cfg;
    cfg.m = 10;
    cfg.prefix = prefix;
    const auto result = mp::left_matrix_profile(s, cfg);

    // Oracle agrees (small instance, exact enumeration).
    const auto oracle =
        oracles::left_profile_bruteforce(s, prefix, cfg.m, cfg.effective_exclusion());
    std::size_t argmax = 0;
    double best = -1.0;
    for (std::size_t t = 0; t < oracle.size(); ++t) {
        if (std::isnan(oracle[t])) continue;
        CHECK(result.profile[t] == Catch::Approx(oracle[t]).margin(1e-6));
        if (oracle[t] > best) {
            best = oracle[t];
            argmax = t;
        }
    }
    // Windows containing the spike start in (spike-m, spike]; the discord
    // peak must sit in that contaminated band.
    CHECK(argmax + cfg.m > spike);
    CHECK(argmax <= spike);
    // The peak dwarfs the clean-region profile.
    for (std::size_t t = 0; t < 120; ++t)
        if (mp::defined(result.profile[t])) CHECK(result.profile[t] < best / 4.0);
}

TEST_CASE("left profile equals brute force on random series", "[matrix_profile]") {
    std::mt19937_64 eng(123);
    for (int rep = 0; rep < 12; ++rep) {
        const std::size_t n = 40 + eng() % 120;
        auto s = random_series(eng, n);
        if (rep % 3 == 0) { // inject a constant stretch to hit degenerate windows
            const std::size_t at = eng() % (n - 15);
            for (std::size_t i = at; i < at + 12; ++i) s[i] = 1.5;
        }
        mp::ProfileConfig cfg;
        cfg.m = (rep % 2 == 0) ? 4 : 10;
        const auto result = mp::left_matrix_profile(s, cfg);
        const auto oracle =
            oracles::left_profile_bruteforce(s, {}, cfg.m, cfg.effective_exclusion());
        REQUIRE(result.profile.size() == oracle.size());
        for (std::size_t t = 0; t < oracle.size(); ++t) {
            REQUIRE(mp::defined(result.profile[t]) == !std::isnan(oracle[t]));
            if (!std::isnan(oracle[t]))
                CHECK(result.profile[t] == Catch::Approx(oracle[t]).margin(1e-6));
        }
    }
}

TEST_CASE("left profile: prefix supplies early references and is not reported",
          "[matrix_profile]") {
    std::vector<double> s, prefix;
    for (int i = 0; i < 60; ++i) s.push_back(std::sin(2.0 * 3.14159265358979 * i / 10.0));
    for (int i = 0; i < 20; ++i) prefix.push_back(std::sin(2.0 * 3.14159265358979 * i / 10.0));
    mp::ProfileConfig cfg;
    cfg.m = 10;
    cfg.prefix = prefix;
    const auto result = mp::left_matrix_profile(s, cfg);
    CHECK(result.prefix_len == 20);
    REQUIRE(result.profile.size() == s.size());
    // With the prefix in place even second 0 has a reference.
    REQUIRE(mp::defined(result.profile[0]));
    CHECK(result.profile[0] == Catch::Approx(0.0).margin(1e-7));

    const auto oracle = oracles::left_profile_bruteforce(s, prefix, cfg.m, 5);
    for (std::size_t t = 0; t < oracle.size(); ++t)
        if (!std::isnan(oracle[t]))
            CHECK(result.profile[t] == Catch::Approx(oracle[t]).margin(1e-6));
}

TEST_CASE("left profile: size errors", "[matrix_profile]") {
    mp::ProfileConfig cfg;
    cfg.m = 10;
    CHECK_THROWS_AS(mp::left_matrix_profile(std::vector<double>{1, 2, 3}, cfg), validation_error);
    const std::vector<double> exactly_one_window(10, 1.0);
    CHECK_THROWS_AS(mp::left_matrix_profile(exactly_one_window, cfg), validation_error);
}

TEST_CASE("perfect threshold: enumerated example", "[matrix_profile]") {
    mp::ProfileResult result;
    result.m = 2;
    result.profile = {0, 0, 5, 0, 3, 0};
    const std::vector<AttackInterval> attacks = {{2, 2}, {4, 4}};
    const double T = mp::perfect_threshold(result, attacks);
    CHECK(T == 3.0);
    CHECK(mp::flag_at_threshold(result, T) == std::vector<std::size_t>{2, 4});

    // Exhaustive check of maximality: any higher threshold misses an attack.
    for (double cand = T + 0.1; cand < 6.0; cand += 0.1) {
        const auto flags = mp::flag_at_threshold(result, cand);
        bool covers_all = true;
        for (const auto& atk : attacks) {
            bool hit = false;
            for (const auto f : flags) hit |= (f >= atk.start_s && f <= atk.end_s);
            covers_all &= hit;
        }
        CHECK_FALSE(covers_all);
    }
}

TEST_CASE("perfect threshold: degenerate cases", "[matrix_profile]") {
    mp::ProfileResult result;
    result.m = 2;
    result.profile = {0, 1, 2, 9, 1, 0};
    // Single attack covering the global max.
    const std::vector<AttackInterval> one = {{2, 4}};
    CHECK(mp::perfect_threshold(result, one) == 9.0);

    // All-zero profile: threshold 0 flags everything.
    mp::ProfileResult zeros;
    zeros.m = 2;
    zeros.profile = {0, 0, 0, 0};
    CHECK(mp::perfect_threshold(zeros, one) == 0.0);
    CHECK(mp::flag_at_threshold(zeros, 0.0).size() == 4);

    // Attack interval lying entirely in the undefined region.
    mp::ProfileResult holey;
    holey.m = 2;
    holey.profile = {std::numeric_limits<double>::quiet_NaN(),
                     std::numeric_limits<double>::quiet_NaN(), 1.0};
    const std::vector<AttackInterval> bad = {{0, 1}};
    CHECK_THROWS_WITH(mp::perfect_threshold(holey, bad),
                      Catch::Matchers::ContainsSubstring("[0,1]"));

    CHECK_THROWS_AS(mp::perfect_threshold(result, std::vector<AttackInterval>{}),
                    validation_error);
}

TEST_CASE("detection monotonicity: lowering the threshold never unflags", "[matrix_profile]") {
    std::mt19937_64 eng(9);
    mp::ProfileResult result;
    result.m = 4;
    result.profile = random_series(eng, 80);
    for (auto& v : result.profile) v = std::fabs(v);
    const auto high = mp::flag_at_threshold(result, 3.0);
    const auto low = mp::flag_at_threshold(result, 1.0);
    for (const auto t : high) CHECK(std::find(low.begin(), low.end(), t) != low.end());
}
