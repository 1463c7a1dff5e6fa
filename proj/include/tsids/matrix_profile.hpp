#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsids/errors.hpp"
#include "tsids/feature_series.hpp"

namespace tsids::matrix_profile {

/// Below this sigma a window counts as constant for distance purposes.
inline constexpr double kDegenerateSigma = 1e-12;

struct ProfileConfig {
    std::size_t m = 10;
    std::size_t exclusion = 0;   // 0 selects the default m/2 (at least 1)
    std::vector<double> prefix;  // clean segment prepended as early reference

    std::size_t effective_exclusion() const {
        return exclusion != 0 ? exclusion : std::max<std::size_t>(1, m / 2);
    }
};

/// Left matrix profile over one feature series. profile[t] is the minimal
/// z-normalized distance from the window starting at second t to any window
/// starting at least one exclusion zone earlier; NaN marks positions with no
/// admissible predecessor or no complete window. Prefix positions take part
/// as comparison candidates but are not reported.
struct ProfileResult {
    std::vector<double> profile;
    std::size_t m = 0;
    std::size_t prefix_len = 0;
};

inline bool defined(double v) { return !std::isnan(v); }

/// Per-window mean and population standard deviation over windows of length
/// m, computed from running sums.
inline std::pair<std::vector<double>, std::vector<double>>
sliding_stats(std::span<const double> series, std::size_t m) {
    if (m < 2) throw validation_error("sliding_stats: m must be >= 2");
    if (series.size() < m)
        throw validation_error("sliding_stats: series length " + std::to_string(series.size()) +
                               " shorter than window " + std::to_string(m));
    const std::size_t n_win = series.size() - m + 1;
    std::vector<double> means(n_win), stds(n_win);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sum += series[i];
        sum_sq += series[i] * series[i];
    }
    for (std::size_t t = 0;; ++t) {
        const double mu = sum / static_cast<double>(m);
        const double var = sum_sq / static_cast<double>(m) - mu * mu;
        means[t] = mu;
        stds[t] = std::sqrt(std::max(0.0, var));
        if (t + 1 == n_win) break;
        sum += series[t + m] - series[t];
        sum_sq += series[t + m] * series[t + m] - series[t] * series[t];
    }
    return {std::move(means), std::move(stds)};
}

namespace detail {

/// Distance from correlation, with the degenerate-window conventions:
/// two constant windows match exactly, a constant against a varying window
/// sits at the uncorrelated distance sqrt(2m).
inline double distance_from_moments(double dot, double mu_x, double mu_y, double sigma_x,
                                    double sigma_y, std::size_t m) {
    const double md = static_cast<double>(m);
    if (sigma_x < kDegenerateSigma && sigma_y < kDegenerateSigma) return 0.0;
    if (sigma_x < kDegenerateSigma || sigma_y < kDegenerateSigma) return std::sqrt(2.0 * md);
    double corr = (dot - md * mu_x * mu_y) / (md * sigma_x * sigma_y);
    corr = std::clamp(corr, -1.0, 1.0);
    return std::sqrt(2.0 * md * (1.0 - corr));
}

} // namespace detail

/// z-normalized distance between two windows of equal length via the
/// correlation working formula d = sqrt(2m(1-corr)).
inline double znorm_distance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty())
        throw validation_error("znorm_distance: windows must share a positive length");
    const std::size_t m = x.size();
    double sum_x = 0.0, sum_y = 0.0, sum_xx = 0.0, sum_yy = 0.0, dot = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sum_x += x[i];
        sum_y += y[i];
        sum_xx += x[i] * x[i];
        sum_yy += y[i] * y[i];
        dot += x[i] * y[i];
    }
    const double md = static_cast<double>(m);
    const double mu_x = sum_x / md;
    const double mu_y = sum_y / md;
    const double sigma_x = std::sqrt(std::max(0.0, sum_xx / md - mu_x * mu_x));
    const double sigma_y = std::sqrt(std::max(0.0, sum_yy / md - mu_y * mu_y));
    return detail::distance_from_moments(dot, mu_x, mu_y, sigma_x, sigma_y, m);
}

/// Compute the left matrix profile. Windows are compared only against
/// windows starting at least effective_exclusion() positions earlier, which
/// keeps the detection causal and skips trivial self-matches. The optional
/// prefix is prepended before computing and removed from the report.
///
/// The kernel walks each diagonal of the (implicit) distance matrix and
/// maintains the window dot product incrementally, so a full profile costs
/// O(n^2) instead of O(n^2 m).
inline ProfileResult left_matrix_profile(std::span<const double> series,
                                         const ProfileConfig& config) {
    if (config.m < 2) throw validation_error("left_matrix_profile: m must be >= 2");
    const std::size_t m = config.m;
    const std::size_t excl = config.effective_exclusion();
    const std::size_t L = config.prefix.size();

    std::vector<double> full;
    full.reserve(L + series.size());
    full.insert(full.end(), config.prefix.begin(), config.prefix.end());
    full.insert(full.end(), series.begin(), series.end());

    if (full.size() < m)
        throw validation_error("left_matrix_profile: series shorter than one window");
    if (full.size() < m + excl)
        throw validation_error("left_matrix_profile: need length >= m + exclusion, have " +
                               std::to_string(full.size()));

    const std::size_t n_win = full.size() - m + 1;
    const auto [means, stds] = sliding_stats(full, m);

    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> best(n_win, std::numeric_limits<double>::infinity());

    for (std::size_t k = excl; k < n_win; ++k) {
        double dot = 0.0;
        for (std::size_t r = 0; r < m; ++r) dot += full[r] * full[k + r];
        for (std::size_t j = 0, i = k;; ++j, ++i) {
            const double d = detail::distance_from_moments(dot, means[i], means[j], stds[i],
                                                           stds[j], m);
            if (d < best[i]) best[i] = d;
            if (i + 1 == n_win) break;
            dot += full[j + m] * full[i + m] - full[j] * full[i];
        }
    }

    ProfileResult result;
    result.m = m;
    result.prefix_len = L;
    result.profile.assign(series.size(), nan);
    for (std::size_t t = 0; t < series.size(); ++t) {
        const std::size_t i = L + t;
        if (i < n_win && i >= excl) result.profile[t] = best[i];
    }
    return result;
}

/// Largest threshold that still flags at least one second of every attack:
/// the minimum over attacks of the attack's profile peak. Detection flags
/// profile[t] >= T.
inline double perfect_threshold(const ProfileResult& result,
                                std::span<const AttackInterval> attacks) {
    if (attacks.empty())
        throw validation_error("perfect_threshold: need at least one attack interval");
    double threshold = std::numeric_limits<double>::infinity();
    for (const auto& atk : attacks) {
        double peak = -1.0;
        for (std::size_t t = atk.start_s; t <= atk.end_s && t < result.profile.size(); ++t)
            if (defined(result.profile[t])) peak = std::max(peak, result.profile[t]);
        if (peak < 0.0)
            throw validation_error("perfect_threshold: attack interval [" +
                                   std::to_string(atk.start_s) + "," + std::to_string(atk.end_s) +
                                   "] has no defined profile point");
        threshold = std::min(threshold, peak);
    }
    return threshold;
}

/// Seconds whose profile value reaches the threshold.
inline std::vector<std::size_t> flag_at_threshold(const ProfileResult& result, double threshold) {
    std::vector<std::size_t> flagged;
    for (std::size_t t = 0; t < result.profile.size(); ++t)
        if (defined(result.profile[t]) && result.profile[t] >= threshold) flagged.push_back(t);
    return flagged;
}

} // namespace tsids::matrix_profile
