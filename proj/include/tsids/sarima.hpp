#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsids/errors.hpp"
#include "tsids/linalg.hpp"
#include "tsids/stats.hpp"

namespace tsids::sarima {

/// Model orders. This toolkit implements the pure seasonal AR family the
/// detection procedure relies on, so differencing and moving-average orders
/// must be zero; anything else is rejected at fit time.
struct SarimaOrders {
    int p = 4;
    int d = 0;
    int q = 0;
    int P = 1;
    int D = 0;
    int Q = 0;
    int s = 10;

    int warmup() const { return P * s + p; }
};

struct FitInfo {
    std::size_t iters = 0;
    double final_loss = 0.0; // mean squared one-step error at the solution
    double grad_norm = 0.0;
    bool converged = false; // gradient tolerance reached before max_iters
};

struct SarimaModel {
    SarimaOrders orders;
    std::vector<double> alpha; // non-seasonal AR coefficients, lag 1..p
    std::vector<double> phi;   // seasonal AR coefficients, lag s..s*P
    double sigma2 = 0.0;       // innovation variance estimate
    std::vector<double> seasonal_means; // per-phase training means, phase 0..s-1
    FitInfo fit;
};

struct GdConfig {
    double learning_rate = 1e-3;
    std::size_t max_iters = 50'000;
    double tol = 1e-8; // stop when the mean-squared-loss gradient norm drops below this
    std::vector<double> init_alpha; // empty = zeros
    std::vector<double> init_phi;   // empty = zeros
};

namespace detail {

inline void require_supported(const SarimaOrders& o) {
    if (o.d != 0 || o.D != 0 || o.q != 0 || o.Q != 0)
        throw validation_error("sarima: only d=D=0 and q=Q=0 orders are supported");
    if (o.p < 0 || o.P < 0) throw validation_error("sarima: negative AR order");
    if (o.s < 1) throw validation_error("sarima: season length must be >= 1");
}

/// Autocovariances r[0..max_lag] with divisor N and mean centering.
inline std::vector<double> autocovariance(std::span<const double> x, std::size_t max_lag) {
    const std::size_t n = x.size();
    double mean = 0.0;
    for (const double v : x) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> r(max_lag + 1, 0.0);
    for (std::size_t tau = 0; tau <= max_lag; ++tau) {
        double sum = 0.0;
        for (std::size_t k = 0; k + tau < n; ++k) sum += (x[k] - mean) * (x[k + tau] - mean);
        r[tau] = sum / static_cast<double>(n);
    }
    return r;
}

/// One-step prediction at (virtual) index t given everything before it:
///   Y*_t = sum_j a_j Y_{t-j} + sum_k f_k Y_{t-sk} - sum_jk a_j f_k Y_{t-sk-j}
/// `back(b)` must return Y_{t-b}.
template <class Back>
inline double predict_with(Back&& back, std::span<const double> alpha,
                           std::span<const double> phi, int s) {
    double pred = 0.0;
    for (std::size_t j = 0; j < alpha.size(); ++j) pred += alpha[j] * back(j + 1);
    for (std::size_t k = 0; k < phi.size(); ++k) {
        pred += phi[k] * back(static_cast<std::size_t>(s) * (k + 1));
        for (std::size_t j = 0; j < alpha.size(); ++j)
            pred -= alpha[j] * phi[k] * back(static_cast<std::size_t>(s) * (k + 1) + j + 1);
    }
    return pred;
}

} // namespace detail

/// Sample autocorrelations rho[0..max_lag].
inline std::vector<double> acf(std::span<const double> series, std::size_t max_lag) {
    if (series.size() < 2) throw validation_error("acf: need at least 2 points");
    if (max_lag >= series.size())
        throw validation_error("acf: max_lag must be smaller than the series length");
    auto r = detail::autocovariance(series, max_lag);
    const double r0 = r[0];
    if (r0 <= 0.0) throw numeric_error("acf: zero-variance series");
    for (auto& v : r) v /= r0;
    return r;
}

/// Sample partial autocorrelations for lags 1..max_lag (lag k at index k-1),
/// each obtained by solving the Yule-Walker system of that order exactly and
/// keeping the last component.
inline std::vector<double> pacf(std::span<const double> series, std::size_t max_lag) {
    if (max_lag == 0) return {};
    if (max_lag >= series.size())
        throw validation_error("pacf: max_lag must be smaller than the series length");
    const auto r = detail::autocovariance(series, max_lag);
    if (r[0] <= 0.0) throw numeric_error("pacf: zero-variance series");

    std::vector<double> out(max_lag, 0.0);
    for (std::size_t tau = 1; tau <= max_lag; ++tau) {
        Matrix R(tau, tau);
        std::vector<double> rhs(tau);
        for (std::size_t t = 0; t < tau; ++t) {
            rhs[t] = r[t + 1];
            for (std::size_t k = 0; k < tau; ++k)
                R(t, k) = r[t >= k ? t - k : k - t];
        }
        try {
            out[tau - 1] = solve_dense(std::move(R), std::move(rhs)).back();
        } catch (const numeric_error&) {
            throw numeric_error("pacf: singular Yule-Walker system at lag " +
                                std::to_string(tau));
        }
    }
    return out;
}

struct CenteredSeries {
    std::vector<double> values;
    std::vector<double> means; // per-phase sample means, phase 0..s-1
};

/// Subtract the per-phase sample mean (phase = index mod s). Phase means are
/// taken over however many occurrences each phase has, so the length need
/// not be a multiple of s.
inline CenteredSeries seasonal_center(std::span<const double> series, int s) {
    if (s < 1) throw validation_error("seasonal_center: season length must be >= 1");
    if (static_cast<std::size_t>(s) > series.size())
        throw validation_error("seasonal_center: season longer than series");
    CenteredSeries out;
    out.means.assign(s, 0.0);
    std::vector<std::size_t> counts(s, 0);
    for (std::size_t t = 0; t < series.size(); ++t) {
        out.means[t % s] += series[t];
        ++counts[t % s];
    }
    for (int j = 0; j < s; ++j) out.means[j] /= static_cast<double>(counts[j]);
    out.values.resize(series.size());
    for (std::size_t t = 0; t < series.size(); ++t)
        out.values[t] = series[t] - out.means[t % s];
    return out;
}

/// Center a test series with phase means stored from training; phase 0 is
/// aligned to index 0 of the given series.
inline std::vector<double> apply_centering(std::span<const double> series,
                                           std::span<const double> means) {
    if (means.empty()) throw validation_error("apply_centering: empty seasonal means");
    std::vector<double> out(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) out[t] = series[t] - means[t % means.size()];
    return out;
}

/// Next-value forecast from the trailing history (most recent value last).
inline double predict_one_step(const SarimaModel& model, std::span<const double> history) {
    detail::require_supported(model.orders);
    const auto w = static_cast<std::size_t>(model.orders.warmup());
    if (history.size() < w)
        throw validation_error("predict_one_step: need " + std::to_string(w) +
                               " history values, have " + std::to_string(history.size()));
    return detail::predict_with([&](std::size_t b) { return history[history.size() - b]; },
                                model.alpha, model.phi, model.orders.s);
}

/// One-step residuals of a centered series under the given coefficients,
/// for t = warmup .. N-1.
inline std::vector<double> one_step_residuals(const SarimaModel& model,
                                              std::span<const double> centered) {
    const auto w = static_cast<std::size_t>(model.orders.warmup());
    if (centered.size() <= w)
        throw validation_error("one_step_residuals: series no longer than warmup");
    std::vector<double> res;
    res.reserve(centered.size() - w);
    for (std::size_t t = w; t < centered.size(); ++t)
        res.push_back(centered[t] -
                      detail::predict_with([&](std::size_t b) { return centered[t - b]; },
                                           model.alpha, model.phi, model.orders.s));
    return res;
}

/// Least-squares fit of the seasonal AR coefficients on a centered series by
/// gradient descent on the mean squared one-step error (same minimizer as
/// the summed squared error; the mean form keeps the step size meaningful
/// across series lengths). The bilinear alpha*phi cross term is handled with
/// its exact analytic gradient. A step that would increase the loss is
/// rejected; ten consecutive rejections abort the fit.
inline SarimaModel fit_least_squares(std::span<const double> centered, const SarimaOrders& orders,
                                     const GdConfig& gd = {}) {
    detail::require_supported(orders);
    if (gd.learning_rate <= 0.0) throw validation_error("fit: learning_rate must be positive");
    if (gd.max_iters < 1) throw validation_error("fit: max_iters must be >= 1");
    const auto w = static_cast<std::size_t>(orders.warmup());
    const std::size_t n = centered.size();
    if (n <= w + 1)
        throw validation_error("fit: series length " + std::to_string(n) +
                               " too short for warmup " + std::to_string(w));

    const auto p = static_cast<std::size_t>(orders.p);
    const auto P = static_cast<std::size_t>(orders.P);
    std::vector<double> alpha = gd.init_alpha.empty() ? std::vector<double>(p, 0.0) : gd.init_alpha;
    std::vector<double> phi = gd.init_phi.empty() ? std::vector<double>(P, 0.0) : gd.init_phi;
    if (alpha.size() != p || phi.size() != P)
        throw validation_error("fit: init coefficient lengths do not match orders");

    const double inv_count = 1.0 / static_cast<double>(n - w);
    const auto s = static_cast<std::size_t>(orders.s);

    const auto loss_at = [&](std::span<const double> a, std::span<const double> f) {
        double sse = 0.0;
        for (std::size_t t = w; t < n; ++t) {
            const double e =
                centered[t] -
                detail::predict_with([&](std::size_t b) { return centered[t - b]; }, a, f,
                                     orders.s);
            sse += e * e;
        }
        return sse * inv_count;
    };

    // Mean-squared loss and its gradient in one pass.
    const auto loss_and_grad = [&](std::span<const double> a, std::span<const double> f,
                                   std::vector<double>& ga, std::vector<double>& gf) {
        ga.assign(p, 0.0);
        gf.assign(P, 0.0);
        double sse = 0.0;
        for (std::size_t t = w; t < n; ++t) {
            const auto back = [&](std::size_t b) { return centered[t - b]; };
            const double e = centered[t] - detail::predict_with(back, a, f, orders.s);
            sse += e * e;
            for (std::size_t j = 0; j < p; ++j) {
                double dpred = back(j + 1);
                for (std::size_t k = 0; k < P; ++k) dpred -= f[k] * back(s * (k + 1) + j + 1);
                ga[j] -= 2.0 * e * dpred;
            }
            for (std::size_t k = 0; k < P; ++k) {
                double dpred = back(s * (k + 1));
                for (std::size_t j = 0; j < p; ++j) dpred -= a[j] * back(s * (k + 1) + j + 1);
                gf[k] -= 2.0 * e * dpred;
            }
        }
        for (auto& g : ga) g *= inv_count;
        for (auto& g : gf) g *= inv_count;
        return sse * inv_count;
    };

    std::vector<double> ga, gf, cand_alpha(p), cand_phi(P);
    double loss = 0.0, grad_norm = 0.0;
    bool converged = false;
    std::size_t iter = 0;
    int rejected_in_a_row = 0;

    for (; iter < gd.max_iters; ++iter) {
        loss = loss_and_grad(alpha, phi, ga, gf);
        if (!std::isfinite(loss)) throw fit_error("fit: non-finite loss at iteration " +
                                                  std::to_string(iter));
        double g2 = 0.0;
        for (const double g : ga) g2 += g * g;
        for (const double g : gf) g2 += g * g;
        grad_norm = std::sqrt(g2);
        if (grad_norm <= gd.tol) {
            converged = true;
            break;
        }
        for (std::size_t j = 0; j < p; ++j) cand_alpha[j] = alpha[j] - gd.learning_rate * ga[j];
        for (std::size_t k = 0; k < P; ++k) cand_phi[k] = phi[k] - gd.learning_rate * gf[k];
        const double cand_loss = loss_at(cand_alpha, cand_phi);
        if (cand_loss <= loss + 1e-15 * (1.0 + std::fabs(loss))) {
            alpha = cand_alpha;
            phi = cand_phi;
            rejected_in_a_row = 0;
        } else if (++rejected_in_a_row >= 10) {
            throw fit_error("fit: loss increased 10 times in a row; reduce learning_rate");
        }
    }
    if (!converged) {
        // Refresh the report for the final accepted point.
        loss = loss_and_grad(alpha, phi, ga, gf);
        double g2 = 0.0;
        for (const double g : ga) g2 += g * g;
        for (const double g : gf) g2 += g * g;
        grad_norm = std::sqrt(g2);
    }

    SarimaModel model;
    model.orders = orders;
    model.alpha = std::move(alpha);
    model.phi = std::move(phi);
    model.sigma2 = loss; // SSE/(N - Ps - p), the least-squares variance estimate
    model.fit = {iter, loss, grad_norm, converged};
    return model;
}

struct LjungBoxResult {
    double q_stat = 0.0;
    double critical = 0.0;
    bool reject = false;
    std::size_t lags = 0;
    std::size_t dof = 0;
};

/// Ljung-Box portmanteau test on residuals:
///   Q = N(N+2) sum_{k=1..H} rho_k^2 / (N-k),
/// compared against the 0.95 chi-squared quantile with H - fitted_params
/// degrees of freedom. All-zero residuals give Q = 0 and no rejection.
inline LjungBoxResult ljung_box(std::span<const double> residuals, std::size_t H,
                                std::size_t fitted_params) {
    const std::size_t n = residuals.size();
    if (H <= fitted_params)
        throw validation_error("ljung_box: lags H must exceed the fitted parameter count");
    if (n <= H) throw validation_error("ljung_box: need more residuals than lags");

    const auto r = detail::autocovariance(residuals, H);
    LjungBoxResult out;
    out.lags = H;
    out.dof = H - fitted_params;
    if (r[0] > 0.0) {
        double sum = 0.0;
        for (std::size_t k = 1; k <= H; ++k) {
            const double rho = r[k] / r[0];
            sum += rho * rho / static_cast<double>(n - k);
        }
        out.q_stat = static_cast<double>(n) * static_cast<double>(n + 2) * sum;
    }
    out.critical = stats::chi_squared_quantile(0.95, static_cast<double>(out.dof));
    out.reject = out.q_stat > out.critical;
    return out;
}

/// Default lag count H = floor(2*sqrt(N)).
inline std::size_t ljung_box_default_lags(std::size_t n) {
    return static_cast<std::size_t>(std::floor(2.0 * std::sqrt(static_cast<double>(n))));
}

/// prob-quantile of N(0, sigma2).
inline double gaussian_quantile(double prob, double sigma2) {
    if (!(prob > 0.0 && prob < 1.0))
        throw validation_error("gaussian_quantile: prob must lie in (0,1)");
    if (sigma2 < 0.0) throw validation_error("gaussian_quantile: negative variance");
    return std::sqrt(sigma2) * stats::normal_quantile(prob);
}

struct DetectionRow {
    double value = 0.0;      // raw test value
    double prediction = 0.0; // forecast mapped back to raw units
    double abs_error = 0.0;
    bool flagged = false;
    bool evaluable = false;
};

struct SarimaDetection {
    std::vector<DetectionRow> rows;
    std::vector<std::size_t> flagged;
    double threshold = 0.0;
    std::size_t warmup = 0;
};

/// One-pass detector: center the test series with the stored training
/// phase means, walk forward computing one-step errors, flag seconds whose
/// absolute error exceeds multiplier * quantile(quantile_prob, sigma2), and
/// overwrite each flagged value with its forecast so an attack does not
/// poison the following predictions. The first Ps+p seconds carry no
/// forecast and are reported as not evaluable.
inline SarimaDetection detect(std::span<const double> test_series, const SarimaModel& model,
                              double threshold_multiplier = 1.0, double quantile_prob = 0.9995) {
    detail::require_supported(model.orders);
    if (model.seasonal_means.size() != static_cast<std::size_t>(model.orders.s))
        throw validation_error("detect: model stores no seasonal means for season length s");
    const auto w = static_cast<std::size_t>(model.orders.warmup());
    if (test_series.size() <= w)
        throw validation_error("detect: test series no longer than warmup " + std::to_string(w));

    SarimaDetection out;
    out.warmup = w;
    out.threshold = threshold_multiplier * gaussian_quantile(quantile_prob, model.sigma2);

    std::vector<double> work = apply_centering(test_series, model.seasonal_means);
    out.rows.resize(test_series.size());
    for (std::size_t t = 0; t < test_series.size(); ++t) {
        auto& row = out.rows[t];
        row.value = test_series[t];
        if (t < w) continue;
        const double pred =
            detail::predict_with([&](std::size_t b) { return work[t - b]; }, model.alpha,
                                 model.phi, model.orders.s);
        const double err = work[t] - pred;
        row.evaluable = true;
        row.prediction = pred + model.seasonal_means[t % model.seasonal_means.size()];
        row.abs_error = std::fabs(err);
        if (row.abs_error > out.threshold) {
            row.flagged = true;
            out.flagged.push_back(t);
            work[t] = pred; // replace the outlier by its regular value
        }
    }
    return out;
}

inline nlohmann::json model_to_json(const SarimaModel& m) {
    return {{"orders",
             {{"p", m.orders.p},
              {"d", m.orders.d},
              {"q", m.orders.q},
              {"P", m.orders.P},
              {"D", m.orders.D},
              {"Q", m.orders.Q},
              {"s", m.orders.s}}},
            {"alpha", m.alpha},
            {"phi", m.phi},
            {"sigma2", m.sigma2},
            {"seasonal_means", m.seasonal_means},
            {"fit",
             {{"iters", m.fit.iters},
              {"final_loss", m.fit.final_loss},
              {"grad_norm", m.fit.grad_norm},
              {"converged", m.fit.converged}}}};
}

inline SarimaModel model_from_json(const nlohmann::json& j) {
    SarimaModel m;
    try {
        const auto& o = j.at("orders");
        m.orders = {o.at("p").get<int>(), o.at("d").get<int>(), o.at("q").get<int>(),
                    o.at("P").get<int>(), o.at("D").get<int>(), o.at("Q").get<int>(),
                    o.at("s").get<int>()};
        m.alpha = j.at("alpha").get<std::vector<double>>();
        m.phi = j.at("phi").get<std::vector<double>>();
        m.sigma2 = j.at("sigma2").get<double>();
        m.seasonal_means = j.at("seasonal_means").get<std::vector<double>>();
        if (j.contains("fit")) {
            const auto& f = j["fit"];
            m.fit = {f.value("iters", std::size_t{0}), f.value("final_loss", 0.0),
                     f.value("grad_norm", 0.0), f.value("converged", false)};
        }
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("sarima model JSON: ") + e.what());
    }
    detail::require_supported(m.orders);
    if (m.alpha.size() != static_cast<std::size_t>(m.orders.p) ||
        m.phi.size() != static_cast<std::size_t>(m.orders.P))
        throw validation_error("sarima model JSON: coefficient lengths do not match orders");
    if (m.sigma2 < 0.0) throw validation_error("sarima model JSON: negative sigma2");
    return m;
}

} // namespace tsids::sarima
