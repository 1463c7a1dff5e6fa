#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tsids/errors.hpp"
#include "tsids/linalg.hpp"
#include "tsids/rng.hpp"

namespace tsids::lstm {

/// One LSTM cell. Each weight matrix maps the concatenation [h_prev, x]
/// (hidden + input wide) to the hidden dimension.
struct CellParams {
    std::size_t hidden = 0;
    std::size_t input = 0;
    Matrix W_f, W_i, W_C, W_o;
    std::vector<double> b_f, b_i, b_C, b_o;
};

/// Stacked next-value predictor: one or more LSTM layers unrolled over a
/// window of seq_len scalar inputs, a linear head on the final hidden state,
/// and the training-data normalization baked in.
struct Network {
    std::size_t hidden_size = 0;
    std::size_t seq_len = 0;
    std::vector<CellParams> layers;
    std::vector<double> head_w;
    double head_b = 0.0;
    double norm_mean = 0.0;
    double norm_std = 1.0;

    struct TrainMeta {
        std::uint64_t seed = 0;
        std::size_t iterations = 0;
        double lr = 0.0;
        std::size_t batch = 0;
    } train_meta;
};

struct TrainConfig {
    std::size_t iterations = 20'000;
    double learning_rate = 1e-3;
    std::size_t batch_size = 50;
    std::uint64_t rng_seed = 0;
    double gradient_clip = 5.0; // global-norm clip

    void validate() const {
        if (iterations < 1 || batch_size < 1 || learning_rate <= 0.0 || gradient_clip <= 0.0)
            throw validation_error("lstm train config: all values must be positive");
    }
};

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// z = W u + b for one gate.
inline void gate_preact(const Matrix& W, std::span<const double> u,
                        std::span<const double> b, std::span<double> z) {
    for (std::size_t r = 0; r < W.rows; ++r) {
        double acc = b[r];
        const double* row = &W.data[r * W.cols];
        for (std::size_t c = 0; c < W.cols; ++c) acc += row[c] * u[c];
        z[r] = acc;
    }
}

/// Everything the backward pass needs about one cell application.
struct StepCache {
    std::vector<double> u;      // [h_prev, x]
    std::vector<double> c_prev;
    std::vector<double> f, i, ctil, o, c, tanh_c;
};

inline void cell_step(const CellParams& p, std::span<const double> u,
                      std::span<const double> c_prev, std::span<double> h_out,
                      std::span<double> c_out, StepCache* cache) {
    const std::size_t H = p.hidden;
    std::vector<double> zf(H), zi(H), zc(H), zo(H);
    gate_preact(p.W_f, u, p.b_f, zf);
    gate_preact(p.W_i, u, p.b_i, zi);
    gate_preact(p.W_C, u, p.b_C, zc);
    gate_preact(p.W_o, u, p.b_o, zo);
    if (cache) {
        cache->u.assign(u.begin(), u.end());
        cache->c_prev.assign(c_prev.begin(), c_prev.end());
        cache->f.resize(H);
        cache->i.resize(H);
        cache->ctil.resize(H);
        cache->o.resize(H);
        cache->c.resize(H);
        cache->tanh_c.resize(H);
    }
    for (std::size_t r = 0; r < H; ++r) {
        const double f = sigmoid(zf[r]);
        const double i = sigmoid(zi[r]);
        const double ctil = std::tanh(zc[r]);
        const double o = sigmoid(zo[r]);
        const double c = f * c_prev[r] + i * ctil;
        const double tc = std::tanh(c);
        c_out[r] = c;
        h_out[r] = o * tc;
        if (cache) {
            cache->f[r] = f;
            cache->i[r] = i;
            cache->ctil[r] = ctil;
            cache->o[r] = o;
            cache->c[r] = c;
            cache->tanh_c[r] = tc;
        }
    }
}

/// Gradient buffers shaped like a CellParams / Network.
struct CellGrads {
    Matrix W_f, W_i, W_C, W_o;
    std::vector<double> b_f, b_i, b_C, b_o;

    explicit CellGrads(const CellParams& p)
        : W_f(p.hidden, p.hidden + p.input), W_i(p.hidden, p.hidden + p.input),
          W_C(p.hidden, p.hidden + p.input), W_o(p.hidden, p.hidden + p.input),
          b_f(p.hidden, 0.0), b_i(p.hidden, 0.0), b_C(p.hidden, 0.0), b_o(p.hidden, 0.0) {}
};

struct NetGrads {
    std::vector<CellGrads> layers;
    std::vector<double> head_w;
    double head_b = 0.0;

    explicit NetGrads(const Network& net) : head_w(net.head_w.size(), 0.0) {
        layers.reserve(net.layers.size());
        for (const auto& l : net.layers) layers.emplace_back(l);
    }
};

} // namespace detail

/// Single cell application per the gate equations:
///   f = sigmoid(W_f [h_prev,x] + b_f), i and o likewise, ctil = tanh(...),
///   C = f*C_prev + i*ctil, h = o*tanh(C)  (all elementwise).
inline std::pair<std::vector<double>, std::vector<double>>
cell_forward(const CellParams& params, std::span<const double> x, std::span<const double> h_prev,
             std::span<const double> c_prev) {
    if (x.size() != params.input || h_prev.size() != params.hidden ||
        c_prev.size() != params.hidden)
        throw validation_error("cell_forward: dimension mismatch");
    if (params.W_f.rows != params.hidden || params.W_f.cols != params.hidden + params.input)
        throw validation_error("cell_forward: weight shape mismatch");
    std::vector<double> u(params.hidden + params.input);
    std::copy(h_prev.begin(), h_prev.end(), u.begin());
    std::copy(x.begin(), x.end(), u.begin() + params.hidden);
    std::vector<double> h(params.hidden), c(params.hidden);
    detail::cell_step(params, u, c_prev, h, c, nullptr);
    return {std::move(h), std::move(c)};
}

/// Fresh network with the given stack depth. Weights start uniform in
/// +-1/sqrt(fan_in), biases at zero; the draw order is fixed so a seed pins
/// the whole initialization.
inline Network make_network(std::size_t n_layers, std::size_t hidden, std::size_t seq_len,
                            Rng& rng) {
    if (n_layers < 1 || hidden < 1 || seq_len < 1)
        throw validation_error("make_network: layers, hidden and seq_len must be >= 1");
    Network net;
    net.hidden_size = hidden;
    net.seq_len = seq_len;
    for (std::size_t l = 0; l < n_layers; ++l) {
        CellParams p;
        p.hidden = hidden;
        p.input = (l == 0) ? 1 : hidden;
        const double bound = 1.0 / std::sqrt(static_cast<double>(hidden + p.input));
        const auto fill = [&](Matrix& w) {
            w = Matrix(hidden, hidden + p.input);
            for (auto& v : w.data) v = rng.uniform(-bound, bound);
        };
        fill(p.W_f);
        fill(p.W_i);
        fill(p.W_C);
        fill(p.W_o);
        p.b_f.assign(hidden, 0.0);
        p.b_i.assign(hidden, 0.0);
        p.b_C.assign(hidden, 0.0);
        p.b_o.assign(hidden, 0.0);
        net.layers.push_back(std::move(p));
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    net.head_w.resize(hidden);
    for (auto& v : net.head_w) v = rng.uniform(-bound, bound);
    net.head_b = 0.0;
    return net;
}

namespace detail {

/// Forward over one normalized window; caches per (t, layer) when training.
/// Returns the normalized prediction.
inline double forward_normalized(const Network& net, std::span<const double> window_norm,
                                 std::vector<std::vector<StepCache>>* caches) {
    const std::size_t T = net.seq_len;
    const std::size_t L = net.layers.size();
    const std::size_t H = net.hidden_size;
    std::vector<std::vector<double>> h(L, std::vector<double>(H, 0.0));
    std::vector<std::vector<double>> c(L, std::vector<double>(H, 0.0));
    if (caches) caches->assign(T, std::vector<StepCache>(L));

    std::vector<double> u;
    std::vector<double> h_new(H), c_new(H);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t l = 0; l < L; ++l) {
            const auto& p = net.layers[l];
            u.resize(H + p.input);
            std::copy(h[l].begin(), h[l].end(), u.begin());
            if (l == 0)
                u[H] = window_norm[t];
            else
                std::copy(h[l - 1].begin(), h[l - 1].end(), u.begin() + H);
            cell_step(p, u, c[l], h_new, c_new, caches ? &(*caches)[t][l] : nullptr);
            h[l].swap(h_new);
            c[l].swap(c_new);
        }
    }
    double y = net.head_b;
    for (std::size_t r = 0; r < H; ++r) y += net.head_w[r] * h[L - 1][r];
    return y;
}

/// Backpropagation through time for one window. dY is dLoss/dprediction
/// (normalized units); gradients are accumulated into `grads`. Returns the
/// final hidden state's contribution through the head as a side effect.
inline void backward_window(const Network& net, const std::vector<std::vector<StepCache>>& caches,
                            std::span<const double> final_hidden, double dY, NetGrads& grads) {
    const std::size_t T = net.seq_len;
    const std::size_t L = net.layers.size();
    const std::size_t H = net.hidden_size;

    grads.head_b += dY;
    for (std::size_t r = 0; r < H; ++r) grads.head_w[r] += dY * final_hidden[r];

    // State gradients flowing backward through time, per layer.
    std::vector<std::vector<double>> dh_time(L, std::vector<double>(H, 0.0));
    std::vector<std::vector<double>> dc_time(L, std::vector<double>(H, 0.0));
    for (std::size_t r = 0; r < H; ++r) dh_time[L - 1][r] = dY * net.head_w[r];

    std::vector<double> dh(H), dzf(H), dzi(H), dzc(H), dzo(H), du;
    for (std::size_t t = T; t-- > 0;) {
        std::vector<double> dx_above; // gradient on h_t of the layer below
        for (std::size_t l = L; l-- > 0;) {
            const auto& p = net.layers[l];
            const auto& cache = caches[t][l];
            auto& g = grads.layers[l];

            for (std::size_t r = 0; r < H; ++r) dh[r] = dh_time[l][r];
            if (!dx_above.empty())
                for (std::size_t r = 0; r < H; ++r) dh[r] += dx_above[r];

            du.assign(H + p.input, 0.0);
            for (std::size_t r = 0; r < H; ++r) {
                const double o = cache.o[r];
                const double tc = cache.tanh_c[r];
                const double dO = dh[r] * tc;
                const double dC = dc_time[l][r] + dh[r] * o * (1.0 - tc * tc);
                const double dF = dC * cache.c_prev[r];
                const double dI = dC * cache.ctil[r];
                const double dCtil = dC * cache.i[r];
                dzf[r] = dF * cache.f[r] * (1.0 - cache.f[r]);
                dzi[r] = dI * cache.i[r] * (1.0 - cache.i[r]);
                dzo[r] = dO * o * (1.0 - o);
                dzc[r] = dCtil * (1.0 - cache.ctil[r] * cache.ctil[r]);
                dc_time[l][r] = dC * cache.f[r];
            }
            const std::size_t cols = H + p.input;
            for (std::size_t r = 0; r < H; ++r) {
                const double gf = dzf[r], gi = dzi[r], gc = dzc[r], go = dzo[r];
                double* wf = &g.W_f.data[r * cols];
                double* wi = &g.W_i.data[r * cols];
                double* wc = &g.W_C.data[r * cols];
                double* wo = &g.W_o.data[r * cols];
                const double* pf = &p.W_f.data[r * cols];
                const double* pi = &p.W_i.data[r * cols];
                const double* pc = &p.W_C.data[r * cols];
                const double* po = &p.W_o.data[r * cols];
                for (std::size_t c = 0; c < cols; ++c) {
                    const double uc = cache.u[c];
                    wf[c] += gf * uc;
                    wi[c] += gi * uc;
                    wc[c] += gc * uc;
                    wo[c] += go * uc;
                    du[c] += pf[c] * gf + pi[c] * gi + pc[c] * gc + po[c] * go;
                }
                g.b_f[r] += gf;
                g.b_i[r] += gi;
                g.b_C[r] += gc;
                g.b_o[r] += go;
            }
            for (std::size_t r = 0; r < H; ++r) dh_time[l][r] = du[r];
            if (l > 0)
                dx_above.assign(du.begin() + H, du.end());
            else
                dx_above.clear();
        }
    }
}

} // namespace detail

/// Next-value prediction from a window of seq_len raw feature values.
inline double forward_predict(const Network& net, std::span<const double> window) {
    if (window.size() != net.seq_len)
        throw validation_error("forward_predict: window length must equal seq_len " +
                               std::to_string(net.seq_len));
    std::vector<double> norm(window.size());
    for (std::size_t i = 0; i < window.size(); ++i)
        norm[i] = (window[i] - net.norm_mean) / net.norm_std;
    const double y = detail::forward_normalized(net, norm, nullptr);
    return y * net.norm_std + net.norm_mean;
}

/// Train as a one-step-ahead predictor on a clean series: mean squared error
/// on normalized values over randomly sampled window batches, plain SGD with
/// global-norm gradient clipping. Deterministic for a fixed seed. Returns
/// the per-iteration loss trace.
inline std::vector<double> train(Network& net, std::span<const double> series,
                                 const TrainConfig& cfg) {
    cfg.validate();
    if (series.size() <= net.seq_len + 1)
        throw validation_error("lstm train: series length must exceed seq_len + 1");

    double mean = 0.0;
    for (const double v : series) mean += v;
    mean /= static_cast<double>(series.size());
    double var = 0.0;
    for (const double v : series) var += (v - mean) * (v - mean);
    var /= static_cast<double>(series.size());
    net.norm_mean = mean;
    net.norm_std = var > 1e-24 ? std::sqrt(var) : 1.0;
    net.train_meta = {cfg.rng_seed, cfg.iterations, cfg.learning_rate, cfg.batch_size};

    std::vector<double> norm(series.size());
    for (std::size_t i = 0; i < series.size(); ++i)
        norm[i] = (series[i] - net.norm_mean) / net.norm_std;

    Rng rng(cfg.rng_seed);
    const std::size_t T = net.seq_len;
    const std::size_t max_start = series.size() - T - 1;
    const std::size_t H = net.hidden_size;
    const std::size_t L = net.layers.size();

    std::vector<double> trace;
    trace.reserve(cfg.iterations);
    std::vector<std::vector<detail::StepCache>> caches;

    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        detail::NetGrads grads(net);
        double batch_loss = 0.0;
        for (std::size_t b = 0; b < cfg.batch_size; ++b) {
            const auto start = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(max_start)));
            const std::span<const double> window(norm.data() + start, T);
            const double y = detail::forward_normalized(net, window, &caches);
            const double err = y - norm[start + T];
            batch_loss += err * err;

            // Recover the final hidden state of the top layer from the cache.
            const auto& top = caches[T - 1][L - 1];
            std::vector<double> final_hidden(H);
            for (std::size_t r = 0; r < H; ++r) final_hidden[r] = top.o[r] * top.tanh_c[r];

            const double dY = 2.0 * err / static_cast<double>(cfg.batch_size);
            detail::backward_window(net, caches, final_hidden, dY, grads);
        }
        batch_loss /= static_cast<double>(cfg.batch_size);
        if (!std::isfinite(batch_loss))
            throw fit_error("lstm train: non-finite loss at iteration " + std::to_string(it));
        trace.push_back(batch_loss);

        // Global-norm clip, then the SGD step.
        double norm2 = grads.head_b * grads.head_b;
        for (const double g : grads.head_w) norm2 += g * g;
        for (const auto& gl : grads.layers) {
            for (const auto* m : {&gl.W_f, &gl.W_i, &gl.W_C, &gl.W_o})
                for (const double g : m->data) norm2 += g * g;
            for (const auto* v : {&gl.b_f, &gl.b_i, &gl.b_C, &gl.b_o})
                for (const double g : *v) norm2 += g * g;
        }
        const double gnorm = std::sqrt(norm2);
        const double scale =
            (gnorm > cfg.gradient_clip ? cfg.gradient_clip / gnorm : 1.0) * cfg.learning_rate;

        net.head_b -= scale * grads.head_b;
        for (std::size_t r = 0; r < H; ++r) net.head_w[r] -= scale * grads.head_w[r];
        for (std::size_t l = 0; l < L; ++l) {
            auto& p = net.layers[l];
            const auto& g = grads.layers[l];
            for (std::size_t k = 0; k < p.W_f.data.size(); ++k) {
                p.W_f.data[k] -= scale * g.W_f.data[k];
                p.W_i.data[k] -= scale * g.W_i.data[k];
                p.W_C.data[k] -= scale * g.W_C.data[k];
                p.W_o.data[k] -= scale * g.W_o.data[k];
            }
            for (std::size_t r = 0; r < H; ++r) {
                p.b_f[r] -= scale * g.b_f[r];
                p.b_i[r] -= scale * g.b_i[r];
                p.b_C[r] -= scale * g.b_C[r];
                p.b_o[r] -= scale * g.b_o[r];
            }
        }
    }
    return trace;
}

/// Online detection rule: called with (second, abs_error); returning true
/// flags the second and replaces its value with the prediction.
using DetectionRule = std::function<bool(std::size_t, double)>;

inline DetectionRule no_replacement() {
    return [](std::size_t, double) { return false; };
}

inline DetectionRule fixed_threshold(double threshold) {
    return [threshold](std::size_t, double e) { return e >= threshold; };
}

struct PredictionRun {
    std::vector<double> errors;      // NaN for the first seq_len warmup seconds
    std::vector<double> predictions; // NaN for warmup seconds
    std::vector<std::size_t> flagged;
};

/// Walk the series forward, predicting each value from the preceding window.
/// Seconds the rule flags have their actual value replaced by the prediction
/// in the working history so they cannot contaminate later windows.
inline PredictionRun prediction_errors(const Network& net, std::span<const double> series,
                                       const DetectionRule& rule) {
    if (series.size() <= net.seq_len)
        throw validation_error("prediction_errors: series must be longer than seq_len");
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    PredictionRun run;
    run.errors.assign(series.size(), nan);
    run.predictions.assign(series.size(), nan);
    std::vector<double> work(series.begin(), series.end());
    for (std::size_t t = net.seq_len; t < series.size(); ++t) {
        const std::span<const double> window(work.data() + t - net.seq_len, net.seq_len);
        const double pred = forward_predict(net, window);
        const double e = std::fabs(pred - work[t]);
        run.predictions[t] = pred;
        run.errors[t] = e;
        if (rule(t, e)) {
            run.flagged.push_back(t);
            work[t] = pred;
        }
    }
    return run;
}

/// Largest threshold flagging every malicious second (rule e >= T): the
/// minimum error over malicious seconds.
inline double threshold_ma(std::span<const double> errors, std::span<const std::uint8_t> labels) {
    if (errors.size() != labels.size())
        throw validation_error("threshold_ma: errors and labels must share length");
    double t = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!labels[i] || std::isnan(errors[i])) continue;
        t = std::min(t, errors[i]);
        found = true;
    }
    if (!found) throw validation_error("threshold_ma: no malicious second with a defined error");
    return t;
}

/// Smallest representable threshold flagging no non-malicious second.
inline double threshold_nm(std::span<const double> errors, std::span<const std::uint8_t> labels) {
    if (errors.size() != labels.size())
        throw validation_error("threshold_nm: errors and labels must share length");
    double worst = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (labels[i] || std::isnan(errors[i])) continue;
        worst = std::max(worst, errors[i]);
        found = true;
    }
    if (!found)
        throw validation_error("threshold_nm: no non-malicious second with a defined error");
    return std::nextafter(worst, std::numeric_limits<double>::infinity());
}

inline nlohmann::json to_json(const Network& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : net.layers)
        layers.push_back({{"W_f", l.W_f.data},
                          {"W_i", l.W_i.data},
                          {"W_C", l.W_C.data},
                          {"W_o", l.W_o.data},
                          {"b_f", l.b_f},
                          {"b_i", l.b_i},
                          {"b_C", l.b_C},
                          {"b_o", l.b_o}});
    return {{"hidden_size", net.hidden_size},
            {"seq_len", net.seq_len},
            {"layers", layers},
            {"output_head", {{"w", net.head_w}, {"b", net.head_b}}},
            {"norm", {{"mean", net.norm_mean}, {"std", net.norm_std}}},
            {"train",
             {{"seed", net.train_meta.seed},
              {"iterations", net.train_meta.iterations},
              {"lr", net.train_meta.lr},
              {"batch", net.train_meta.batch}}}};
}

inline Network from_json(const nlohmann::json& j) {
    Network net;
    try {
        net.hidden_size = j.at("hidden_size").get<std::size_t>();
        net.seq_len = j.at("seq_len").get<std::size_t>();
        std::size_t l_idx = 0;
        for (const auto& jl : j.at("layers")) {
            CellParams p;
            p.hidden = net.hidden_size;
            p.input = (l_idx == 0) ? 1 : net.hidden_size;
            const std::size_t cols = p.hidden + p.input;
            const auto load = [&](const char* key, Matrix& w) {
                w.rows = p.hidden;
                w.cols = cols;
                w.data = jl.at(key).get<std::vector<double>>();
                if (w.data.size() != w.rows * w.cols)
                    throw validation_error("lstm network JSON: bad weight size for " +
                                           std::string(key));
            };
            load("W_f", p.W_f);
            load("W_i", p.W_i);
            load("W_C", p.W_C);
            load("W_o", p.W_o);
            p.b_f = jl.at("b_f").get<std::vector<double>>();
            p.b_i = jl.at("b_i").get<std::vector<double>>();
            p.b_C = jl.at("b_C").get<std::vector<double>>();
            p.b_o = jl.at("b_o").get<std::vector<double>>();
            if (p.b_f.size() != p.hidden || p.b_i.size() != p.hidden ||
                p.b_C.size() != p.hidden || p.b_o.size() != p.hidden)
                throw validation_error("lstm network JSON: bad bias size");
            net.layers.push_back(std::move(p));
            ++l_idx;
        }
        net.head_w = j.at("output_head").at("w").get<std::vector<double>>();
        net.head_b = j.at("output_head").at("b").get<double>();
        net.norm_mean = j.at("norm").at("mean").get<double>();
        net.norm_std = j.at("norm").at("std").get<double>();
        if (j.contains("train")) {
            const auto& t = j["train"];
            net.train_meta = {t.value("seed", std::uint64_t{0}),
                              t.value("iterations", std::size_t{0}), t.value("lr", 0.0),
                              t.value("batch", std::size_t{0})};
        }
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(std::string("lstm network JSON: ") + e.what());
    }
    if (net.layers.empty() || net.head_w.size() != net.hidden_size || net.seq_len < 1)
        throw validation_error("lstm network JSON: inconsistent shapes");
    return net;
}

} // namespace tsids::lstm
