// tsids - time-series intrusion detection toolkit CLI.
//
// Subcommands: simulate, ingest, fit, detect, report. Every command is
// deterministic for a fixed --seed, exits 0 on success, 2 on usage or
// validation problems and 3 on numeric failures.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <tsids/tsids.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw tsids::validation_error("cannot open input file '" + path + "'");
    return in;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw tsids::validation_error("cannot open output file '" + path.string() + "'");
    return out;
}

fs::path ensure_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw tsids::validation_error("cannot create output dir '" + dir + "'");
    return p;
}

std::pair<std::size_t, std::size_t> parse_range(const std::string& text) {
    const auto pos = text.find(':');
    if (pos == std::string::npos)
        throw tsids::validation_error("range must look like a:b, got '" + text + "'");
    try {
        const std::size_t a = std::stoull(text.substr(0, pos));
        const std::size_t b = std::stoull(text.substr(pos + 1));
        if (a >= b) throw tsids::validation_error("range start must precede end: '" + text + "'");
        return {a, b};
    } catch (const std::logic_error&) {
        throw tsids::validation_error("range must look like a:b, got '" + text + "'");
    }
}

tsids::sarima::SarimaOrders parse_orders(const std::string& text) {
    const auto parts = tsids::csv::split(text);
    if (parts.size() != 7)
        throw tsids::validation_error("orders must look like p,d,q,P,D,Q,s, got '" + text + "'");
    std::vector<int> v;
    for (const auto& part : parts) {
        try {
            v.push_back(std::stoi(part));
        } catch (const std::logic_error&) {
            throw tsids::validation_error("bad order value '" + part + "'");
        }
    }
    return {v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
}

tsids::simulate::AttackSpec parse_attack(const std::string& text) {
    const auto parts = tsids::csv::split(text, ':');
    if (parts.size() != 4)
        throw tsids::validation_error(
            "attack must look like kind:start_s:duration_s:intensity, got '" + text + "'");
    tsids::simulate::AttackSpec atk;
    atk.kind = tsids::simulate::attack_kind_from_string(parts[0]);
    try {
        atk.start_s = std::stod(parts[1]);
        atk.duration_s = std::stod(parts[2]);
        atk.intensity = std::stod(parts[3]);
    } catch (const std::logic_error&) {
        throw tsids::validation_error("bad attack numbers in '" + text + "'");
    }
    return atk;
}

std::string canonical_detector(std::string name) {
    if (name == "mp" || name == "matrix-profile") name = "matrix_profile";
    if (name != "matrix_profile" && name != "sarima" && name != "lstm")
        throw tsids::validation_error("unknown detector '" + name + "'");
    return name;
}

std::vector<tsids::eval::RealInterval> intervals_from_truth(const std::string& truth_path) {
    auto in = open_input(truth_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw tsids::parse_error("truth JSON: " + std::string(e.what()));
    }
    std::vector<tsids::eval::RealInterval> out;
    for (const auto& a : j.value("attacks", json::array()))
        out.push_back({a.at("start_s").get<double>(), a.at("end_s").get<double>()});
    std::sort(out.begin(), out.end(),
              [](const auto& x, const auto& y) { return x.start_s < y.start_s; });
    return out;
}

std::vector<tsids::eval::RealInterval>
intervals_from_labels(const std::vector<tsids::AttackInterval>& runs) {
    std::vector<tsids::eval::RealInterval> out;
    for (const auto& r : runs)
        out.push_back({static_cast<double>(r.start_s), static_cast<double>(r.end_s)});
    return out;
}

void write_json_file(const fs::path& path, const json& j) {
    auto out = open_output(path);
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
    std::string output_dir;
    tsids::simulate::SimConfig cfg;
    std::vector<std::string> attack_specs;
};

int cmd_simulate(const SimulateArgs& args) {
    auto cfg = args.cfg;
    for (const auto& text : args.attack_specs) cfg.attacks.push_back(parse_attack(text));
    const auto events = tsids::simulate::generate(cfg);
    const auto dir = ensure_dir(args.output_dir);
    {
        auto out = open_output(dir / "events.csv");
        tsids::ingest::write_events_csv(out, events);
    }
    write_json_file(dir / "truth.json", tsids::simulate::truth_json(cfg));
    std::cout << "simulate: " << events.size() << " events -> " << (dir / "events.csv").string()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// ingest

struct IngestArgs {
    std::string input;
    std::string output_dir;
    bool extra_columns = false;
};

int cmd_ingest(const IngestArgs& args) {
    auto in = open_input(args.input);
    const auto events = tsids::ingest::parse_events(in);
    const auto series = tsids::ingest::aggregate_per_second(events);
    const auto dir = ensure_dir(args.output_dir);
    auto out = open_output(dir / "features.csv");
    tsids::ingest::write_features_csv(out, series, args.extra_columns);
    std::cout << "ingest: " << events.size() << " events over " << series.n_seconds
              << " seconds -> " << (dir / "features.csv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// fit

struct FitArgs {
    std::string input;
    std::string output_dir;
    std::string detector;
    std::string feature = "port_pairs";
    std::string train_range;
    std::string orders = "4,0,0,1,0,0,10";
    bool strip_labeled = false;
    bool allow_labeled = false;
    std::uint64_t seed = 0;
    // sarima gradient descent
    double lr = 1e-3;
    std::size_t max_iters = 50'000;
    double tol = 1e-8;
    // lstm
    std::size_t hidden = 400;
    std::size_t layers = 1;
    std::size_t seq_len = 10;
    std::size_t iterations = 20'000;
    std::size_t batch = 50;
    double clip = 5.0;
};

/// Training slice of one feature, honoring the labeled-seconds policy.
std::vector<double> training_values(const tsids::FeatureSeries& series,
                                    const std::string& feature, const std::string& range_text,
                                    bool strip_labeled, bool allow_labeled) {
    std::size_t a = 0, b = series.n_seconds;
    if (!range_text.empty()) {
        std::tie(a, b) = parse_range(range_text);
        if (b > series.n_seconds)
            throw tsids::validation_error("train range end " + std::to_string(b) +
                                          " exceeds series length " +
                                          std::to_string(series.n_seconds));
    }
    const auto& values = series.feature(feature);
    std::vector<double> out;
    out.reserve(b - a);
    bool labeled_seen = false;
    for (std::size_t t = a; t < b; ++t) {
        if (series.label[t]) {
            labeled_seen = true;
            if (strip_labeled) continue;
        }
        out.push_back(values[t]);
    }
    if (labeled_seen && !strip_labeled && !allow_labeled)
        throw tsids::validation_error(
            "train range contains labeled seconds; pass --strip-labeled or --allow-labeled");
    return out;
}

int cmd_fit(const FitArgs& args) {
    const std::string detector = canonical_detector(args.detector);
    if (detector == "matrix_profile")
        throw tsids::validation_error("fit supports sarima and lstm; matrix profile needs none");
    auto in = open_input(args.input);
    const auto series = tsids::ingest::read_features_csv(in);
    const auto values = training_values(series, args.feature, args.train_range,
                                        args.strip_labeled, args.allow_labeled);
    const auto dir = ensure_dir(args.output_dir);
    const fs::path model_path = dir / ("model_" + detector + "_" + args.feature + ".json");

    if (detector == "sarima") {
        const auto orders = parse_orders(args.orders);
        auto centered = tsids::sarima::seasonal_center(values, orders.s);
        tsids::sarima::GdConfig gd;
        gd.learning_rate = args.lr;
        gd.max_iters = args.max_iters;
        gd.tol = args.tol;
        auto model = tsids::sarima::fit_least_squares(centered.values, orders, gd);
        model.seasonal_means = std::move(centered.means);

        json j = tsids::sarima::model_to_json(model);
        // Residual whiteness check, when the fit leaves any variance to test.
        const auto residuals = tsids::sarima::one_step_residuals(model, centered.values);
        const std::size_t H = tsids::sarima::ljung_box_default_lags(residuals.size());
        const auto fitted = static_cast<std::size_t>(orders.P + orders.p);
        if (model.sigma2 > 0.0 && H > fitted && residuals.size() > H) {
            const auto lb = tsids::sarima::ljung_box(residuals, H, fitted);
            j["ljung_box"] = {{"Q", lb.q_stat},
                              {"critical", lb.critical},
                              {"reject", lb.reject},
                              {"lags", lb.lags},
                              {"dof", lb.dof}};
        } else {
            j["ljung_box"] = nullptr;
        }
        write_json_file(model_path, j);
        std::cout << "fit sarima " << args.feature << ": sigma2=" << model.sigma2
                  << (model.fit.converged ? " (gradient tolerance reached)"
                                          : " (max iterations reached)")
                  << " -> " << model_path.string() << "\n";
    } else {
        tsids::lstm::TrainConfig cfg;
        cfg.iterations = args.iterations;
        cfg.learning_rate = args.lr;
        cfg.batch_size = args.batch;
        cfg.rng_seed = args.seed;
        cfg.gradient_clip = args.clip;
        tsids::Rng init_rng = tsids::Rng(args.seed).derive(7);
        auto net = tsids::lstm::make_network(args.layers, args.hidden, args.seq_len, init_rng);
        const auto trace = tsids::lstm::train(net, values, cfg);
        json j = tsids::lstm::to_json(net);
        j["train"]["initial_loss"] = trace.front();
        j["train"]["final_loss"] = trace.back();
        write_json_file(model_path, j);
        std::cout << "fit lstm " << args.feature << ": loss " << trace.front() << " -> "
                  << trace.back() << " over " << trace.size() << " iterations -> "
                  << model_path.string() << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// detect

struct DetectArgs {
    std::string input;
    std::string output_dir;
    std::string detector;
    std::vector<std::string> features;
    std::string model_path;
    std::string train_range;
    std::string truth_path;
    std::string orders = "4,0,0,1,0,0,10";
    std::size_t m = 10;
    long prefix_len = -1; // -1: default 2*m taken from the series head
    double threshold_override = -1.0;
    double quantile = 0.9995;
    double multiplier = 1.0;
    bool with_confusion = false;
    bool strip_labeled = false;
    bool plot = false;
    std::uint64_t seed = 0;
    // lstm training fallback when no --model is given
    std::size_t hidden = 32;
    std::size_t layers = 1;
    std::size_t seq_len = 10;
    std::size_t iterations = 2'000;
    std::size_t batch = 50;
    double lr = 1e-3;
    double clip = 5.0;
};

void write_report(const fs::path& dir, const tsids::eval::DetectionReport& report) {
    write_json_file(dir / ("report_" + report.detector + "_" + report.feature + ".json"),
                    tsids::eval::report_to_json(report));
}

void maybe_plot(const DetectArgs& args, const fs::path& dir, const std::string& feature,
                std::span<const double> values, std::span<const std::uint8_t> labels,
                double threshold) {
    if (!args.plot) return;
    const std::string detector = canonical_detector(args.detector);
    auto out = open_output(dir / ("plot_" + detector + "_" + feature + ".svg"));
    tsids::svg::line_chart(out, values, labels, threshold, true, detector + " / " + feature);
}

int detect_matrix_profile(const DetectArgs& args, const tsids::FeatureSeries& series,
                          const fs::path& dir) {
    const auto& features = args.features;
    tsids::matrix_profile::ProfileConfig config;
    config.m = args.m;
    const std::size_t prefix_len =
        args.prefix_len >= 0 ? static_cast<std::size_t>(args.prefix_len) : 2 * args.m;
    if (prefix_len > series.n_seconds)
        throw tsids::validation_error("prefix length exceeds the series");
    // The prefix is the early-reference pattern store; it must be clean.
    for (std::size_t t = 0; t < prefix_len; ++t)
        if (series.label[t])
            throw tsids::validation_error(
                "labeled second " + std::to_string(t) +
                " inside the reference prefix; shorten --prefix-len or use clean data");

    std::map<std::string, tsids::matrix_profile::ProfileResult> results;
    std::map<std::string, double> thresholds;
    for (const auto& feature : features) {
        const auto& values = series.feature(feature);
        config.prefix.assign(values.begin(), values.begin() + prefix_len);
        results[feature] = tsids::matrix_profile::left_matrix_profile(values, config);
        thresholds[feature] =
            args.threshold_override >= 0.0
                ? args.threshold_override
                : tsids::matrix_profile::perfect_threshold(results[feature],
                                                           series.attack_intervals);
    }

    // Profile CSV: fixed three-feature schema, empty cells where a feature
    // was not computed or the profile is undefined.
    {
        auto out = open_output(dir / "profile.csv");
        out << "second,packets_profile,ip_pairs_profile,port_pairs_profile,label\n";
        for (std::size_t t = 0; t < series.n_seconds; ++t) {
            out << t;
            for (const auto& name : tsids::detector_features()) {
                out << ',';
                const auto it = results.find(name);
                if (it != results.end() && tsids::matrix_profile::defined(it->second.profile[t]))
                    out << tsids::csv::format_double(it->second.profile[t]);
            }
            out << ',' << int(series.label[t]) << '\n';
        }
    }

    const auto truth = args.truth_path.empty()
                           ? intervals_from_labels(series.attack_intervals)
                           : intervals_from_truth(args.truth_path);
    for (const auto& feature : features) {
        const auto& result = results[feature];
        tsids::eval::DetectionReport report;
        report.detector = "matrix_profile";
        report.feature = feature;
        report.thresholds = {{"perfect", thresholds[feature]}};
        report.flagged = tsids::matrix_profile::flag_at_threshold(result, thresholds[feature]);
        const auto table = tsids::eval::latency(report.flagged, truth);
        report.latency_rows = table.rows;
        report.false_positives = table.false_positives;
        if (args.with_confusion) {
            std::vector<std::uint8_t> evaluable(series.n_seconds, 0);
            for (std::size_t t = 0; t < series.n_seconds; ++t)
                evaluable[t] = tsids::matrix_profile::defined(result.profile[t]);
            report.counts = tsids::eval::confusion(report.flagged, series.label, evaluable);
            report.metric_values = tsids::eval::metrics(*report.counts);
        }
        write_report(dir, report);
        maybe_plot(args, dir, feature, result.profile, series.label, thresholds[feature]);
    }
    std::cout << "detect matrix_profile: wrote " << (dir / "profile.csv").string() << "\n";
    return 0;
}

int detect_sarima(const DetectArgs& args, const tsids::FeatureSeries& series,
                  const fs::path& dir) {
    for (const auto& feature : args.features) {
        tsids::sarima::SarimaModel model;
        std::size_t test_begin = 0;
        if (!args.model_path.empty()) {
            auto in = open_input(args.model_path);
            json j;
            in >> j;
            model = tsids::sarima::model_from_json(j);
        } else if (!args.train_range.empty()) {
            const auto range = parse_range(args.train_range);
            const auto values = training_values(series, feature, args.train_range,
                                                args.strip_labeled, false);
            auto centered = tsids::sarima::seasonal_center(values, parse_orders(args.orders).s);
            model = tsids::sarima::fit_least_squares(centered.values, parse_orders(args.orders));
            model.seasonal_means = std::move(centered.means);
            test_begin = range.second;
        } else {
            throw tsids::validation_error("sarima detect needs --model or --train-range");
        }

        const auto& values = series.feature(feature);
        if (test_begin >= series.n_seconds)
            throw tsids::validation_error("train range leaves no test data");
        const std::span<const double> test(values.data() + test_begin,
                                           series.n_seconds - test_begin);
        const auto detection = tsids::sarima::detect(test, model, args.multiplier, args.quantile);

        {
            auto out = open_output(dir / ("detection_sarima_" + feature + ".csv"));
            out << "second,value,prediction,abs_error,threshold,flagged,evaluable\n";
            for (std::size_t i = 0; i < detection.rows.size(); ++i) {
                const auto& row = detection.rows[i];
                out << (test_begin + i) << ',' << tsids::csv::format_double(row.value) << ',';
                if (row.evaluable)
                    out << tsids::csv::format_double(row.prediction) << ','
                        << tsids::csv::format_double(row.abs_error);
                else
                    out << ',';
                out << ',' << tsids::csv::format_double(detection.threshold) << ','
                    << int(row.flagged) << ',' << int(row.evaluable) << '\n';
            }
        }

        tsids::eval::DetectionReport report;
        report.detector = "sarima";
        report.feature = feature;
        report.thresholds = {{"abs_error", detection.threshold},
                             {"quantile", args.quantile},
                             {"multiplier", args.multiplier}};
        for (const std::size_t t : detection.flagged) report.flagged.push_back(test_begin + t);

        const auto truth = args.truth_path.empty()
                               ? intervals_from_labels(series.attack_intervals)
                               : intervals_from_truth(args.truth_path);
        const auto table = tsids::eval::latency(report.flagged, truth);
        report.latency_rows = table.rows;
        report.false_positives = table.false_positives;

        std::vector<std::uint8_t> evaluable(series.n_seconds, 0);
        for (std::size_t i = detection.warmup; i < detection.rows.size(); ++i)
            evaluable[test_begin + i] = 1;
        report.counts = tsids::eval::confusion(report.flagged, series.label, evaluable);
        report.metric_values = tsids::eval::metrics(*report.counts);
        write_report(dir, report);

        std::vector<double> errors(series.n_seconds,
                                   std::numeric_limits<double>::quiet_NaN());
        for (std::size_t i = 0; i < detection.rows.size(); ++i)
            if (detection.rows[i].evaluable)
                errors[test_begin + i] = detection.rows[i].abs_error;
        maybe_plot(args, dir, feature, errors, series.label, detection.threshold);
    }
    std::cout << "detect sarima: reports in " << dir.string() << "\n";
    return 0;
}

int detect_lstm(const DetectArgs& args, const tsids::FeatureSeries& series, const fs::path& dir) {
    for (const auto& feature : args.features) {
        tsids::lstm::Network net;
        std::size_t test_begin = 0;
        if (!args.model_path.empty()) {
            auto in = open_input(args.model_path);
            json j;
            in >> j;
            net = tsids::lstm::from_json(j);
        } else if (!args.train_range.empty()) {
            const auto range = parse_range(args.train_range);
            const auto values = training_values(series, feature, args.train_range, true, false);
            tsids::lstm::TrainConfig cfg;
            cfg.iterations = args.iterations;
            cfg.learning_rate = args.lr;
            cfg.batch_size = args.batch;
            cfg.rng_seed = args.seed;
            cfg.gradient_clip = args.clip;
            tsids::Rng init_rng = tsids::Rng(args.seed).derive(7);
            net = tsids::lstm::make_network(args.layers, args.hidden, args.seq_len, init_rng);
            tsids::lstm::train(net, values, cfg);
            test_begin = range.second;
        } else {
            throw tsids::validation_error("lstm detect needs --model or --train-range");
        }

        const auto& values = series.feature(feature);
        if (test_begin >= series.n_seconds)
            throw tsids::validation_error("train range leaves no test data");
        const std::span<const double> test(values.data() + test_begin,
                                           series.n_seconds - test_begin);

        // Two passes: measure errors untouched, then re-run with replacement
        // at the chosen threshold so a detected attack cannot poison the
        // following windows.
        const auto probe = tsids::lstm::prediction_errors(net, test,
                                                          tsids::lstm::no_replacement());
        std::vector<std::uint8_t> test_labels(series.label.begin() + test_begin,
                                              series.label.end());
        double threshold;
        if (args.threshold_override >= 0.0)
            threshold = args.threshold_override;
        else
            threshold = tsids::lstm::threshold_ma(probe.errors, test_labels);
        const auto run = tsids::lstm::prediction_errors(
            net, test, tsids::lstm::fixed_threshold(threshold));

        {
            auto out = open_output(dir / ("detection_lstm_" + feature + ".csv"));
            out << "second,actual,predicted,abs_error,flagged\n";
            for (std::size_t i = 0; i < test.size(); ++i) {
                out << (test_begin + i) << ',' << tsids::csv::format_double(test[i]) << ',';
                if (!std::isnan(run.errors[i]))
                    out << tsids::csv::format_double(run.predictions[i]) << ','
                        << tsids::csv::format_double(run.errors[i]);
                else
                    out << ',';
                out << ',' << (std::binary_search(run.flagged.begin(), run.flagged.end(), i) ? 1 : 0)
                    << '\n';
            }
        }

        tsids::eval::DetectionReport report;
        report.detector = "lstm";
        report.feature = feature;
        report.thresholds = {{"abs_error", threshold}};
        for (const std::size_t t : run.flagged) report.flagged.push_back(test_begin + t);

        const auto truth = args.truth_path.empty()
                               ? intervals_from_labels(series.attack_intervals)
                               : intervals_from_truth(args.truth_path);
        const auto table = tsids::eval::latency(report.flagged, truth);
        report.latency_rows = table.rows;
        report.false_positives = table.false_positives;

        std::vector<std::uint8_t> evaluable(series.n_seconds, 0);
        for (std::size_t i = net.seq_len; i < test.size(); ++i) evaluable[test_begin + i] = 1;
        report.counts = tsids::eval::confusion(report.flagged, series.label, evaluable);
        report.metric_values = tsids::eval::metrics(*report.counts);
        write_report(dir, report);

        std::vector<double> errors(series.n_seconds,
                                   std::numeric_limits<double>::quiet_NaN());
        for (std::size_t i = 0; i < test.size(); ++i)
            if (!std::isnan(run.errors[i])) errors[test_begin + i] = run.errors[i];
        maybe_plot(args, dir, feature, errors, series.label, threshold);
    }
    std::cout << "detect lstm: reports in " << dir.string() << "\n";
    return 0;
}

int cmd_detect(const DetectArgs& args_in) {
    DetectArgs args = args_in;
    const std::string detector = canonical_detector(args.detector);
    if (args.features.empty()) args.features = tsids::detector_features();

    auto in = open_input(args.input);
    const auto series = tsids::ingest::read_features_csv(in);
    for (const auto& f : args.features) (void)series.feature(f);
    const auto dir = ensure_dir(args.output_dir);

    if (detector == "matrix_profile") return detect_matrix_profile(args, series, dir);
    if (detector == "sarima") return detect_sarima(args, series, dir);
    return detect_lstm(args, series, dir);
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
    std::string input;    // detection CSV (or profile.csv for matrix profile)
    std::string features; // features.csv for labels
    std::string truth_path;
    std::string output_dir;
    std::string detector;
    std::string feature = "port_pairs";
    double threshold = -1.0;
    bool with_confusion = false;
};

int cmd_report(const ReportArgs& args) {
    const std::string detector = canonical_detector(args.detector);
    auto fin = open_input(args.features);
    const auto series = tsids::ingest::read_features_csv(fin);

    // Pull flagged seconds and the evaluable mask out of the detection CSV.
    auto din = open_input(args.input);
    std::string line;
    if (!std::getline(din, line)) throw tsids::parse_error("detection CSV: empty file");
    const auto header = tsids::csv::split(tsids::csv::strip_cr(std::move(line)));
    const auto col = [&](std::string_view name) -> std::ptrdiff_t {
        const auto it = std::find(header.begin(), header.end(), std::string(name));
        return it == header.end() ? -1 : it - header.begin();
    };
    const std::ptrdiff_t c_second = col("second");
    if (c_second < 0) throw tsids::parse_error("detection CSV: no 'second' column");
    const std::ptrdiff_t c_flagged = col("flagged");
    const std::ptrdiff_t c_evaluable = col("evaluable");
    const std::ptrdiff_t c_error = col("abs_error");
    const std::ptrdiff_t c_profile = col(args.feature + "_profile");
    if (c_flagged < 0 && c_profile < 0)
        throw tsids::parse_error("detection CSV: need a 'flagged' or '" + args.feature +
                                 "_profile' column");
    if (c_flagged < 0 && args.threshold < 0.0)
        throw tsids::validation_error("profile input needs --threshold to derive flags");

    std::vector<std::size_t> flagged;
    std::vector<std::uint8_t> evaluable(series.n_seconds, 0);
    std::size_t line_no = 1;
    while (std::getline(din, line)) {
        ++line_no;
        line = tsids::csv::strip_cr(std::move(line));
        if (line.empty()) continue;
        const auto f = tsids::csv::split(line);
        if (f.size() != header.size())
            throw tsids::parse_error("line " + std::to_string(line_no) + ": field count mismatch");
        const auto second =
            static_cast<std::size_t>(tsids::csv::to_int(f[c_second], line_no, "second"));
        if (second >= series.n_seconds)
            throw tsids::validation_error("detection CSV second " + std::to_string(second) +
                                          " outside the feature series");
        bool is_evaluable;
        if (c_evaluable >= 0)
            is_evaluable = f[c_evaluable] == "1";
        else if (c_profile >= 0)
            is_evaluable = !f[c_profile].empty();
        else if (c_error >= 0)
            is_evaluable = !f[c_error].empty();
        else
            is_evaluable = true; // no warmup information in the file

        evaluable[second] = is_evaluable;
        if (!is_evaluable) continue;
        if (c_flagged >= 0) {
            if (f[c_flagged] == "1") flagged.push_back(second);
        } else {
            const double v = tsids::csv::to_double(f[c_profile], line_no, "profile");
            if (v >= args.threshold) flagged.push_back(second);
        }
    }
    std::sort(flagged.begin(), flagged.end());

    tsids::eval::DetectionReport report;
    report.detector = detector;
    report.feature = args.feature;
    if (args.threshold >= 0.0) report.thresholds = {{"abs_error", args.threshold}};
    report.flagged = flagged;
    const auto truth = args.truth_path.empty()
                           ? intervals_from_labels(series.attack_intervals)
                           : intervals_from_truth(args.truth_path);
    const auto table = tsids::eval::latency(flagged, truth);
    report.latency_rows = table.rows;
    report.false_positives = table.false_positives;
    // Matrix-profile distances have no per-second classification semantics
    // (window overlap inflates false positives), so confusion counts are
    // opt-in there and default elsewhere.
    if (detector != "matrix_profile" || args.with_confusion) {
        report.counts = tsids::eval::confusion(flagged, series.label, evaluable);
        report.metric_values = tsids::eval::metrics(*report.counts);
    }
    const auto dir = ensure_dir(args.output_dir);
    write_report(dir, report);
    std::cout << "report: " << (dir / ("report_" + detector + "_" + args.feature + ".json")).string()
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-series intrusion detection toolkit"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Generate labeled Modbus-like traffic");
    c_sim->add_option("--output-dir", sim.output_dir)->required();
    c_sim->add_option("--duration", sim.cfg.duration_s, "Capture length in seconds")->required();
    c_sim->add_option("--rtus", sim.cfg.n_rtus);
    c_sim->add_option("--mtus", sim.cfg.n_mtus);
    c_sim->add_option("--poll-interval", sim.cfg.poll_interval_s);
    c_sim->add_option("--manual-rate", sim.cfg.manual_op_rate, "Operator actions per minute");
    c_sim->add_option("--attack", sim.attack_specs, "kind:start_s:duration_s:intensity");
    c_sim->add_option("--seed", sim.cfg.rng_seed);

    IngestArgs ing;
    auto* c_ing = app.add_subcommand("ingest", "Aggregate packet events into per-second features");
    c_ing->add_option("--input", ing.input)->required();
    c_ing->add_option("--output-dir", ing.output_dir)->required();
    c_ing->add_flag("--extra-columns", ing.extra_columns, "Also emit byte and protocol counts");

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "Fit a sarima or lstm model on clean traffic");
    c_fit->add_option("--input", fit.input)->required();
    c_fit->add_option("--output-dir", fit.output_dir)->required();
    c_fit->add_option("--detector", fit.detector)->required();
    c_fit->add_option("--feature", fit.feature);
    c_fit->add_option("--train-range", fit.train_range, "a:b half-open second range");
    c_fit->add_option("--orders", fit.orders, "p,d,q,P,D,Q,s");
    c_fit->add_flag("--strip-labeled", fit.strip_labeled);
    c_fit->add_flag("--allow-labeled", fit.allow_labeled);
    c_fit->add_option("--seed", fit.seed);
    c_fit->add_option("--lr", fit.lr);
    c_fit->add_option("--max-iters", fit.max_iters);
    c_fit->add_option("--tol", fit.tol);
    c_fit->add_option("--hidden", fit.hidden);
    c_fit->add_option("--layers", fit.layers);
    c_fit->add_option("--seq-len", fit.seq_len);
    c_fit->add_option("--iterations", fit.iterations);
    c_fit->add_option("--batch", fit.batch);
    c_fit->add_option("--clip", fit.clip);

    DetectArgs det;
    auto* c_det = app.add_subcommand("detect", "Run a detector over a feature series");
    c_det->add_option("--input", det.input)->required();
    c_det->add_option("--output-dir", det.output_dir)->required();
    c_det->add_option("--detector", det.detector)->required();
    c_det->add_option("--feature", det.features, "Feature name (repeatable; default all three)");
    c_det->add_option("--model", det.model_path);
    c_det->add_option("--train-range", det.train_range);
    c_det->add_option("--truth", det.truth_path, "Ground-truth JSON for latency rows");
    c_det->add_option("--orders", det.orders);
    c_det->add_option("--m", det.m, "Matrix profile window length");
    c_det->add_option("--prefix-len", det.prefix_len, "Matrix profile training prefix");
    c_det->add_option("--threshold", det.threshold_override);
    c_det->add_option("--quantile", det.quantile);
    c_det->add_option("--multiplier", det.multiplier);
    c_det->add_flag("--with-confusion", det.with_confusion);
    c_det->add_flag("--strip-labeled", det.strip_labeled);
    c_det->add_flag("--plot", det.plot, "Emit an SVG per feature");
    c_det->add_option("--seed", det.seed);
    c_det->add_option("--hidden", det.hidden);
    c_det->add_option("--layers", det.layers);
    c_det->add_option("--seq-len", det.seq_len);
    c_det->add_option("--iterations", det.iterations);
    c_det->add_option("--batch", det.batch);
    c_det->add_option("--lr", det.lr);
    c_det->add_option("--clip", det.clip);

    ReportArgs rep;
    auto* c_rep = app.add_subcommand("report", "Evaluate a detection CSV against labels");
    c_rep->add_option("--input", rep.input)->required();
    c_rep->add_option("--features", rep.features)->required();
    c_rep->add_option("--truth", rep.truth_path);
    c_rep->add_option("--output-dir", rep.output_dir)->required();
    c_rep->add_option("--detector", rep.detector)->required();
    c_rep->add_option("--feature", rep.feature);
    c_rep->add_option("--threshold", rep.threshold);
    c_rep->add_flag("--with-confusion", rep.with_confusion);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (c_sim->parsed()) return cmd_simulate(sim);
        if (c_ing->parsed()) return cmd_ingest(ing);
        if (c_fit->parsed()) return cmd_fit(fit);
        if (c_det->parsed()) return cmd_detect(det);
        if (c_rep->parsed()) return cmd_report(rep);
    } catch (const tsids::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const tsids::validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const tsids::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const tsids::fit_error& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
