#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "tsids/csv.hpp"

namespace tsids::svg {

/// Minimal line chart: the series as a polyline, an optional horizontal
/// threshold line, and dots on labeled seconds. NaN points break the line.
/// Hand-emitted markup keeps plots byte-deterministic.
inline void line_chart(std::ostream& out, std::span<const double> values,
                       std::span<const std::uint8_t> labels, double threshold,
                       bool draw_threshold, const std::string& title) {
    constexpr int width = 960, height = 320, pad = 40;

    double lo = 0.0, hi = 1.0;
    bool seen = false;
    for (const double v : values) {
        if (std::isnan(v)) continue;
        if (!seen) {
            lo = hi = v;
            seen = true;
        } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (draw_threshold) {
        lo = std::min(lo, threshold);
        hi = std::max(hi, threshold);
    }
    if (hi - lo < 1e-12) hi = lo + 1.0;

    const double n = std::max<std::size_t>(values.size(), 2) - 1.0;
    const auto sx = [&](std::size_t t) {
        return pad + (width - 2.0 * pad) * static_cast<double>(t) / n;
    };
    const auto sy = [&](double v) {
        return height - pad - (height - 2.0 * pad) * (v - lo) / (hi - lo);
    };
    const auto num = [](double v) { return csv::format_double(std::round(v * 100.0) / 100.0); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << pad << "\" y=\"20\" font-family=\"monospace\" font-size=\"14\">"
        << title << "</text>\n";

    bool open = false;
    for (std::size_t t = 0; t < values.size(); ++t) {
        if (std::isnan(values[t])) {
            if (open) {
                out << "\"/>\n";
                open = false;
            }
            continue;
        }
        if (!open) {
            out << "<polyline fill=\"none\" stroke=\"#336699\" stroke-width=\"1\" points=\"";
            open = true;
        }
        out << num(sx(t)) << ',' << num(sy(values[t])) << ' ';
    }
    if (open) out << "\"/>\n";

    if (draw_threshold)
        out << "<line x1=\"" << pad << "\" y1=\"" << num(sy(threshold)) << "\" x2=\""
            << width - pad << "\" y2=\"" << num(sy(threshold))
            << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";

    for (std::size_t t = 0; t < labels.size() && t < values.size(); ++t) {
        if (!labels[t]) continue;
        const double y = std::isnan(values[t]) ? lo : values[t];
        out << "<circle cx=\"" << num(sx(t)) << "\" cy=\"" << num(sy(y))
            << "\" r=\"3\" fill=\"#555555\"/>\n";
    }
    out << "</svg>\n";
}

} // namespace tsids::svg
