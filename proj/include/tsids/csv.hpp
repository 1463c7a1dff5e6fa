#pragma once

#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tsids/errors.hpp"

namespace tsids::csv {

/// Split one CSV line on commas. The toolkit's formats never quote fields,
/// so no quoting rules apply.
inline std::vector<std::string> split(std::string_view line, char delim = ',') {
    std::vector<std::string> out;
    std::size_t begin = 0;
    while (true) {
        const std::size_t pos = line.find(delim, begin);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(begin));
            break;
        }
        out.emplace_back(line.substr(begin, pos - begin));
        begin = pos + 1;
    }
    return out;
}

inline std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

inline std::int64_t to_int(std::string_view field, std::size_t line_no, std::string_view what) {
    std::int64_t value = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw parse_error("line " + std::to_string(line_no) + ": bad " + std::string(what) +
                          " '" + std::string(field) + "'");
    return value;
}

inline double to_double(std::string_view field, std::size_t line_no, std::string_view what) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw parse_error("line " + std::to_string(line_no) + ": bad " + std::string(what) +
                          " '" + std::string(field) + "'");
    return value;
}

/// Shortest round-trip decimal form; keeps emitted files byte-stable.
inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace tsids::csv
