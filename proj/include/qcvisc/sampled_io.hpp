#pragma once
// CSV ingestion for SampledFunction: a header row, then one row per site
// holding n coordinates followed by the value. '.' is the decimal separator.

#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include "qcvisc/quasiconvex.hpp"

namespace qcvisc {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline double parse_double(std::string_view field, std::size_t line) {
    field = trim(field);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw UsageError("sampled CSV line " + std::to_string(line) + ": invalid number '" +
                         std::string(field) + "'");
    }
    return v;
}

}  // namespace detail

inline SampledFunction read_sampled_csv(std::istream& in, std::size_t expected_dim = 0) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw UsageError("sampled CSV: missing header row");
    ++lineno;
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    std::vector<Vector> sites;
    Vector values;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        Vector row;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            row.push_back(detail::parse_double(rest.substr(0, comma), lineno));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (row.size() < 2) throw UsageError("sampled CSV line " + std::to_string(lineno) + ": need coordinates and a value");
        if (expected_dim != 0 && row.size() != expected_dim + 1) {
            throw UsageError("sampled CSV line " + std::to_string(lineno) + ": expected " +
                             std::to_string(expected_dim + 1) + " fields");
        }
        values.push_back(row.back());
        row.pop_back();
        sites.push_back(std::move(row));
    }
    return SampledFunction(std::move(sites), std::move(values));
}

inline SampledFunction read_sampled_csv(const std::string& path, std::size_t expected_dim = 0) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open sampled CSV '" + path + "'");
    return read_sampled_csv(in, expected_dim);
}

}  // namespace qcvisc
