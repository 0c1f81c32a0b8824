#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>

#include "../errors.hpp"
#include "../fit/dataset.hpp"
#include "csv.hpp"

namespace phonolib::io {

// Recognised unit suffixes, longest first so that e.g. `_mev_per_gpa` wins over `_gpa`.
inline constexpr std::array<std::string_view, 14> known_units{
    "mhz_per_k3", "mhz_per_k", "mev_per_gpa", "per_ghz2", "per_ns", "unitless", "per_k",
    "ghz", "mhz", "mev", "gpa", "ns", "nm", "k"};

// Bare names of quantities in arbitrary units.
inline constexpr std::array<std::string_view, 3> arbitrary_columns{"intensity", "height", "counts"};

inline std::string column_unit(std::string_view column) {
    for (auto a : arbitrary_columns)
        if (column == a) return "arb";
    for (auto u : known_units) {
        if (column == u) return std::string(u);
        if (column.size() > u.size() + 1 && column.substr(column.size() - u.size()) == u &&
            column[column.size() - u.size() - 1] == '_')
            return std::string(u);
    }
    return {};
}

struct ExpectedUnits {
    std::string x;  // empty accepts any unit
    std::string y;
};

inline fit::Dataset load_dataset(std::istream& in, const ExpectedUnits& expected = {}, const std::string& source = {}) {
    const auto t = read_csv(in);
    if (t.header.size() < 2 || t.header.size() > 3)
        throw ParseError("dataset needs columns x,value[,sigma], got " + std::to_string(t.header.size()), 0);
    fit::Dataset d;
    d.source = source;
    d.x_unit = column_unit(t.header[0]);
    d.y_unit = column_unit(t.header[1]);
    if (d.x_unit.empty()) throw ParseError("column '" + t.header[0] + "' carries no unit suffix", 0);
    if (d.y_unit.empty()) throw ParseError("column '" + t.header[1] + "' carries no unit suffix", 0);
    if (!expected.x.empty() && expected.x != d.x_unit)
        throw UsageError("x column unit '" + d.x_unit + "' does not match expected '" + expected.x + "'");
    if (!expected.y.empty() && expected.y != d.y_unit)
        throw UsageError("value column unit '" + d.y_unit + "' does not match expected '" + expected.y + "'");
    const bool has_sigma = t.header.size() == 3;
    if (has_sigma) {
        const auto su = column_unit(t.header[2]);
        if (!su.empty() && su != d.y_unit)
            throw UsageError("sigma column unit '" + su + "' does not match value unit '" + d.y_unit + "'");
    }
    d.unweighted = !has_sigma;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        const double s = has_sigma ? r[2] : 1.0;
        if (!std::isfinite(r[0]) || !std::isfinite(r[1])) throw ParseError("non-finite value", t.lines[i]);
        if (!(s > 0.0) || !std::isfinite(s)) throw ParseError("sigma must be > 0", t.lines[i]);
        d.points.push_back({r[0], r[1], s});
    }
    if (d.points.empty()) throw ParseError("dataset has no rows", 0);
    fit::canonicalize(d);
    return d;
}

inline fit::Dataset load_dataset(const std::filesystem::path& path, const ExpectedUnits& expected = {}) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path.string());
    try {
        return load_dataset(in, expected, path.string());
    } catch (const ParseError& e) {
        throw ParseError(e.detail(), e.line(), path.string());
    }
}

}  // namespace phonolib::io
