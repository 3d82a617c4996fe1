// Copyright (c) 2026 The specfold Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "specfold/common.hpp"

namespace specfold {

/// Contents of a spectral CSV: `wavelength_nm,v1[,v2,...]`, one row per
/// wavelength, ascending. Columns are value series (patches, channels, ...).
struct SpectralTable {
    std::vector<double> wavelengths;
    std::vector<std::vector<double>> columns;  // columns[c][row]
    std::vector<std::string> column_names;

    std::size_t column_count() const { return columns.size(); }
};

namespace detail {

inline double parse_field(const std::string& field, std::size_t row_index) {
    double v = 0.0;
    const char* b = field.data();
    const char* e = b + field.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{}) {
        throw IngestError("spectral CSV: unparsable value '" + field + "' at data row " +
                          std::to_string(row_index));
    }
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

inline SpectralTable read_spectral_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open: " + path);

    SpectralTable t;
    std::string line;
    if (!std::getline(in, line)) return t;  // empty file: no rows, no error
    auto header = detail::split_csv_line(line);
    if (header.empty() || header[0] != "wavelength_nm")
        throw IngestError("spectral CSV: first header field must be wavelength_nm: " + path);
    t.column_names.assign(header.begin() + 1, header.end());
    t.columns.resize(t.column_names.size());

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw IngestError("spectral CSV: row " + std::to_string(row) + " has " +
                              std::to_string(fields.size()) + " fields, expected " +
                              std::to_string(header.size()) + " in " + path);
        double w = detail::parse_field(fields[0], row);
        if (!t.wavelengths.empty() && w <= t.wavelengths.back())
            throw IngestError("spectral CSV: wavelengths must ascend at row " +
                              std::to_string(row) + " in " + path);
        t.wavelengths.push_back(w);
        for (std::size_t c = 0; c < t.columns.size(); ++c)
            t.columns[c].push_back(detail::parse_field(fields[c + 1], row));
        ++row;
    }
    return t;
}

inline void write_spectral_csv(const std::string& path, const SpectralTable& t) {
    std::ofstream out(path);
    if (!out) throw IngestError("cannot open for writing: " + path);
    out << "wavelength_nm";
    for (const auto& name : t.column_names) out << ',' << name;
    out << '\n';
    out.precision(12);
    for (std::size_t r = 0; r < t.wavelengths.size(); ++r) {
        out << t.wavelengths[r];
        for (const auto& col : t.columns) out << ',' << col[r];
        out << '\n';
    }
    if (!out) throw IngestError("write failed: " + path);
}

}  // namespace specfold
