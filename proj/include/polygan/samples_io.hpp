/**
 * @file samples_io.hpp
 * @details
 * CSV sample dumps: header "x1,x2[,x3]", one point per row, numbers in
 * shortest round-trip form.
 */
#ifndef POLYGAN_SAMPLES_IO_HPP
#define POLYGAN_SAMPLES_IO_HPP

#include "polygan/tensor_core.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace polygan {

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, end);
}

/// Writes the columns of `points` (dim x n).
inline void write_samples_csv(std::ostream& out, const Matrix& points) {
    for (Eigen::Index r = 0; r < points.rows(); ++r) out << (r ? ",x" : "x") << (r + 1);
    out << '\n';
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
        for (Eigen::Index r = 0; r < points.rows(); ++r) out << (r ? "," : "") << format_double(points(r, c));
        out << '\n';
    }
}

inline void write_samples_csv(const std::string& path, const Matrix& points) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_samples_csv(out, points);
}

/// Parses a sample dump back into a dim x n matrix.
inline Matrix read_samples_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw CsvError("csv: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::size_t dim = 0;
    {
        std::stringstream header(line);
        std::string cell;
        while (std::getline(header, cell, ',')) {
            if (cell != "x" + std::to_string(dim + 1)) throw CsvError("csv: unexpected header '" + line + "'");
            ++dim;
        }
    }
    if (dim == 0) throw CsvError("csv: empty header");

    std::vector<double> values;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t count = 0;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            const auto cell = rest.substr(0, comma);
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty())
                throw CsvError("csv: row " + std::to_string(row) + " has a malformed number '" + std::string(cell) +
                               "'");
            values.push_back(v);
            ++count;
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (count != dim)
            throw CsvError("csv: row " + std::to_string(row) + " has " + std::to_string(count) + " fields, expected " +
                           std::to_string(dim));
    }
    const auto n = static_cast<Eigen::Index>(values.size() / dim);
    return Eigen::Map<Matrix>(values.data(), static_cast<Eigen::Index>(dim), n);
}

inline Matrix read_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open '" + path + "'");
    return read_samples_csv(in);
}

}  // namespace polygan

#endif  // POLYGAN_SAMPLES_IO_HPP
