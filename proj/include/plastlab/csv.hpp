#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "plastlab/errors.hpp"
#include "plastlab/metrics.hpp"

namespace plastlab {

/// Shortest decimal form that round-trips the exact double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline constexpr std::string_view kRunCsvHeader =
    "seed,task,avg_online_accuracy,dead_unit_fraction,avg_weight_magnitude,"
    "avg_gradient_magnitude,stable_rank";

inline std::string run_csv_text(std::uint64_t seed, const std::vector<MetricsRecord>& records) {
    std::string out;
    out += kRunCsvHeader;
    out += '\n';
    for (const auto& r : records) {
        out += std::to_string(seed);
        out += ',';
        out += std::to_string(r.task);
        out += ',';
        out += format_double(r.avg_online_accuracy);
        out += ',';
        out += format_double(r.dead_unit_fraction);
        out += ',';
        out += format_double(r.avg_weight_magnitude);
        out += ',';
        out += format_double(r.avg_gradient_magnitude);
        out += ',';
        out += format_double(r.stable_rank);
        out += '\n';
    }
    return out;
}

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column_index(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw InputError("csv: column '" + std::string(name) + "' not found");
    }
    bool has_column(std::string_view name) const {
        for (const auto& c : columns)
            if (c == name) return true;
        return false;
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string(), 0);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty csv " + path.string(), 0);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) table.columns.push_back(cell);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t end = line.find(',', start);
            if (end == std::string::npos) end = line.size();
            double v = 0.0;
            const auto res = std::from_chars(line.data() + start, line.data() + end, v);
            if (res.ec != std::errc() || res.ptr != line.data() + end)
                throw ParseError("bad number in " + path.string() + " line " +
                                 std::to_string(lineno),
                                 start);
            row.push_back(v);
            start = end + 1;
        }
        if (row.size() != table.columns.size())
            throw ParseError("row width mismatch in " + path.string() + " line " +
                             std::to_string(lineno),
                             0);
        table.rows.push_back(std::move(row));
    }
    return table;
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing", 0);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

} // namespace plastlab
