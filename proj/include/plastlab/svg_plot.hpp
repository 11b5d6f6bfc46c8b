#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "plastlab/csv.hpp"
#include "plastlab/errors.hpp"

namespace plastlab {

struct PlotSeries {
    std::string label;
    std::vector<double> mean;
    std::vector<double> stderr_; // standard error over seeds, 0 for a single run
};

namespace detail {

inline std::string strip_seed_suffix(std::string stem) {
    // Run files are named "<label>-s<seed>"; group by label.
    const std::size_t pos = stem.rfind("-s");
    if (pos == std::string::npos || pos + 2 >= stem.size()) return stem;
    for (std::size_t i = pos + 2; i < stem.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(stem[i]))) return stem;
    return stem.substr(0, pos);
}

inline std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

inline std::string fmt_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace detail

/// Aggregate run CSVs into one series per system: mean and standard error of
/// `metric` over seeds, indexed by task.
inline std::vector<PlotSeries> aggregate_metric(const std::vector<std::filesystem::path>& csvs,
                                                const std::string& metric) {
    if (csvs.empty()) throw InputError("plot: need at least one csv");
    std::map<std::string, std::vector<std::vector<double>>> groups;
    for (const auto& path : csvs) {
        const CsvTable table = read_csv(path);
        if (!table.has_column(metric))
            throw InputError("plot: metric column '" + metric + "' absent from " + path.string());
        const std::size_t mcol = table.column_index(metric);
        const std::size_t tcol = table.column_index("task");
        std::vector<std::pair<double, double>> rows;
        for (const auto& row : table.rows) rows.emplace_back(row[tcol], row[mcol]);
        std::sort(rows.begin(), rows.end());
        std::vector<double> series;
        for (const auto& [task, value] : rows) series.push_back(value);
        groups[detail::strip_seed_suffix(path.stem().string())].push_back(std::move(series));
    }
    std::vector<PlotSeries> out;
    for (auto& [label, runs] : groups) {
        std::size_t len = runs.front().size();
        for (const auto& r : runs) len = std::min(len, r.size());
        PlotSeries s;
        s.label = label;
        for (std::size_t t = 0; t < len; ++t) {
            double mean = 0.0;
            for (const auto& r : runs) mean += r[t];
            mean /= static_cast<double>(runs.size());
            double var = 0.0;
            for (const auto& r : runs) var += (r[t] - mean) * (r[t] - mean);
            const double se = runs.size() > 1
                                  ? std::sqrt(var / static_cast<double>(runs.size() - 1)) /
                                        std::sqrt(static_cast<double>(runs.size()))
                                  : 0.0;
            s.mean.push_back(mean);
            s.stderr_.push_back(se);
        }
        out.push_back(std::move(s));
    }
    return out;
}

/// Render a line chart with a standard-error band per series into a
/// standalone SVG. Output is deterministic for a fixed input set.
inline std::string render_svg(const std::vector<PlotSeries>& series, const std::string& metric) {
    if (series.empty()) throw InputError("plot: no series to draw");
    static const char* kColors[] = {"#000000", "#0072b2", "#d55e00", "#009e73",
                                    "#cc79a7", "#e69f00", "#56b4e9", "#999999"};
    const double width = 960, height = 540;
    const double left = 80, right = width - 210, top = 40, bottom = height - 60;

    std::size_t max_tasks = 0;
    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (const auto& s : series) {
        max_tasks = std::max(max_tasks, s.mean.size());
        for (std::size_t t = 0; t < s.mean.size(); ++t) {
            ymin = std::min(ymin, s.mean[t] - s.stderr_[t]);
            ymax = std::max(ymax, s.mean[t] + s.stderr_[t]);
        }
    }
    if (max_tasks == 0) throw InputError("plot: empty series");
    if (ymin == ymax) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;
    const double xmax = static_cast<double>(max_tasks > 1 ? max_tasks - 1 : 1);

    auto sx = [&](double t) { return left + (right - left) * (t / xmax); };
    auto sy = [&](double v) { return bottom - (bottom - top) * ((v - ymin) / (ymax - ymin)); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           detail::fmt_tick(width) + "\" height=\"" + detail::fmt_tick(height) +
           "\" viewBox=\"0 0 " + detail::fmt_tick(width) + " " + detail::fmt_tick(height) +
           "\" font-family=\"sans-serif\" font-size=\"13\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // Axes.
    svg += "<line x1=\"" + detail::fmt_coord(left) + "\" y1=\"" + detail::fmt_coord(bottom) +
           "\" x2=\"" + detail::fmt_coord(right) + "\" y2=\"" + detail::fmt_coord(bottom) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + detail::fmt_coord(left) + "\" y1=\"" + detail::fmt_coord(top) +
           "\" x2=\"" + detail::fmt_coord(left) + "\" y2=\"" + detail::fmt_coord(bottom) +
           "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double t = std::round(xmax * i / 5.0); // integer task positions
        const double x = sx(t);
        svg += "<line x1=\"" + detail::fmt_coord(x) + "\" y1=\"" + detail::fmt_coord(bottom) +
               "\" x2=\"" + detail::fmt_coord(x) + "\" y2=\"" + detail::fmt_coord(bottom + 5) +
               "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + detail::fmt_coord(x) + "\" y=\"" + detail::fmt_coord(bottom + 20) +
               "\" text-anchor=\"middle\">" + detail::fmt_tick(t + 1) + "</text>\n";
        const double v = ymin + (ymax - ymin) * i / 5.0;
        const double y = sy(v);
        svg += "<line x1=\"" + detail::fmt_coord(left - 5) + "\" y1=\"" + detail::fmt_coord(y) +
               "\" x2=\"" + detail::fmt_coord(left) + "\" y2=\"" + detail::fmt_coord(y) +
               "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + detail::fmt_coord(left - 10) + "\" y=\"" +
               detail::fmt_coord(y + 4) + "\" text-anchor=\"end\">" + detail::fmt_tick(v) +
               "</text>\n";
    }
    svg += "<text x=\"" + detail::fmt_coord((left + right) / 2) + "\" y=\"" +
           detail::fmt_coord(height - 15) + "\" text-anchor=\"middle\">task</text>\n";
    svg += "<text x=\"20\" y=\"" + detail::fmt_coord((top + bottom) / 2) +
           "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " +
           detail::fmt_coord((top + bottom) / 2) + ")\">" + metric + "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kColors[si % (sizeof(kColors) / sizeof(kColors[0]))];
        // Standard-error band: upper edge forward, lower edge back.
        std::string band = "<polygon fill=\"" + std::string(color) +
                           "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
        for (std::size_t t = 0; t < s.mean.size(); ++t)
            band += detail::fmt_coord(sx(double(t))) + "," +
                    detail::fmt_coord(sy(s.mean[t] + s.stderr_[t])) + " ";
        for (std::size_t t = s.mean.size(); t-- > 0;)
            band += detail::fmt_coord(sx(double(t))) + "," +
                    detail::fmt_coord(sy(s.mean[t] - s.stderr_[t])) + " ";
        band += "\"/>\n";
        svg += band;

        std::string line = "<polyline fill=\"none\" stroke=\"" + std::string(color) +
                           "\" stroke-width=\"1.8\"";
        if (si % 2 == 1) line += " stroke-dasharray=\"6 3\"";
        line += " points=\"";
        for (std::size_t t = 0; t < s.mean.size(); ++t)
            line += detail::fmt_coord(sx(double(t))) + "," + detail::fmt_coord(sy(s.mean[t])) +
                    " ";
        line += "\"/>\n";
        svg += line;

        // Legend entry.
        const double ly = top + 10 + 22 * static_cast<double>(si);
        svg += "<line x1=\"" + detail::fmt_coord(right + 15) + "\" y1=\"" +
               detail::fmt_coord(ly) + "\" x2=\"" + detail::fmt_coord(right + 45) + "\" y2=\"" +
               detail::fmt_coord(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"" +
               (si % 2 == 1 ? " stroke-dasharray=\"6 3\"" : "") + "/>\n";
        svg += "<text x=\"" + detail::fmt_coord(right + 52) + "\" y=\"" +
               detail::fmt_coord(ly + 4) + "\">" + s.label + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

/// Read a set of run CSVs, aggregate one metric per system, write the chart.
inline void emit_plots(const std::vector<std::filesystem::path>& csvs, const std::string& metric,
                       const std::filesystem::path& out_svg) {
    const auto series = aggregate_metric(csvs, metric);
    write_text_file(out_svg, render_svg(series, metric));
}

} // namespace plastlab
