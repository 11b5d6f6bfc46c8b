#pragma once

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "plastlab/config.hpp"
#include "plastlab/continual.hpp"
#include "plastlab/csv.hpp"
#include "plastlab/dataio.hpp"
#include "plastlab/synth.hpp"

namespace plastlab {

inline constexpr const char* kDataDirEnvVar = "PLASTLAB_DATA";

struct DataPaths {
    std::filesystem::path images;
    std::filesystem::path labels;
};

/// Resolve the IDX files for a config: explicit paths win; otherwise the
/// standard file names under the data directory, which the PLASTLAB_DATA
/// environment variable overrides.
inline DataPaths resolve_data_paths(const ExperimentConfig& cfg) {
    DataPaths p;
    std::filesystem::path dir = cfg.data_dir;
    if (const char* env = std::getenv(kDataDirEnvVar); env && *env) dir = env;
    p.images = cfg.images_path.empty() ? dir / kTrainImagesName
                                       : std::filesystem::path(cfg.images_path);
    p.labels = cfg.labels_path.empty() ? dir / kTrainLabelsName
                                       : std::filesystem::path(cfg.labels_path);
    return p;
}

/// Load (and optionally subsample) the dataset a config points at. The
/// subsample draw depends only on the config, so every seed of a run sees
/// the same data.
inline Dataset load_config_dataset(const ExperimentConfig& cfg) {
    const DataPaths paths = resolve_data_paths(cfg);
    Dataset data = load_dataset(paths.images, paths.labels);
    if (data.images.cols() != cfg.widths.front())
        throw ConfigError("network.widths: input width " + std::to_string(cfg.widths.front()) +
                          " does not match data width " + std::to_string(data.images.cols()));
    if (cfg.subsample < 1.0) data = subsample_dataset(data, cfg.subsample, /*seed=*/0);
    return data;
}

inline std::filesystem::path run_csv_path(const std::filesystem::path& out_dir,
                                          const std::string& label, std::uint64_t seed) {
    return out_dir / (label + "-s" + std::to_string(seed) + ".csv");
}

struct RunOutput {
    std::filesystem::path csv;
    double auc = 0.0; // sum of per-task average online accuracy
};

inline double online_accuracy_auc(const std::vector<MetricsRecord>& records) {
    double auc = 0.0;
    for (const auto& r : records) auc += r.avg_online_accuracy;
    return auc;
}

/// Execute one seeded run and write its CSV (one row per task).
inline RunOutput execute_run(const ExperimentConfig& cfg, const Dataset& data,
                             std::uint64_t seed, const std::filesystem::path& out_dir,
                             const std::string& label) {
    std::filesystem::create_directories(out_dir);
    const RunResult result = run_experiment(cfg.setup(), data, seed);
    RunOutput out;
    out.csv = run_csv_path(out_dir, label, seed);
    out.auc = online_accuracy_auc(result.records);
    write_text_file(out.csv, run_csv_text(seed, result.records));
    return out;
}

/// Run a set of independent jobs on up to `jobs` threads. Each job owns its
/// state; results land in per-job slots, so scheduling cannot affect output.
template <typename Job>
inline void parallel_for_jobs(std::size_t count, std::size_t jobs, Job&& job) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    const std::size_t workers = std::min(jobs, count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) job(i);
        });
    for (auto& t : pool) t.join();
}

struct SweepCellResult {
    std::size_t cell = 0;
    std::vector<std::string> values;           // one per axis
    std::vector<std::filesystem::path> csvs;   // completed runs
    std::vector<std::string> errors;           // failed runs, with messages
    double mean_auc = 0.0;
    double se_auc = 0.0;
    bool ok = false;
};

struct SweepResult {
    std::vector<SweepCellResult> cells;
    std::size_t winner = 0; // index into cells; valid when any cell is ok
    std::filesystem::path summary_csv;
};

/// Rank sweep cells from their run CSV files: mean over runs of the area
/// under the per-task online-accuracy curve, higher is better. Reading the
/// files back (rather than trusting in-memory results) keeps the ranking a
/// pure function of the CSVs on disk.
inline void rank_cells_from_csvs(std::vector<SweepCellResult>& cells) {
    for (auto& cell : cells) {
        if (cell.csvs.empty()) {
            cell.ok = false;
            continue;
        }
        std::vector<double> aucs;
        for (const auto& path : cell.csvs) {
            const CsvTable t = read_csv(path);
            const std::size_t col = t.column_index("avg_online_accuracy");
            double auc = 0.0;
            for (const auto& row : t.rows) auc += row[col];
            aucs.push_back(auc);
        }
        double mean = 0.0;
        for (double a : aucs) mean += a;
        mean /= static_cast<double>(aucs.size());
        double var = 0.0;
        for (double a : aucs) var += (a - mean) * (a - mean);
        cell.mean_auc = mean;
        cell.se_auc = aucs.size() > 1 ? std::sqrt(var / static_cast<double>(aucs.size() - 1)) /
                                            std::sqrt(static_cast<double>(aucs.size()))
                                      : 0.0;
        cell.ok = true;
    }
}

/// Run the whole grid (cells x seeds, parallel across runs), rank by mean
/// online-accuracy AUC, and write a one-row-per-cell summary CSV.
inline SweepResult sweep(const SweepSpec& spec, const Dataset& data, std::size_t jobs,
                         const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::size_t n_cells = spec.cell_count();
    const std::size_t n_axes = spec.axes.size();

    std::vector<std::vector<std::size_t>> choices(n_cells);
    for (std::size_t c = 0; c < n_cells; ++c) {
        std::vector<std::size_t> choice(n_axes);
        std::size_t rem = c;
        for (std::size_t a = n_axes; a-- > 0;) {
            choice[a] = rem % spec.axes[a].values.size();
            rem /= spec.axes[a].values.size();
        }
        choices[c] = std::move(choice);
    }

    SweepResult result;
    result.cells.resize(n_cells);
    for (std::size_t c = 0; c < n_cells; ++c) {
        result.cells[c].cell = c;
        for (std::size_t a = 0; a < n_axes; ++a)
            result.cells[c].values.push_back(spec.axes[a].values[choices[c][a]]);
        result.cells[c].csvs.resize(spec.runs_per_cell);
        result.cells[c].errors.resize(spec.runs_per_cell);
    }

    const std::size_t total = n_cells * spec.runs_per_cell;
    parallel_for_jobs(total, jobs, [&](std::size_t i) {
        const std::size_t c = i / spec.runs_per_cell;
        const std::uint64_t seed = i % spec.runs_per_cell;
        try {
            const ExperimentConfig cfg = sweep_cell_config(spec, choices[c]);
            const std::string label = cfg.label() + "-c" + std::to_string(c);
            const RunOutput out = execute_run(cfg, data, seed, out_dir, label);
            result.cells[c].csvs[seed] = out.csv;
        } catch (const std::exception& e) {
            result.cells[c].errors[seed] = e.what();
        }
    });

    for (auto& cell : result.cells) {
        std::vector<std::filesystem::path> ok_csvs;
        std::vector<std::string> real_errors;
        for (std::size_t s = 0; s < spec.runs_per_cell; ++s) {
            if (!cell.errors[s].empty())
                real_errors.push_back("seed " + std::to_string(s) + ": " + cell.errors[s]);
            else if (!cell.csvs[s].empty())
                ok_csvs.push_back(cell.csvs[s]);
        }
        cell.csvs = std::move(ok_csvs);
        cell.errors = std::move(real_errors);
    }
    rank_cells_from_csvs(result.cells);

    bool any_ok = false;
    for (std::size_t c = 0; c < n_cells; ++c) {
        if (!result.cells[c].ok) continue;
        if (!any_ok || result.cells[c].mean_auc > result.cells[result.winner].mean_auc)
            result.winner = c;
        any_ok = true;
    }

    std::string summary;
    summary += "cell";
    for (const auto& axis : spec.axes) summary += "," + axis.key;
    summary += ",runs,failures,mean_auc,se_auc,winner\n";
    for (std::size_t c = 0; c < n_cells; ++c) {
        const auto& cell = result.cells[c];
        summary += std::to_string(c);
        for (const auto& v : cell.values) summary += "," + v;
        summary += "," + std::to_string(cell.csvs.size());
        summary += "," + std::to_string(cell.errors.size());
        summary += "," + (cell.ok ? format_double(cell.mean_auc) : std::string("nan"));
        summary += "," + (cell.ok ? format_double(cell.se_auc) : std::string("nan"));
        summary += (any_ok && c == result.winner) ? ",1\n" : ",0\n";
    }
    result.summary_csv = out_dir / "sweep-summary.csv";
    write_text_file(result.summary_csv, summary);
    return result;
}

} // namespace plastlab
