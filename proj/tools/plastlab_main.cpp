// Command-line harness: run single experiments, grid sweeps, chart results,
// and generate a synthetic IDX corpus for offline use.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plastlab/plastlab.hpp"

namespace {

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw plastlab::ConfigError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_run(const std::string& config_path, long long seed_override,
            const std::string& out_override) {
    using namespace plastlab;
    ExperimentConfig cfg = parse_config(read_text(config_path));
    if (seed_override >= 0) cfg.seeds = {static_cast<std::uint64_t>(seed_override)};
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (cfg.name.empty()) cfg.name = std::filesystem::path(config_path).stem().string();

    const Dataset data = load_config_dataset(cfg);
    std::printf("loaded %zu samples; %zu updates per task\n", data.size(),
                (data.size() + cfg.batch - 1) / cfg.batch);
    for (std::uint64_t seed : cfg.seeds) {
        const RunOutput out = execute_run(cfg, data, seed, cfg.out_dir, cfg.label());
        std::printf("seed %llu: mean online accuracy %.4f -> %s\n",
                    static_cast<unsigned long long>(seed),
                    out.auc / static_cast<double>(cfg.tasks), out.csv.string().c_str());
    }
    return 0;
}

int cmd_sweep(const std::string& spec_path, std::size_t jobs, const std::string& out_override) {
    using namespace plastlab;
    SweepSpec spec = parse_sweep(read_text(spec_path));
    if (!out_override.empty()) spec.base.out_dir = out_override;
    if (spec.base.name.empty())
        spec.base.name = std::filesystem::path(spec_path).stem().string();

    const Dataset data = load_config_dataset(spec.base);
    std::printf("sweep: %zu cells x %zu runs on %zu jobs\n", spec.cell_count(),
                spec.runs_per_cell, jobs);
    const SweepResult result = sweep(spec, data, jobs, spec.base.out_dir);

    bool any_ok = false;
    for (const auto& cell : result.cells) {
        std::string axes;
        for (std::size_t a = 0; a < spec.axes.size(); ++a)
            axes += spec.axes[a].key + "=" + cell.values[a] + " ";
        if (cell.ok) {
            std::printf("cell %zu: %smean_auc=%.3f se=%.3f (%zu runs, %zu failed)\n", cell.cell,
                        axes.c_str(), cell.mean_auc, cell.se_auc, cell.csvs.size(),
                        cell.errors.size());
            any_ok = true;
        } else {
            std::printf("cell %zu: %sFAILED (%zu failures)\n", cell.cell, axes.c_str(),
                        cell.errors.size());
        }
        for (const auto& err : cell.errors) std::printf("    %s\n", err.c_str());
    }
    if (!any_ok) {
        std::printf("sweep: every cell failed\n");
        return 1;
    }
    const auto& win = result.cells[result.winner];
    std::string axes;
    for (std::size_t a = 0; a < spec.axes.size(); ++a)
        axes += spec.axes[a].key + "=" + win.values[a] + " ";
    std::printf("winner: cell %zu %s(mean_auc=%.3f)\nsummary: %s\n", win.cell, axes.c_str(),
                win.mean_auc, result.summary_csv.string().c_str());
    return 0;
}

int cmd_plot(const std::vector<std::string>& csvs, const std::string& metric,
             const std::string& out) {
    std::vector<std::filesystem::path> paths(csvs.begin(), csvs.end());
    plastlab::emit_plots(paths, metric, out);
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int cmd_synth(const std::string& out_dir, std::size_t samples, std::uint64_t seed) {
    plastlab::SynthSpec spec;
    spec.samples = samples;
    spec.seed = seed;
    plastlab::write_synthetic_corpus(out_dir, spec);
    std::printf("wrote %zu synthetic samples under %s\n", samples, out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"continual-learning plasticity experiments on permuted image tasks"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    long long seed_override = -1;
    auto* run = app.add_subcommand("run", "execute one experiment config");
    run->add_option("config", config_path, "experiment config file")->required();
    run->add_option("--seed", seed_override, "override the config's seed list with one seed");
    run->add_option("--out", out_dir, "override the output directory");

    std::string sweep_path, sweep_out;
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    auto* sw = app.add_subcommand("sweep", "grid search over a sweep spec");
    sw->add_option("spec", sweep_path, "sweep spec file")->required();
    sw->add_option("--jobs", jobs, "parallel runs");
    sw->add_option("--out", sweep_out, "override the output directory");

    std::vector<std::string> csvs;
    std::string metric = "avg_online_accuracy", plot_out;
    auto* plot = app.add_subcommand("plot", "chart a metric from run CSVs");
    plot->add_option("csv", csvs, "run CSV files")->required()->expected(-1);
    plot->add_option("--metric", metric, "metric column to chart");
    plot->add_option("--out", plot_out, "output SVG file")->required();

    std::string synth_out = "data";
    std::size_t samples = 60000;
    std::uint64_t synth_seed = plastlab::SynthSpec{}.seed;
    auto* synth = app.add_subcommand("synth", "generate a synthetic IDX corpus");
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--samples", samples, "sample count");
    synth->add_option("--seed", synth_seed, "generator seed");

    CLI11_PARSE(app, argc, argv);
    try {
        if (run->parsed()) return cmd_run(config_path, seed_override, out_dir);
        if (sw->parsed()) return cmd_sweep(sweep_path, jobs, sweep_out);
        if (plot->parsed()) return cmd_plot(csvs, metric, plot_out);
        if (synth->parsed()) return cmd_synth(synth_out, samples, synth_seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
