#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "plastlab/continual.hpp"
#include "plastlab/csv.hpp"
#include "plastlab/errors.hpp"

namespace plastlab {

/// Full description of one experiment: data location, architecture,
/// optimizer, plasticity algorithm and run shape. Parsed from flat
/// `key = value` text with [section] headers.
struct ExperimentConfig {
    // [data]
    std::string data_dir = "data";
    std::string images_path; // explicit files win over data_dir
    std::string labels_path;
    double subsample = 1.0;

    // [network]
    std::vector<std::size_t> widths = {784, 100, 100, 100, 10};
    LayerNormMode layer_norm = LayerNormMode::None;

    // [optimizer]
    OptimConfig optim;

    // [algorithm]
    AlgorithmConfig algorithm;

    // [run]
    std::size_t tasks = 1000;
    std::size_t batch = 30;
    std::vector<std::uint64_t> seeds = {0};
    std::size_t probe = 1500;
    std::string out_dir = "results";
    std::string name;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

    std::string label() const;
    void validate() const;
    ContinualSetup setup() const {
        ContinualSetup s;
        s.arch.widths = widths;
        s.arch.norm = layer_norm;
        s.optim = optim;
        s.algorithm = algorithm;
        s.tasks = tasks;
        s.batch = batch;
        s.probe_size = probe;
        return s;
    }
};

struct SweepAxis {
    std::string key; // dotted path, e.g. "algorithm.tau"
    std::vector<std::string> values;
};

/// Grid sweep: the cross product of every axis applied over a base config,
/// each cell run for `runs_per_cell` seeds.
struct SweepSpec {
    ExperimentConfig base;
    std::vector<SweepAxis> axes;
    std::size_t runs_per_cell = 10;

    std::size_t cell_count() const {
        std::size_t n = 1;
        for (const auto& a : axes) n *= a.values.size();
        return n;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline double parse_double(std::string_view v, const std::string& path) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError(path + ": expected a number, got '" + std::string(v) + "'");
    return out;
}

inline long long parse_int(std::string_view v, const std::string& path) {
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError(path + ": expected an integer, got '" + std::string(v) + "'");
    return out;
}

inline std::size_t parse_size(std::string_view v, const std::string& path) {
    const long long out = parse_int(v, path);
    if (out < 0) throw ConfigError(path + ": must be non-negative");
    return static_cast<std::size_t>(out);
}

template <typename F>
inline void split_list(std::string_view v, F&& each) {
    std::size_t start = 0;
    while (start <= v.size()) {
        std::size_t end = v.find(',', start);
        if (end == std::string_view::npos) end = v.size();
        const auto item = trim(v.substr(start, end - start));
        if (!item.empty()) each(item);
        start = end + 1;
    }
}

inline LayerNormMode parse_layer_norm(std::string_view v, const std::string& path) {
    if (v == "none") return LayerNormMode::None;
    if (v == "standard") return LayerNormMode::Standard;
    if (v == "reparameterized") return LayerNormMode::Reparameterized;
    throw ConfigError(path + ": expected none|standard|reparameterized, got '" + std::string(v) +
                      "'");
}

inline OptimKind parse_optim_kind(std::string_view v, const std::string& path) {
    if (v == "sgd") return OptimKind::Sgd;
    if (v == "sgdw") return OptimKind::SgdwMomentum;
    if (v == "adamw") return OptimKind::AdamW;
    throw ConfigError(path + ": expected sgd|sgdw|adamw, got '" + std::string(v) + "'");
}

inline AlgorithmKind parse_algorithm_kind(std::string_view v, const std::string& path) {
    if (v == "base") return AlgorithmKind::Base;
    if (v == "l2") return AlgorithmKind::L2;
    if (v == "shrink_perturb") return AlgorithmKind::ShrinkPerturb;
    if (v == "cbp") return AlgorithmKind::CBP;
    if (v == "redo") return AlgorithmKind::ReDo;
    if (v == "swr") return AlgorithmKind::SWR;
    throw ConfigError(path + ": expected base|l2|shrink_perturb|cbp|redo|swr, got '" +
                      std::string(v) + "'");
}

inline const char* layer_norm_name(LayerNormMode m) {
    switch (m) {
    case LayerNormMode::None: return "none";
    case LayerNormMode::Standard: return "standard";
    case LayerNormMode::Reparameterized: return "reparameterized";
    }
    return "none";
}

inline const char* optim_kind_name(OptimKind k) {
    switch (k) {
    case OptimKind::Sgd: return "sgd";
    case OptimKind::SgdwMomentum: return "sgdw";
    case OptimKind::AdamW: return "adamw";
    }
    return "sgd";
}

inline const char* algorithm_kind_name(AlgorithmKind k) {
    switch (k) {
    case AlgorithmKind::Base: return "base";
    case AlgorithmKind::L2: return "l2";
    case AlgorithmKind::ShrinkPerturb: return "shrink_perturb";
    case AlgorithmKind::CBP: return "cbp";
    case AlgorithmKind::ReDo: return "redo";
    case AlgorithmKind::SWR: return "swr";
    }
    return "base";
}

} // namespace detail

/// Assign one `section.key` field from its text form; the single entry point
/// used by both the config parser and sweep-cell overrides.
inline void set_config_field(ExperimentConfig& cfg, const std::string& section,
                             const std::string& key, std::string_view value) {
    const std::string path = section + "." + key;
    using namespace detail;
    if (section == "data") {
        if (key == "dir") cfg.data_dir = std::string(value);
        else if (key == "images") cfg.images_path = std::string(value);
        else if (key == "labels") cfg.labels_path = std::string(value);
        else if (key == "subsample") cfg.subsample = parse_double(value, path);
        else throw ConfigError(path + ": unknown key");
    } else if (section == "network") {
        if (key == "widths") {
            std::vector<std::size_t> widths;
            split_list(value, [&](std::string_view item) {
                widths.push_back(parse_size(item, path));
            });
            cfg.widths = std::move(widths);
        } else if (key == "layer_norm") {
            cfg.layer_norm = parse_layer_norm(value, path);
        } else {
            throw ConfigError(path + ": unknown key");
        }
    } else if (section == "optimizer") {
        if (key == "kind") cfg.optim.kind = parse_optim_kind(value, path);
        else if (key == "alpha") cfg.optim.alpha = parse_double(value, path);
        else if (key == "momentum") cfg.optim.momentum = parse_double(value, path);
        else if (key == "beta1") cfg.optim.beta1 = parse_double(value, path);
        else if (key == "beta2") cfg.optim.beta2 = parse_double(value, path);
        else if (key == "adam_epsilon") cfg.optim.adam_epsilon = parse_double(value, path);
        else if (key == "l2_lambda") cfg.optim.l2_lambda = parse_double(value, path);
        else throw ConfigError(path + ": unknown key");
    } else if (section == "algorithm") {
        auto& a = cfg.algorithm;
        if (key == "kind") a.kind = parse_algorithm_kind(value, path);
        else if (key == "tau") a.swr.tau = parse_int(value, path);
        else if (key == "k") a.swr.k = parse_double(value, path);
        else if (key == "utility") {
            if (value == "magnitude") a.swr.utility = UtilityKind::Magnitude;
            else if (value == "gradient") a.swr.utility = UtilityKind::Gradient;
            else throw ConfigError(path + ": expected magnitude|gradient");
        } else if (key == "pruning") {
            if (value == "proportional") a.swr.pruning = PruningKind::Proportional;
            else if (value == "threshold") a.swr.pruning = PruningKind::Threshold;
            else throw ConfigError(path + ": expected proportional|threshold");
        } else if (key == "reinit") {
            if (value == "resample") a.swr.reinit = ReinitMethod::Resample;
            else if (value == "mean") a.swr.reinit = ReinitMethod::Mean;
            else throw ConfigError(path + ": expected resample|mean");
        } else if (key == "rr") a.cbp.rr = parse_double(value, path);
        else if (key == "mt") a.cbp.mt = parse_int(value, path);
        else if (key == "rf") a.redo.rf = parse_int(value, path);
        else if (key == "rt") a.redo.rt = parse_double(value, path);
        else if (key == "sigma2") a.shrink_perturb.sigma2 = parse_double(value, path);
        else throw ConfigError(path + ": unknown key");
    } else if (section == "run") {
        if (key == "tasks") cfg.tasks = parse_size(value, path);
        else if (key == "batch") cfg.batch = parse_size(value, path);
        else if (key == "probe") cfg.probe = parse_size(value, path);
        else if (key == "out") cfg.out_dir = std::string(value);
        else if (key == "name") cfg.name = std::string(value);
        else if (key == "seeds") {
            std::vector<std::uint64_t> seeds;
            split_list(value, [&](std::string_view item) {
                seeds.push_back(static_cast<std::uint64_t>(parse_int(item, path)));
            });
            cfg.seeds = std::move(seeds);
        } else {
            throw ConfigError(path + ": unknown key");
        }
    } else {
        throw ConfigError("[" + section + "]: unknown section");
    }
}

inline std::string ExperimentConfig::label() const {
    return name.empty() ? detail::algorithm_kind_name(algorithm.kind) : name;
}

inline void ExperimentConfig::validate() const {
    if (widths.size() < 2)
        throw ConfigError("network.widths: need at least input and output widths");
    for (std::size_t w : widths)
        if (w < 1) throw ConfigError("network.widths: widths must be >= 1");
    if (!(subsample > 0.0 && subsample <= 1.0))
        throw ConfigError("data.subsample: must be in (0,1]");
    optim.validate();
    algorithm.validate();
    switch (algorithm.kind) {
    case AlgorithmKind::Base:
        if (optim.l2_lambda != 0.0)
            throw ConfigError("algorithm.kind: base system requires optimizer.l2_lambda = 0");
        break;
    case AlgorithmKind::L2:
        if (!(optim.l2_lambda > 0.0))
            throw ConfigError("optimizer.l2_lambda: must be > 0 when algorithm.kind = l2");
        break;
    case AlgorithmKind::ShrinkPerturb:
        if (!(optim.l2_lambda > 0.0))
            throw ConfigError(
                "optimizer.l2_lambda: must be > 0 when algorithm.kind = shrink_perturb "
                "(the shrink half of the method)");
        break;
    default: break;
    }
    if (tasks < 1) throw ConfigError("run.tasks: must be >= 1");
    if (batch < 1) throw ConfigError("run.batch: must be >= 1");
    if (probe < 1) throw ConfigError("run.probe: must be >= 1");
    if (seeds.empty()) throw ConfigError("run.seeds: need at least one seed");
}

namespace detail {

struct ConfigLine {
    std::string section;
    std::string key;
    std::string value;
};

inline std::vector<ConfigLine> parse_lines(std::string_view text) {
    std::vector<ConfigLine> out;
    std::string section;
    std::size_t pos = 0, lineno = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        ++lineno;
        const auto line = trim(text.substr(pos, end - pos));
        pos = end + 1;
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (section.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": key before any [section]");
        out.push_back({section, std::string(key), std::string(value)});
    }
    return out;
}

} // namespace detail

/// Parse and validate an experiment config; unknown keys are rejected,
/// missing keys keep their documented defaults.
inline ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    for (const auto& line : detail::parse_lines(text))
        set_config_field(cfg, line.section, line.key, line.value);
    cfg.validate();
    return cfg;
}

/// Canonical full-echo form; parse(serialize(c)) reproduces c exactly.
inline std::string serialize_config(const ExperimentConfig& cfg) {
    std::string out;
    auto kv = [&](const char* key, const std::string& value) {
        out += key;
        out += " = ";
        out += value;
        out += '\n';
    };
    out += "[data]\n";
    kv("dir", cfg.data_dir);
    if (!cfg.images_path.empty()) kv("images", cfg.images_path);
    if (!cfg.labels_path.empty()) kv("labels", cfg.labels_path);
    kv("subsample", format_double(cfg.subsample));
    out += "\n[network]\n";
    std::string widths;
    for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
        if (i) widths += ',';
        widths += std::to_string(cfg.widths[i]);
    }
    kv("widths", widths);
    kv("layer_norm", detail::layer_norm_name(cfg.layer_norm));
    out += "\n[optimizer]\n";
    kv("kind", detail::optim_kind_name(cfg.optim.kind));
    kv("alpha", format_double(cfg.optim.alpha));
    kv("momentum", format_double(cfg.optim.momentum));
    kv("beta1", format_double(cfg.optim.beta1));
    kv("beta2", format_double(cfg.optim.beta2));
    kv("adam_epsilon", format_double(cfg.optim.adam_epsilon));
    kv("l2_lambda", format_double(cfg.optim.l2_lambda));
    out += "\n[algorithm]\n";
    kv("kind", detail::algorithm_kind_name(cfg.algorithm.kind));
    kv("tau", std::to_string(cfg.algorithm.swr.tau));
    kv("k", format_double(cfg.algorithm.swr.k));
    kv("utility", cfg.algorithm.swr.utility == UtilityKind::Magnitude ? "magnitude" : "gradient");
    kv("pruning",
       cfg.algorithm.swr.pruning == PruningKind::Proportional ? "proportional" : "threshold");
    kv("reinit", cfg.algorithm.swr.reinit == ReinitMethod::Resample ? "resample" : "mean");
    kv("rr", format_double(cfg.algorithm.cbp.rr));
    kv("mt", std::to_string(cfg.algorithm.cbp.mt));
    kv("rf", std::to_string(cfg.algorithm.redo.rf));
    kv("rt", format_double(cfg.algorithm.redo.rt));
    kv("sigma2", format_double(cfg.algorithm.shrink_perturb.sigma2));
    out += "\n[run]\n";
    kv("tasks", std::to_string(cfg.tasks));
    kv("batch", std::to_string(cfg.batch));
    std::string seeds;
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
        if (i) seeds += ',';
        seeds += std::to_string(cfg.seeds[i]);
    }
    kv("seeds", seeds);
    kv("probe", std::to_string(cfg.probe));
    kv("out", cfg.out_dir);
    if (!cfg.name.empty()) kv("name", cfg.name);
    return out;
}

/// Parse a sweep spec: an ordinary config plus a [sweep] section whose keys
/// are dotted config paths with comma-separated value lists.
inline SweepSpec parse_sweep(std::string_view text) {
    SweepSpec spec;
    std::vector<detail::ConfigLine> plain;
    for (const auto& line : detail::parse_lines(text)) {
        if (line.section != "sweep") {
            plain.push_back(line);
            continue;
        }
        if (line.key == "runs") {
            spec.runs_per_cell = detail::parse_size(line.value, "sweep.runs");
            if (spec.runs_per_cell < 1) throw ConfigError("sweep.runs: must be >= 1");
            continue;
        }
        SweepAxis axis;
        axis.key = line.key;
        if (axis.key.find('.') == std::string::npos)
            throw ConfigError("sweep." + axis.key + ": expected a dotted config path");
        detail::split_list(line.value, [&](std::string_view item) {
            axis.values.emplace_back(item);
        });
        if (axis.values.empty())
            throw ConfigError("sweep." + axis.key + ": empty value list");
        spec.axes.push_back(std::move(axis));
    }
    for (const auto& line : plain) set_config_field(spec.base, line.section, line.key, line.value);
    spec.base.validate();
    return spec;
}

/// Config for one sweep cell: the base with each axis set to the chosen value.
inline ExperimentConfig sweep_cell_config(const SweepSpec& spec,
                                          const std::vector<std::size_t>& choice) {
    ExperimentConfig cfg = spec.base;
    for (std::size_t a = 0; a < spec.axes.size(); ++a) {
        const auto& axis = spec.axes[a];
        const std::size_t dot = axis.key.find('.');
        set_config_field(cfg, axis.key.substr(0, dot), axis.key.substr(dot + 1),
                         axis.values[choice[a]]);
    }
    cfg.validate();
    return cfg;
}

} // namespace plastlab
