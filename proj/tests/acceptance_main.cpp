// Acceptance suite: exercises the library's end-to-end guarantees, from
// gradient exactness up to the desk-scale continual-learning comparisons.
// Prints one PASS/FAIL line per criterion and exits nonzero on any failure.
//
// Experiment criteria (8-11) train on the IDX corpus under $PLASTLAB_DATA;
// when those files are absent a deterministic synthetic corpus is generated
// once and reused.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "plastlab/plastlab.hpp"
#include "support/builders.hpp"
#include "support/oracles.hpp"

using namespace plastlab;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
    std::printf("criterion %2d [%s] %s%s%s\n", id, name, pass ? "PASS" : "FAIL",
                detail.empty() ? "" : " — ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.5g", v);
    return buf;
}

// ---------------------------------------------------------------- 1
void criterion_gradient_exactness() {
    const LayerNormMode modes[] = {LayerNormMode::None, LayerNormMode::Standard,
                                   LayerNormMode::Reparameterized};
    Rng rng = make_rng(0xACC1);
    double worst = 0.0;
    int accepted = 0;
    for (std::uint64_t draw = 0; accepted < 20 && draw < 2000; ++draw) {
        NetworkArch arch;
        std::uniform_int_distribution<std::size_t> w(2, 16);
        std::uniform_int_distribution<int> depth(1, 3);
        arch.widths.push_back(w(rng));
        for (int d = depth(rng); d-- > 0;) arch.widths.push_back(w(rng));
        arch.widths.push_back(w(rng));
        arch.norm = modes[accepted % 3];
        Network net = init_network(arch, 0xBEEF + draw);
        const Matrix x = builders::random_matrix(6, arch.widths.front(), rng);
        const auto y = builders::random_labels(6, arch.widths.back(), rng);
        // Finite differences are only trustworthy away from the ReLU kink.
        if (!oracles::clear_of_relu_kinks(net, x)) continue;
        ++accepted;
        worst = std::max(worst, oracles::worst_gradient_error(net, x, y, 1e-5));
    }
    report(1, "gradient-exactness", accepted == 20 && worst < 1e-4,
           "worst relative error " + fmt(worst) + " over 20 networks (tolerance 1e-4)");
}

// ---------------------------------------------------------------- 2
void criterion_pruning_oracle() {
    Rng rng = make_rng(0xACC2);
    std::uniform_int_distribution<std::size_t> dim(1, 64);
    std::uniform_real_distribution<double> uval(0.0, 1.0);
    std::uniform_real_distribution<double> kval(0.05, 2.0);
    bool threshold_ok = true;
    for (int round = 0; round < 10000 && threshold_ok; ++round) {
        const std::size_t d = dim(rng);
        std::vector<double> u(d);
        for (auto& x : u) x = uval(rng);
        const double k = kval(rng);
        double mean = 0.0;
        for (double x : u) mean += x;
        mean /= static_cast<double>(d);
        std::vector<std::size_t> want;
        for (std::size_t i = 0; i < d; ++i)
            if (u[i] <= k * mean) want.push_back(i);
        threshold_ok = prune_indices(u, k, PruningKind::Threshold, rng) == want;
    }

    bool count_ok = true;
    const std::size_t d = 10;
    const double k = 0.25;
    std::vector<double> u(d);
    std::iota(u.begin(), u.end(), 1.0);
    double total = 0.0;
    const int trials = 100000;
    for (int t = 0; t < trials && count_ok; ++t) {
        const auto idx = prune_indices(u, k, PruningKind::Proportional, rng);
        count_ok = idx.size() == 2 || idx.size() == 3;
        total += static_cast<double>(idx.size());
    }
    const double mc_mean = total / trials;
    const bool mc_ok = std::abs(mc_mean - k * d) <= 0.01 * k * d;
    report(2, "pruning-oracle", threshold_ok && count_ok && mc_ok,
           "threshold==bruteforce over 1e4 vectors: " + std::string(threshold_ok ? "yes" : "no") +
               "; proportional count in {2,3}: " + (count_ok ? "yes" : "no") +
               "; Monte-Carlo mean " + fmt(mc_mean) + " vs 2.5");
}

// ---------------------------------------------------------------- 3
void criterion_reinit_distribution() {
    Rng rng = make_rng(0xACC3);
    const std::size_t n = 100000;
    bool ok = true;
    std::string detail;

    const double b = 0.35;
    const auto uni = reinit_values(n, InitSpec::uniform_symmetric(b), ReinitMethod::Resample, rng);
    double mean = 0.0;
    for (double x : uni) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : uni) var += (x - mean) * (x - mean);
    var /= n;
    ok = ok && std::abs(mean) <= 3.0 * b / std::sqrt(3.0 * n);
    ok = ok && std::abs(var - b * b / 3.0) <= 0.02 * (b * b / 3.0);
    detail += "uniform mean " + fmt(mean) + " var " + fmt(var) + " (want var " +
              fmt(b * b / 3.0) + ")";

    const auto nrm = reinit_values(n, InitSpec::normal(0.2, 0.05), ReinitMethod::Resample, rng);
    mean = 0.0;
    for (double x : nrm) mean += x;
    mean /= n;
    var = 0.0;
    for (double x : nrm) var += (x - mean) * (x - mean);
    var /= n;
    ok = ok && std::abs(mean - 0.2) <= 4.0 * 0.05 / std::sqrt(double(n));
    ok = ok && std::abs(var - 0.0025) <= 0.02 * 0.0025;

    const auto mu = reinit_values(7, InitSpec::uniform_symmetric(b), ReinitMethod::Mean, rng);
    const auto mn = reinit_values(7, InitSpec::normal(0.2, 0.05), ReinitMethod::Mean, rng);
    const auto mc = reinit_values(7, InitSpec::constant(-1.5), ReinitMethod::Mean, rng);
    ok = ok && mu == std::vector<double>(7, 0.0) && mn == std::vector<double>(7, 0.2) &&
         mc == std::vector<double>(7, -1.5);
    report(3, "reinit-distribution", ok, detail);
}

// ---------------------------------------------------------------- 4
void criterion_stable_rank() {
    Rng rng = make_rng(0xACC4);
    std::uniform_int_distribution<std::size_t> dim(1, 50);
    double worst = 0.0;
    for (int round = 0; round < 100; ++round) {
        const Matrix a = builders::random_matrix(dim(rng), dim(rng), rng);
        worst = std::max(worst, std::abs(stable_rank(a) - oracles::svd_stable_rank(a)));
    }
    const bool oracle_ok = worst < 1e-6;

    std::vector<double> row(9), col(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& x : row) x = u(rng);
    for (auto& x : col) x = u(rng);
    Matrix r1(13, 9);
    for (std::size_t i = 0; i < 13; ++i)
        for (std::size_t j = 0; j < 9; ++j) r1(i, j) = col[i] * row[j];
    const bool rank1_ok = std::abs(stable_rank(r1) - 1.0) < 1e-9;

    const Matrix a = builders::random_matrix(30, 20, rng);
    const double base = stable_rank(a);
    bool scale_ok = true;
    for (double c : {2.0, -0.25}) { // power-of-two scalings: exact
        Matrix scaled = a;
        for (auto& v : scaled.values()) v *= c;
        scale_ok = scale_ok && stable_rank(scaled) == base;
    }
    for (double c : {-3.7, 1e-4}) {
        Matrix scaled = a;
        for (auto& v : scaled.values()) v *= c;
        scale_ok = scale_ok && std::abs(stable_rank(scaled) - base) <= 1e-7 * base;
    }
    report(4, "stable-rank-oracle", oracle_ok && rank1_ok && scale_ok,
           "worst |power-iteration - svd| " + fmt(worst) + " over 100 matrices; rank-1 -> " +
               fmt(stable_rank(r1)) + "; scaling invariant: " + (scale_ok ? "yes" : "no"));
}

// ---------------------------------------------------------------- 5
void criterion_reparameterized_ln() {
    Rng rng = make_rng(0xACC5);
    bool ok = true;
    for (int round = 0; round < 10 && ok; ++round) {
        NetworkArch arch;
        arch.widths = {10, 8, 6, 4};
        arch.norm = LayerNormMode::Standard;
        Network std_net = init_network(arch, 0xC0DE + round);
        arch.norm = LayerNormMode::Reparameterized;
        Network rep_net = init_network(arch, 0xC0DE + round);
        const Matrix x = builders::random_matrix(9, 10, rng);
        ForwardCache ca, cb;
        forward(std_net, x, ca);
        forward(rep_net, x, cb);
        ok = ca.logits == cb.logits && ca.probs == cb.probs;
    }
    report(5, "reparameterized-ln-identity", ok,
           "gamma=0 reparameterized vs gamma=1 standard, bitwise over 10 random nets");
}

// ---------------------------------------------------------------- 6
void criterion_unit_reset_semantics() {
    Rng rng = make_rng(0xACC6);
    bool ok = true;
    for (LayerNormMode mode : {LayerNormMode::None, LayerNormMode::Standard}) {
        NetworkArch arch;
        arch.widths = {8, 7, 6, 5};
        arch.norm = mode;
        Network net = init_network(arch, 0xD00D);
        OptimizerState opt = OptimizerState::create(OptimKind::AdamW, net);

        // Silence one unit, then push it through the ReDo reset path.
        for (std::size_t j = 0; j < 8; ++j) net.hidden[0].dense.weights(3, j) = 0.0;
        net.hidden[0].dense.bias[3] = -2.0;
        const Matrix x = builders::random_matrix(6, 8, rng, 0.0, 1.0);
        ForwardCache cache;
        forward(net, x, cache);
        ReDoConfig cfg;
        cfg.rf = 1;
        cfg.rt = 1e-4;
        redo_step(net, cache, cfg, opt, 0, rng);

        for (std::size_t r = 0; r < net.hidden[1].dense.out_width(); ++r)
            ok = ok && net.hidden[1].dense.weights(r, 3) == 0.0;

        Network copy = net;
        for (std::size_t r = 0; r < copy.hidden[1].dense.out_width(); ++r)
            copy.hidden[1].dense.weights(r, 3) = 0.0;
        const Matrix probe = builders::random_matrix(11, 8, rng);
        ForwardCache ca, cb;
        forward(net, probe, ca);
        forward(copy, probe, cb);
        ok = ok && ca.probs == cb.probs && ca.logits == cb.logits;
    }
    report(6, "unit-reset-semantics", ok,
           "post-reset output equals the zero-outgoing copy, exactly");
}

// ---------------------------------------------------------------- 7
std::filesystem::path ensure_corpus() {
    std::filesystem::path dir = "acceptance-data";
    if (const char* env = std::getenv(kDataDirEnvVar); env && *env) dir = env;
    if (!std::filesystem::exists(dir / kTrainImagesName) ||
        !std::filesystem::exists(dir / kTrainLabelsName)) {
        std::fprintf(stderr, "[data] generating synthetic corpus under %s\n",
                     dir.string().c_str());
        write_synthetic_corpus(dir, SynthSpec{});
    }
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void criterion_run_determinism(const std::filesystem::path& data_dir) {
    const auto dir = std::filesystem::absolute("acceptance-determinism");
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    const std::string config_text = "[data]\ndir = " + data_dir.string() +
                                    "\nsubsample = 0.05\n"
                                    "[network]\nwidths = 784,16,10\n"
                                    "[algorithm]\nkind = swr\ntau = 32\nk = 0.001\n"
                                    "[run]\ntasks = 2\nbatch = 30\nprobe = 100\nname = det\n";
    const auto cfg_path = dir / "det.cfg";
    write_text_file(cfg_path, config_text);

    std::string how;
    std::string text_a, text_b;
    const char* cli = std::getenv("PLASTLAB_CLI");
    bool cli_ok = false;
    if (cli && *cli) {
        auto invoke = [&](const std::filesystem::path& out) {
            const std::string cmd = std::string(cli) + " run " + cfg_path.string() +
                                    " --seed 3 --out " + out.string() + " >/dev/null 2>&1";
            return std::system(cmd.c_str()) == 0;
        };
        cli_ok = invoke(dir / "a") && invoke(dir / "b");
        if (cli_ok) {
            text_a = slurp(dir / "a" / "det-s3.csv");
            text_b = slurp(dir / "b" / "det-s3.csv");
            how = "via two CLI invocations";
        }
    }
    if (!cli_ok) {
        const ExperimentConfig cfg = parse_config(config_text);
        const Dataset data = load_config_dataset(cfg);
        execute_run(cfg, data, 3, dir / "a", "det");
        execute_run(cfg, data, 3, dir / "b", "det");
        text_a = slurp(dir / "a" / "det-s3.csv");
        text_b = slurp(dir / "b" / "det-s3.csv");
        how = "via two in-process runs (CLI binary not provided)";
    }
    report(7, "run-determinism", !text_a.empty() && text_a == text_b,
           "byte-identical CSVs " + how);
}

// ---------------------------------------------------------------- 8-11
struct SettingStats {
    std::vector<double> early;      // per-seed mean accuracy, tasks 1-10
    std::vector<double> late;       // per-seed mean accuracy, tasks 191-200
    std::vector<double> dead_first; // per-seed dead fraction after task 1
    std::vector<double> dead_last;  // per-seed dead fraction after task 200

    double early_mean() const { return mean(early); }
    double late_mean() const { return mean(late); }
    double drop() const { return early_mean() - late_mean(); }
    double pooled_se() const { return std::sqrt(se(early) * se(early) + se(late) * se(late)); }

    static double mean(const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        return m / static_cast<double>(v.size());
    }
    static double se(const std::vector<double>& v) {
        if (v.size() < 2) return 0.0;
        const double m = mean(v);
        double var = 0.0;
        for (double x : v) var += (x - m) * (x - m);
        var /= static_cast<double>(v.size() - 1);
        return std::sqrt(var / static_cast<double>(v.size()));
    }
};

SettingStats collect(const std::vector<RunResult>& runs) {
    SettingStats s;
    for (const auto& r : runs) {
        double early = 0.0, late = 0.0;
        for (std::size_t t = 0; t < 10; ++t) early += r.records[t].avg_online_accuracy;
        for (std::size_t t = r.records.size() - 10; t < r.records.size(); ++t)
            late += r.records[t].avg_online_accuracy;
        s.early.push_back(early / 10.0);
        s.late.push_back(late / 10.0);
        s.dead_first.push_back(r.records.front().dead_unit_fraction);
        s.dead_last.push_back(r.records.back().dead_unit_fraction);
    }
    return s;
}

struct ExperimentBundle {
    SettingStats base, swr, cbp_ln, swr_ln;
};

ExperimentBundle run_experiments(const std::filesystem::path& data_dir) {
    const Dataset data = load_dataset(data_dir / kTrainImagesName, data_dir / kTrainLabelsName);

    auto small_net = [](LayerNormMode norm, double alpha) {
        ContinualSetup s;
        s.arch.widths = {784, 10, 10, 10, 10};
        s.arch.norm = norm;
        s.optim.alpha = alpha;
        s.tasks = 200;
        s.batch = 30;
        s.probe_size = 1500;
        return s;
    };
    auto with_swr = [](ContinualSetup s) {
        s.algorithm.kind = AlgorithmKind::SWR;
        s.algorithm.swr.tau = 2048;
        s.algorithm.swr.k = 1e-6;
        s.algorithm.swr.utility = UtilityKind::Gradient;
        s.algorithm.swr.pruning = PruningKind::Threshold;
        s.algorithm.swr.reinit = ReinitMethod::Resample;
        return s;
    };
    auto with_cbp = [](ContinualSetup s) {
        s.algorithm.kind = AlgorithmKind::CBP;
        s.algorithm.cbp.rr = 1e-5;
        s.algorithm.cbp.mt = 1;
        return s;
    };

    const std::vector<ContinualSetup> settings = {
        small_net(LayerNormMode::None, 0.05),
        with_swr(small_net(LayerNormMode::None, 0.05)),
        with_cbp(small_net(LayerNormMode::Standard, 0.1)),
        with_swr(small_net(LayerNormMode::Standard, 0.1)),
    };
    const char* names[] = {"base", "swr", "cbp+ln", "swr+ln"};
    const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

    std::vector<std::vector<RunResult>> results(settings.size());
    for (auto& r : results) r.resize(seeds.size());

    const std::size_t total = settings.size() * seeds.size();
    const std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    std::fprintf(stderr, "[experiments] %zu runs (K=200, 2000 updates/task) on %zu threads\n",
                 total, jobs);
    parallel_for_jobs(total, jobs, [&](std::size_t i) {
        const std::size_t setting = i / seeds.size();
        const std::size_t seed_ix = i % seeds.size();
        results[setting][seed_ix] = run_experiment(settings[setting], data, seeds[seed_ix]);
        std::fprintf(stderr, "[experiments] %s seed %llu done\n", names[setting],
                     static_cast<unsigned long long>(seeds[seed_ix]));
    });

    ExperimentBundle bundle;
    bundle.base = collect(results[0]);
    bundle.swr = collect(results[1]);
    bundle.cbp_ln = collect(results[2]);
    bundle.swr_ln = collect(results[3]);
    return bundle;
}

void criterion_loss_of_plasticity(const ExperimentBundle& b) {
    const double margin = b.base.drop();
    const double pooled = b.base.pooled_se();
    report(8, "base-loses-plasticity", margin > 2.0 * pooled,
           "early " + fmt(b.base.early_mean()) + " late " + fmt(b.base.late_mean()) + " drop " +
               fmt(margin) + " vs 2*SE " + fmt(2.0 * pooled));
}

void criterion_swr_maintains(const ExperimentBundle& b) {
    const double gap = std::abs(b.swr.late_mean() - b.swr.early_mean());
    const double pooled = b.swr.pooled_se();
    const bool flat = gap <= pooled;
    const bool above = b.swr.late_mean() > b.base.late_mean();
    report(9, "swr-maintains-plasticity", flat && above,
           "swr |late-early| " + fmt(gap) + " vs SE " + fmt(pooled) + "; swr late " +
               fmt(b.swr.late_mean()) + " vs base late " + fmt(b.base.late_mean()));
}

void criterion_ln_unit_reinit_pathology(const ExperimentBundle& b) {
    report(10, "layer-norm-hurts-unit-reinit", b.cbp_ln.drop() > b.swr_ln.drop(),
           "cbp+ln drop " + fmt(b.cbp_ln.drop()) + " vs swr+ln drop " + fmt(b.swr_ln.drop()));
}

void criterion_dead_units(const ExperimentBundle& b) {
    const double base_first = SettingStats::mean(b.base.dead_first);
    const double base_last = SettingStats::mean(b.base.dead_last);
    const double swr_last = SettingStats::mean(b.swr.dead_last);
    report(11, "dead-unit-correlate", base_last > base_first && swr_last < base_last,
           "base dead " + fmt(base_first) + " -> " + fmt(base_last) + "; swr final " +
               fmt(swr_last));
}

} // namespace

int main() {
    criterion_gradient_exactness();
    criterion_pruning_oracle();
    criterion_reinit_distribution();
    criterion_stable_rank();
    criterion_reparameterized_ln();
    criterion_unit_reset_semantics();

    const auto data_dir = ensure_corpus();
    criterion_run_determinism(data_dir);

    const ExperimentBundle bundle = run_experiments(data_dir);
    criterion_loss_of_plasticity(bundle);
    criterion_swr_maintains(bundle);
    criterion_ln_unit_reinit_pathology(bundle);
    criterion_dead_units(bundle);

    if (g_failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criteria failed\n", g_failures);
    return 1;
}
