#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "plastlab/dataio.hpp"
#include "plastlab/metrics.hpp"
#include "plastlab/network.hpp"
#include "plastlab/optim.hpp"
#include "plastlab/reinit.hpp"
#include "plastlab/task_stream.hpp"

namespace plastlab {

enum class AlgorithmKind { Base, L2, ShrinkPerturb, CBP, ReDo, SWR };

struct AlgorithmConfig {
    AlgorithmKind kind = AlgorithmKind::Base;
    SWRConfig swr;
    CBPConfig cbp;
    ReDoConfig redo;
    ShrinkPerturbConfig shrink_perturb;

    friend bool operator==(const AlgorithmConfig&, const AlgorithmConfig&) = default;

    void validate() const {
        switch (kind) {
        case AlgorithmKind::SWR: swr.validate(); break;
        case AlgorithmKind::CBP: cbp.validate(); break;
        case AlgorithmKind::ReDo: redo.validate(); break;
        case AlgorithmKind::ShrinkPerturb: shrink_perturb.validate(); break;
        default: break;
        }
    }
};

struct ContinualSetup {
    NetworkArch arch;
    OptimConfig optim;
    AlgorithmConfig algorithm;
    std::size_t tasks = 1000;
    std::size_t batch = 30;
    std::size_t probe_size = 1500;
};

struct RunResult {
    std::vector<MetricsRecord> records;
    Network net;
    ContinualSetup setup; // echo of what produced this result
    std::uint64_t seed = 0;
};

/// Mutable per-run state shared by the per-task loop: the algorithm's own
/// state, its RNG stream, and the global update counter that reinitialization
/// triggers are tested against.
struct AlgoRuntime {
    CBPState cbp_state;
    Rng rng;
    long long step = 0;

    static AlgoRuntime create(const Network& net, std::uint64_t seed) {
        AlgoRuntime rt;
        rt.cbp_state = CBPState::create(net);
        rt.rng = make_rng(seed, streams::reinit);
        return rt;
    }
};

namespace detail {

inline double batch_accuracy(const Matrix& probs, std::span<const std::uint8_t> labels) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const double* p = probs.data() + i * probs.cols();
        std::size_t best = 0;
        for (std::size_t j = 1; j < probs.cols(); ++j)
            if (p[j] > p[best]) best = j;
        if (best == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(probs.rows());
}

inline void apply_algorithm(Network& net, const AlgorithmConfig& algo, const Workspace& ws,
                            const Gradients& grads, OptimizerState& opt, AlgoRuntime& rt) {
    switch (algo.kind) {
    case AlgorithmKind::Base:
    case AlgorithmKind::L2: break;
    case AlgorithmKind::ShrinkPerturb:
        shrink_perturb_step(net, algo.shrink_perturb, rt.rng);
        break;
    case AlgorithmKind::CBP:
        cbp_step(net, ws.cache, algo.cbp, rt.cbp_state, opt, rt.rng);
        break;
    case AlgorithmKind::ReDo: redo_step(net, ws.cache, algo.redo, opt, rt.step, rt.rng); break;
    case AlgorithmKind::SWR: swr_step(net, grads, algo.swr, opt, rt.step, rt.rng); break;
    }
}

} // namespace detail

/// Train one task: a single pass over the permuted dataset in mini-batches,
/// measuring online accuracy on each batch before the update that consumes
/// it. End-of-task measurements probe with the next task's permutation
/// already applied, before any training on it.
inline MetricsRecord run_task(Network& net, const OptimConfig& optim, OptimizerState& opt,
                              const AlgorithmConfig& algo, AlgoRuntime& rt,
                              const TaskStream& stream, std::size_t task, const Matrix& probe,
                              Workspace& ws, Gradients& grads) {
    const auto order = stream.sample_order(task);
    const auto perm = stream.permutation(task);
    const std::size_t updates = stream.updates_per_task();

    MetricsRecord rec;
    rec.task = task;
    GradMagnitudeAccumulator grad_mag;
    Matrix batch;
    std::vector<std::uint8_t> labels;
    double acc_sum = 0.0;
    for (std::size_t b = 0; b < updates; ++b) {
        stream.fill_batch(order, perm, b, batch, labels);
        const double loss = loss_and_grad(net, batch, labels, ws, grads);
        if (!std::isfinite(loss))
            throw NumericError("loss became non-finite", task);
        acc_sum += detail::batch_accuracy(ws.cache.probs, labels);
        grad_mag.add(grads);
        optimizer_step(net, grads, optim, opt);
        detail::apply_algorithm(net, algo, ws, grads, opt, rt);
        rt.step += 1;
    }
    rec.avg_online_accuracy = acc_sum / static_cast<double>(updates);
    rec.avg_gradient_magnitude = grad_mag.mean();

    // Correlates at the task boundary: apply the next task's permutation to
    // the probe, measure before training resumes.
    Matrix permuted_probe;
    permute_columns(probe, stream.permutation(task + 1), permuted_probe);
    rec.dead_unit_fraction = dead_unit_fraction(net, permuted_probe);
    const StableRankResult sr = stable_rank_checked(last_hidden_features(net, permuted_probe));
    rec.stable_rank = sr.value;
    rec.avg_weight_magnitude = avg_param_magnitude(net);

    for (const auto& tv : net.tensors())
        if (!all_finite(std::span<const double>(tv.data, tv.size)))
            throw NumericError("parameters became non-finite", task);
    return rec;
}

/// Draw the probe rows used for the dead-unit and stable-rank correlates:
/// a fixed, seeded sample of the base (unpermuted) dataset.
inline Matrix draw_probe(const Dataset& data, std::size_t probe_size, std::uint64_t seed) {
    const std::size_t n = data.size();
    const std::size_t rows = std::min(probe_size, n);
    std::vector<std::uint32_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0u);
    Rng rng = make_rng(seed, streams::probe);
    std::shuffle(idx.begin(), idx.end(), rng);
    Matrix probe(rows, data.images.cols());
    for (std::size_t r = 0; r < rows; ++r) {
        const auto src = data.images.row(idx[r]);
        std::copy(src.begin(), src.end(), probe.row(r).begin());
    }
    return probe;
}

/// Full continual run: initialize, then train across `tasks` permutations,
/// collecting one metrics record per task.
inline RunResult run_experiment(const ContinualSetup& setup, const Dataset& data,
                                std::uint64_t seed) {
    setup.optim.validate();
    setup.algorithm.validate();
    if (setup.tasks == 0) throw ConfigError("run.tasks: must be >= 1");

    RunResult result;
    result.seed = seed;
    result.setup = setup;
    result.net = init_network(setup.arch, seed);
    OptimizerState opt = OptimizerState::create(setup.optim.kind, result.net);
    AlgoRuntime rt = AlgoRuntime::create(result.net, seed);
    TaskStream stream(data, seed, setup.tasks, setup.batch);
    const Matrix probe = draw_probe(data, setup.probe_size, seed);

    Workspace ws;
    Gradients grads;
    result.records.reserve(setup.tasks);
    for (std::size_t k = 0; k < setup.tasks; ++k)
        result.records.push_back(run_task(result.net, setup.optim, opt, setup.algorithm, rt,
                                          stream, k, probe, ws, grads));
    return result;
}

} // namespace plastlab
