#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "plastlab/errors.hpp"
#include "plastlab/network.hpp"
#include "plastlab/optim.hpp"
#include "plastlab/rng.hpp"

namespace plastlab {

enum class UtilityKind { Magnitude, Gradient };
enum class PruningKind { Proportional, Threshold };
enum class ReinitMethod { Resample, Mean };

/// Selective weight reinitialization: every tau updates, rank the weights of
/// each tensor by utility and reinitialize the lowest-ranked ones.
struct SWRConfig {
    long long tau = 2048;            // reinitialization frequency, in update steps
    double k = 1e-5;                 // reinitialization factor
    UtilityKind utility = UtilityKind::Gradient;
    PruningKind pruning = PruningKind::Threshold;
    ReinitMethod reinit = ReinitMethod::Resample;
    std::optional<std::vector<std::size_t>> scope; // tensor ids; all when unset

    friend bool operator==(const SWRConfig&, const SWRConfig&) = default;

    void validate() const {
        if (tau < 1) throw ConfigError("swr.tau: must be a positive integer");
        if (pruning == PruningKind::Proportional) {
            if (!(k > 0.0 && k < 1.0))
                throw ConfigError("swr.k: proportional pruning requires k in (0,1)");
        } else if (!(k > 0.0)) {
            throw ConfigError("swr.k: threshold pruning requires k > 0");
        }
    }
};

/// Continual backpropagation: reinitialize the lowest-utility mature hidden
/// units at a fixed replacement rate.
struct CBPConfig {
    double rr = 1e-4;   // replacement rate
    long long mt = 500; // maturity threshold, in update steps

    friend bool operator==(const CBPConfig&, const CBPConfig&) = default;

    void validate() const {
        if (!(rr >= 0.0 && rr <= 1.0)) throw ConfigError("cbp.rr: must be in [0,1]");
        if (mt < 1) throw ConfigError("cbp.mt: must be a positive integer");
    }
};

struct CBPState {
    std::vector<std::vector<long long>> ages; // per hidden stage, per unit
    std::vector<double> accumulator;          // fractional replacements per stage

    static CBPState create(const Network& net) {
        CBPState st;
        for (const auto& stage : net.hidden) {
            st.ages.emplace_back(stage.dense.out_width(), 0);
            st.accumulator.push_back(0.0);
        }
        return st;
    }
};

/// ReDo: every rf updates, reinitialize hidden units whose normalized activity
/// score falls at or below rt.
struct ReDoConfig {
    long long rf = 16; // reinitialization frequency
    double rt = 1e-4;  // dormancy threshold

    friend bool operator==(const ReDoConfig&, const ReDoConfig&) = default;

    void validate() const {
        if (rf < 1) throw ConfigError("redo.rf: must be a positive integer");
        if (!(rt >= 0.0)) throw ConfigError("redo.rt: must be >= 0");
    }
};

/// Gaussian parameter noise added after every update; the shrink half of
/// shrink-and-perturb comes from the optimizer's L2 term.
struct ShrinkPerturbConfig {
    double sigma2 = 1e-7; // noise variance

    friend bool operator==(const ShrinkPerturbConfig&, const ShrinkPerturbConfig&) = default;

    void validate() const {
        if (!(sigma2 >= 0.0)) throw ConfigError("shrink_perturb.sigma2: must be >= 0");
    }
};

/// Magnitude utility |w| or gradient utility |w * g|, elementwise. The
/// gradient form is a first-order estimate of the loss change from zeroing
/// the weight.
inline std::vector<double> compute_utility(std::span<const double> weights,
                                           std::span<const double> grads, UtilityKind kind) {
    if (kind == UtilityKind::Gradient && grads.size() != weights.size())
        throw ShapeError("compute_utility: gradient size mismatch (" +
                         std::to_string(grads.size()) + " vs " + std::to_string(weights.size()) +
                         ")");
    std::vector<double> u(weights.size());
    if (kind == UtilityKind::Magnitude) {
        for (std::size_t i = 0; i < weights.size(); ++i) u[i] = std::abs(weights[i]);
    } else {
        for (std::size_t i = 0; i < weights.size(); ++i) u[i] = std::abs(weights[i] * grads[i]);
    }
    return u;
}

/// Proportional pruning keeps the expected count at k*d by drawing the
/// fractional part from a Bernoulli; ties break toward the lower index
/// (stable sort). Threshold pruning takes every index with utility at or
/// below k times the tensor's mean utility.
inline std::vector<std::size_t> prune_indices(std::span<const double> utilities, double k,
                                              PruningKind mode, Rng& rng) {
    const std::size_t d = utilities.size();
    if (d == 0) throw InputError("prune_indices: empty utility vector");
    std::vector<std::size_t> out;
    if (mode == PruningKind::Proportional) {
        if (!(k > 0.0 && k < 1.0))
            throw ConfigError("prune_indices: proportional pruning requires k in (0,1)");
        const double kd = k * static_cast<double>(d);
        std::size_t count = static_cast<std::size_t>(kd);
        const double frac = kd - static_cast<double>(count);
        if (frac > 0.0 && std::bernoulli_distribution(frac)(rng)) ++count;
        std::vector<std::size_t> order(d);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return utilities[a] < utilities[b]; });
        out.assign(order.begin(), order.begin() + count);
    } else {
        if (!(k > 0.0)) throw ConfigError("prune_indices: threshold pruning requires k > 0");
        double mean = 0.0;
        for (double u : utilities) mean += u;
        mean /= static_cast<double>(d);
        const double threshold = k * mean;
        for (std::size_t i = 0; i < d; ++i)
            if (utilities[i] <= threshold) out.push_back(i);
    }
    return out;
}

/// Fresh values for reinitialized parameters: i.i.d. draws from the original
/// init distribution, or its mean repeated.
inline std::vector<double> reinit_values(std::size_t count, const InitSpec& spec,
                                         ReinitMethod method, Rng& rng) {
    std::vector<double> out(count);
    if (method == ReinitMethod::Mean) {
        std::fill(out.begin(), out.end(), spec.mean());
    } else {
        for (double& x : out) x = spec.sample(rng);
    }
    return out;
}

/// One selective-weight-reinitialization step. No-op unless (step+1) is a
/// multiple of tau; otherwise prunes and rewrites the lowest-utility entries
/// of every tensor in scope and zeroes their optimizer state.
inline void swr_step(Network& net, const Gradients& grads, const SWRConfig& cfg,
                     OptimizerState& opt, long long step, Rng& rng) {
    if ((step + 1) % cfg.tau != 0) return;
    auto views = net.tensors();
    std::vector<std::size_t> all;
    if (!cfg.scope) {
        all.resize(views.size());
        std::iota(all.begin(), all.end(), 0);
    }
    const std::vector<std::size_t>& scope = cfg.scope ? *cfg.scope : all;
    for (std::size_t ti : scope) {
        if (ti >= views.size())
            throw ConfigError("swr.scope: tensor id " + std::to_string(ti) + " out of range");
        TensorView& tv = views[ti];
        const auto u = compute_utility({tv.data, tv.size}, grads[ti], cfg.utility);
        const auto idx = prune_indices(u, cfg.k, cfg.pruning, rng);
        if (idx.empty()) continue;
        const auto fresh = reinit_values(idx.size(), *tv.init, cfg.reinit, rng);
        for (std::size_t i = 0; i < idx.size(); ++i) tv.data[idx[i]] = fresh[i];
        reset_state_at(opt, ti, idx);
    }
}

/// Zero one unit's outgoing weights (the next layer's column) and their
/// optimizer state.
inline void zero_outgoing_weights(Network& net, std::size_t stage, std::size_t unit,
                                  OptimizerState& opt) {
    DenseLayer& next =
        stage + 1 < net.hidden.size() ? net.hidden[stage + 1].dense : net.output;
    std::vector<std::size_t> out_elems(next.out_width());
    for (std::size_t r = 0; r < next.out_width(); ++r) {
        next.weights(r, unit) = 0.0;
        out_elems[r] = r * next.in_width() + unit;
    }
    reset_state_at(opt, net.weight_tensor_index(stage + 1), out_elems);
}

/// Reinitialize one hidden unit: resample its incoming weights from their
/// init spec, zero its bias and outgoing weights, and clear optimizer state
/// for all touched elements.
inline void reset_hidden_unit(Network& net, std::size_t stage, std::size_t unit,
                              OptimizerState& opt, Rng& rng) {
    if (stage >= net.hidden.size())
        throw ShapeError("reset_hidden_unit: stage " + std::to_string(stage) + " out of range");
    HiddenStage& st = net.hidden[stage];
    if (unit >= st.dense.out_width())
        throw ShapeError("reset_hidden_unit: unit " + std::to_string(unit) + " out of range");

    const std::size_t in_w = st.dense.in_width();
    std::vector<std::size_t> in_elems(in_w);
    for (std::size_t j = 0; j < in_w; ++j) {
        st.dense.weights(unit, j) = st.dense.weight_init.sample(rng);
        in_elems[j] = unit * in_w + j;
    }
    st.dense.bias[unit] = 0.0;
    reset_state_at(opt, net.weight_tensor_index(stage), in_elems);
    reset_state_at(opt, net.bias_tensor_index(stage), std::vector<std::size_t>{unit});
    zero_outgoing_weights(net, stage, unit, opt);
}

namespace detail {

/// Mean absolute activation per unit over the batch, from the cached ReLU
/// outputs of one hidden stage.
inline std::vector<double> mean_abs_activation(const Matrix& post) {
    std::vector<double> out(post.cols(), 0.0);
    for (std::size_t i = 0; i < post.rows(); ++i) {
        const double* a = post.data() + i * post.cols();
        for (std::size_t j = 0; j < post.cols(); ++j) out[j] += std::abs(a[j]);
    }
    const double inv_m = 1.0 / static_cast<double>(post.rows());
    for (double& x : out) x *= inv_m;
    return out;
}

} // namespace detail

/// One continual-backpropagation step: age every hidden unit, accrue
/// fractional replacements at rate rr over the mature units, and replace the
/// lowest-contribution mature unit each time the accumulator crosses 1.
inline void cbp_step(Network& net, const ForwardCache& cache, const CBPConfig& cfg,
                     CBPState& state, OptimizerState& opt, Rng& rng) {
    if (state.ages.size() != net.hidden.size())
        throw ShapeError("cbp_step: state does not match network layout");
    if (cache.post.size() != net.hidden.size())
        throw ShapeError("cbp_step: cache does not match network layout");
    std::vector<std::pair<std::size_t, std::size_t>> replaced;
    for (std::size_t s = 0; s < net.hidden.size(); ++s) {
        auto& ages = state.ages[s];
        for (auto& a : ages) a += 1;
        std::vector<std::size_t> eligible;
        for (std::size_t i = 0; i < ages.size(); ++i)
            if (ages[i] > cfg.mt) eligible.push_back(i);
        state.accumulator[s] += cfg.rr * static_cast<double>(eligible.size());
        if (state.accumulator[s] < 1.0 || eligible.empty()) continue;

        // Contribution utility: mean |activation| times total outgoing weight.
        const auto act = detail::mean_abs_activation(cache.post[s]);
        const DenseLayer& next =
            s + 1 < net.hidden.size() ? net.hidden[s + 1].dense : net.output;
        std::vector<double> util(ages.size(), 0.0);
        for (std::size_t i = 0; i < ages.size(); ++i) {
            double wsum = 0.0;
            for (std::size_t r = 0; r < next.out_width(); ++r)
                wsum += std::abs(next.weights(r, i));
            util[i] = act[i] * wsum;
        }
        while (state.accumulator[s] >= 1.0 && !eligible.empty()) {
            std::size_t best = 0;
            for (std::size_t e = 1; e < eligible.size(); ++e)
                if (util[eligible[e]] < util[eligible[best]]) best = e;
            const std::size_t unit = eligible[best];
            reset_hidden_unit(net, s, unit, opt, rng);
            replaced.emplace_back(s, unit);
            ages[unit] = 0;
            eligible.erase(eligible.begin() + static_cast<std::ptrdiff_t>(best));
            state.accumulator[s] -= 1.0;
        }
    }
    // A later stage's incoming resample may have overwritten an earlier
    // stage's outgoing zeros; zeroing wins so every replaced unit's
    // contribution is exactly removed.
    for (const auto& [s, unit] : replaced) zero_outgoing_weights(net, s, unit, opt);
}

/// One ReDo step. No-op unless (step+1) is a multiple of rf; otherwise
/// computes each hidden unit's activity relative to its layer mean and resets
/// the units at or below the dormancy threshold.
inline void redo_step(Network& net, const ForwardCache& cache, const ReDoConfig& cfg,
                      OptimizerState& opt, long long step, Rng& rng) {
    if ((step + 1) % cfg.rf != 0) return;
    if (cache.post.size() != net.hidden.size())
        throw ShapeError("redo_step: cache does not match network layout");
    std::vector<std::pair<std::size_t, std::size_t>> reset;
    for (std::size_t s = 0; s < net.hidden.size(); ++s) {
        const auto act = detail::mean_abs_activation(cache.post[s]);
        double layer_mean = 0.0;
        for (double a : act) layer_mean += a;
        layer_mean /= static_cast<double>(act.size());
        for (std::size_t i = 0; i < act.size(); ++i) {
            const double score = layer_mean > 0.0 ? act[i] / layer_mean : 0.0;
            if (score <= cfg.rt) {
                reset_hidden_unit(net, s, i, opt, rng);
                reset.emplace_back(s, i);
            }
        }
    }
    // Zeroed outgoing columns win over any same-step incoming resample of a
    // dormant unit one stage up.
    for (const auto& [s, unit] : reset) zero_outgoing_weights(net, s, unit, opt);
}

/// Add i.i.d. Gaussian noise of variance sigma2 to every parameter.
inline void shrink_perturb_step(Network& net, const ShrinkPerturbConfig& cfg, Rng& rng) {
    if (cfg.sigma2 == 0.0) return;
    const double sigma = std::sqrt(cfg.sigma2);
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& tv : net.tensors())
        for (std::size_t j = 0; j < tv.size; ++j) tv.data[j] += noise(rng);
}

} // namespace plastlab
