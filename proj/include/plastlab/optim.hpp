#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "plastlab/errors.hpp"
#include "plastlab/network.hpp"

namespace plastlab {

enum class OptimKind { Sgd, SgdwMomentum, AdamW };

struct OptimConfig {
    OptimKind kind = OptimKind::Sgd;
    double alpha = 0.05;
    double momentum = 0.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    double l2_lambda = 0.0;

    friend bool operator==(const OptimConfig&, const OptimConfig&) = default;

    void validate() const {
        if (!(alpha > 0.0)) throw ConfigError("optimizer.alpha: must be > 0");
        if (!(momentum >= 0.0 && momentum < 1.0))
            throw ConfigError("optimizer.momentum: must be in [0,1)");
        if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optimizer.beta1: must be in [0,1)");
        if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optimizer.beta2: must be in [0,1)");
        if (!(adam_epsilon > 0.0)) throw ConfigError("optimizer.adam_epsilon: must be > 0");
        if (!(l2_lambda >= 0.0)) throw ConfigError("optimizer.l2_lambda: must be >= 0");
    }
};

/// Per-element optimizer buffers, laid out parallel to Network::tensors() so
/// reinitialization code can zero the state of exactly the elements it
/// rewrites.
struct OptimizerState {
    OptimKind kind = OptimKind::Sgd;
    std::vector<std::vector<double>> momentum; // SGDW velocity
    std::vector<std::vector<double>> m1, m2;   // AdamW moments
    long long t = 0;

    static OptimizerState create(OptimKind kind, const Network& net) {
        OptimizerState st;
        st.kind = kind;
        const auto sizes = net.tensor_sizes();
        if (kind == OptimKind::SgdwMomentum)
            for (std::size_t n : sizes) st.momentum.emplace_back(n, 0.0);
        if (kind == OptimKind::AdamW) {
            for (std::size_t n : sizes) st.m1.emplace_back(n, 0.0);
            for (std::size_t n : sizes) st.m2.emplace_back(n, 0.0);
        }
        return st;
    }
};

namespace detail {

inline void check_grads(const Network& net, const Gradients& grads) {
    const auto sizes = net.tensor_sizes();
    if (grads.g.size() != sizes.size())
        throw ShapeError("optimizer: gradient tensor count mismatch");
    for (std::size_t i = 0; i < sizes.size(); ++i)
        if (grads.g[i].size() != sizes[i])
            throw ShapeError("optimizer: gradient shape mismatch at tensor " + std::to_string(i));
}

} // namespace detail

/// theta <- (1 - alpha*lambda) * theta - alpha * g. With l2_lambda = 0 this is
/// plain SGD; otherwise the L2 penalty is folded into a multiplicative shrink.
inline void sgd_step(Network& net, const Gradients& grads, const OptimConfig& cfg) {
    detail::check_grads(net, grads);
    const double shrink = 1.0 - cfg.alpha * cfg.l2_lambda;
    auto views = net.tensors();
    for (std::size_t i = 0; i < views.size(); ++i) {
        double* p = views[i].data;
        const double* g = grads.g[i].data();
        for (std::size_t j = 0; j < views[i].size; ++j)
            p[j] = shrink * p[j] - cfg.alpha * g[j];
    }
}

/// v <- m*v + g; theta <- (1 - alpha*lambda) * theta - alpha * v
/// (decoupled weight decay).
inline void sgdw_momentum_step(Network& net, const Gradients& grads, const OptimConfig& cfg,
                               OptimizerState& state) {
    if (state.kind != OptimKind::SgdwMomentum || state.momentum.empty())
        throw ConfigError("sgdw_momentum_step: state not initialized for SGDW");
    detail::check_grads(net, grads);
    state.t += 1;
    const double shrink = 1.0 - cfg.alpha * cfg.l2_lambda;
    auto views = net.tensors();
    for (std::size_t i = 0; i < views.size(); ++i) {
        double* p = views[i].data;
        double* v = state.momentum[i].data();
        const double* g = grads.g[i].data();
        for (std::size_t j = 0; j < views[i].size; ++j) {
            v[j] = cfg.momentum * v[j] + g[j];
            p[j] = shrink * p[j] - cfg.alpha * v[j];
        }
    }
}

/// Standard AdamW: bias-corrected moments, decoupled decay.
inline void adamw_step(Network& net, const Gradients& grads, const OptimConfig& cfg,
                       OptimizerState& state) {
    if (state.kind != OptimKind::AdamW || state.m1.empty())
        throw ConfigError("adamw_step: state not initialized for AdamW");
    detail::check_grads(net, grads);
    state.t += 1;
    const double shrink = 1.0 - cfg.alpha * cfg.l2_lambda;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    auto views = net.tensors();
    for (std::size_t i = 0; i < views.size(); ++i) {
        double* p = views[i].data;
        double* m = state.m1[i].data();
        double* v = state.m2[i].data();
        const double* g = grads.g[i].data();
        for (std::size_t j = 0; j < views[i].size; ++j) {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            p[j] = shrink * p[j] - cfg.alpha * mhat / (std::sqrt(vhat) + cfg.adam_epsilon);
        }
    }
}

/// Dispatch on the configured rule; every path advances the step counter by
/// exactly 1.
inline void optimizer_step(Network& net, const Gradients& grads, const OptimConfig& cfg,
                           OptimizerState& state) {
    switch (cfg.kind) {
    case OptimKind::Sgd:
        state.t += 1;
        sgd_step(net, grads, cfg);
        break;
    case OptimKind::SgdwMomentum: sgdw_momentum_step(net, grads, cfg, state); break;
    case OptimKind::AdamW: adamw_step(net, grads, cfg, state); break;
    }
}

/// Zero every optimizer buffer at the given elements of one tensor, so a
/// freshly reinitialized weight does not inherit stale momentum or moments.
inline void reset_state_at(OptimizerState& state, std::size_t tensor,
                           std::span<const std::size_t> elements) {
    auto zero_at = [&](std::vector<std::vector<double>>& buffers) {
        if (buffers.empty()) return;
        if (tensor >= buffers.size())
            throw ShapeError("reset_state_at: tensor index " + std::to_string(tensor) +
                             " out of range");
        auto& buf = buffers[tensor];
        for (std::size_t e : elements) {
            if (e >= buf.size())
                throw ShapeError("reset_state_at: element index " + std::to_string(e) +
                                 " out of range");
            buf[e] = 0.0;
        }
    };
    zero_at(state.momentum);
    zero_at(state.m1);
    zero_at(state.m2);
}

} // namespace plastlab
