#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "plastlab/matrix.hpp"
#include "plastlab/network.hpp"
#include "plastlab/rng.hpp"

namespace plastlab {

/// Per-task measurements written to the run CSV.
struct MetricsRecord {
    std::size_t task = 0;
    double avg_online_accuracy = 0.0;
    double dead_unit_fraction = 0.0;
    double avg_weight_magnitude = 0.0;
    double avg_gradient_magnitude = 0.0;
    double stable_rank = 0.0;
};

/// Fraction of hidden ReLU units that output exactly zero on every probe row.
inline double dead_unit_fraction(const Network& net, const Matrix& probe) {
    if (probe.rows() == 0) throw InputError("dead_unit_fraction: empty probe");
    ForwardCache cache;
    forward(net, probe, cache);
    std::size_t dead = 0, total = 0;
    for (std::size_t s = 0; s < net.hidden_count(); ++s) {
        const Matrix& post = cache.post[s];
        total += post.cols();
        for (std::size_t j = 0; j < post.cols(); ++j) {
            bool all_zero = true;
            for (std::size_t i = 0; i < post.rows() && all_zero; ++i)
                all_zero = post(i, j) == 0.0;
            if (all_zero) ++dead;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(dead) / static_cast<double>(total);
}

/// Mean |w| over the entries of every weight matrix (biases and layer-norm
/// parameters excluded).
inline double avg_param_magnitude(const Network& net) {
    double sum = 0.0;
    std::size_t count = 0;
    auto add = [&](const Matrix& w) {
        for (double v : w.values()) sum += std::abs(v);
        count += w.size();
    };
    for (const auto& st : net.hidden) add(st.dense.weights);
    add(net.output.weights);
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

struct StableRankResult {
    double value = 0.0;
    bool degenerate = false; // all-zero feature matrix
};

/// Stable rank ||A||_F^2 / sigma_max(A)^2. The top singular value comes from
/// power iteration on A^T A (relative tolerance 1e-9, at most 1000 rounds);
/// an all-zero matrix reports 0 with the degenerate flag set.
inline StableRankResult stable_rank_checked(const Matrix& features) {
    const std::size_t m = features.rows(), n = features.cols();
    if (m == 0 || n == 0) throw InputError("stable_rank: empty feature matrix");
    double fro2 = 0.0;
    for (double v : features.values()) fro2 += v * v;
    if (fro2 == 0.0) return {0.0, true};

    // Gram matrix G = A^T A (n x n).
    Matrix gram;
    multiply_tn(features, features, gram);

    Rng rng = make_rng(0x5742a11cULL);
    std::vector<double> v(n), w(n);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    double norm = 0.0;
    while (norm == 0.0) {
        for (double& x : v) x = uni(rng);
        norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
    }
    for (double& x : v) x /= norm;

    double lambda = 0.0;
    for (int iter = 0; iter < 1000; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            const double* gi = gram.data() + i * n;
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += gi[j] * v[j];
            w[i] = acc;
        }
        double wnorm = 0.0;
        for (double x : w) wnorm += x * x;
        wnorm = std::sqrt(wnorm);
        if (wnorm == 0.0) break; // v fell in the null space; lambda stays 0
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wnorm;
        // ||G v|| with normalized v converges to sigma_max^2 from below.
        const double prev = lambda;
        lambda = wnorm;
        if (iter > 0 && std::abs(lambda - prev) <= 1e-9 * lambda) break;
    }
    if (lambda <= 0.0) return {0.0, true};
    return {fro2 / lambda, false};
}

inline double stable_rank(const Matrix& features) { return stable_rank_checked(features).value; }

/// Running mean of the per-update mean |g| over every parameter element.
class GradMagnitudeAccumulator {
public:
    void add(const Gradients& grads) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& t : grads.g) {
            for (double v : t) sum += std::abs(v);
            count += t.size();
        }
        if (count == 0) return;
        sum_ += sum / static_cast<double>(count);
        updates_ += 1;
    }
    double mean() const { return updates_ == 0 ? 0.0 : sum_ / static_cast<double>(updates_); }
    void reset() {
        sum_ = 0.0;
        updates_ = 0;
    }

private:
    double sum_ = 0.0;
    std::size_t updates_ = 0;
};

/// Output of the last hidden stage on a probe batch (what the readout sees).
inline Matrix last_hidden_features(const Network& net, const Matrix& probe) {
    if (net.hidden_count() == 0) throw InputError("last_hidden_features: no hidden stages");
    ForwardCache cache;
    forward(net, probe, cache);
    return cache.stage_output(net, net.hidden_count() - 1);
}

} // namespace plastlab
