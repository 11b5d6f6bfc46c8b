#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "plastlab/errors.hpp"
#include "plastlab/init_spec.hpp"
#include "plastlab/matrix.hpp"
#include "plastlab/rng.hpp"

namespace plastlab {

enum class LayerNormMode { None, Standard, Reparameterized };

struct DenseLayer {
    Matrix weights; // out x in
    std::vector<double> bias;
    InitSpec weight_init;
    InitSpec bias_init;

    std::size_t in_width() const { return weights.cols(); }
    std::size_t out_width() const { return weights.rows(); }
};

/// Per-sample normalization across the units of one layer, applied after the
/// activation. With `reparameterized` set the learned scale acts as (1 + gamma)
/// so that a gamma near zero still lets gradients through.
struct LayerNormStage {
    std::vector<double> gamma;
    std::vector<double> beta;
    double epsilon = 1e-5;
    bool reparameterized = false;
    InitSpec gamma_init;
    InitSpec beta_init;

    double scale(std::size_t j) const { return reparameterized ? 1.0 + gamma[j] : gamma[j]; }
};

struct HiddenStage {
    DenseLayer dense; // followed by ReLU
    std::optional<LayerNormStage> norm;
};

struct NetworkArch {
    std::vector<std::size_t> widths; // input, hidden..., output
    LayerNormMode norm = LayerNormMode::None;
    double ln_epsilon = 1e-5;
};

enum class TensorKind : std::uint8_t { Weight, Bias, Gamma, Beta };

/// Non-owning handle to one parameter tensor; `stage == hidden_count()` refers
/// to the output layer.
struct TensorView {
    TensorKind kind;
    std::size_t stage;
    double* data;
    std::size_t size;
    const InitSpec* init;
};

struct Network {
    std::vector<HiddenStage> hidden;
    DenseLayer output;

    std::size_t input_width() const {
        return hidden.empty() ? output.in_width() : hidden.front().dense.in_width();
    }
    std::size_t output_width() const { return output.out_width(); }
    std::size_t hidden_count() const { return hidden.size(); }

    std::size_t num_params() const {
        std::size_t n = 0;
        for (const auto& s : hidden) {
            n += s.dense.weights.size() + s.dense.bias.size();
            if (s.norm) n += s.norm->gamma.size() + s.norm->beta.size();
        }
        return n + output.weights.size() + output.bias.size();
    }

    /// All parameter tensors in a fixed order: per hidden stage W, b, (gamma,
    /// beta), then the output layer's W, b. Optimizer state and gradients use
    /// the same indexing.
    std::vector<TensorView> tensors() {
        std::vector<TensorView> out;
        for (std::size_t s = 0; s < hidden.size(); ++s) {
            auto& st = hidden[s];
            out.push_back({TensorKind::Weight, s, st.dense.weights.data(),
                           st.dense.weights.size(), &st.dense.weight_init});
            out.push_back({TensorKind::Bias, s, st.dense.bias.data(), st.dense.bias.size(),
                           &st.dense.bias_init});
            if (st.norm) {
                out.push_back({TensorKind::Gamma, s, st.norm->gamma.data(),
                               st.norm->gamma.size(), &st.norm->gamma_init});
                out.push_back({TensorKind::Beta, s, st.norm->beta.data(), st.norm->beta.size(),
                               &st.norm->beta_init});
            }
        }
        out.push_back({TensorKind::Weight, hidden.size(), output.weights.data(),
                       output.weights.size(), &output.weight_init});
        out.push_back({TensorKind::Bias, hidden.size(), output.bias.data(), output.bias.size(),
                       &output.bias_init});
        return out;
    }

    std::vector<std::size_t> tensor_sizes() const {
        std::vector<std::size_t> out;
        for (const auto& st : hidden) {
            out.push_back(st.dense.weights.size());
            out.push_back(st.dense.bias.size());
            if (st.norm) {
                out.push_back(st.norm->gamma.size());
                out.push_back(st.norm->beta.size());
            }
        }
        out.push_back(output.weights.size());
        out.push_back(output.bias.size());
        return out;
    }

    std::size_t tensors_per_hidden_stage() const {
        return (!hidden.empty() && hidden.front().norm) ? 4 : 2;
    }
    std::size_t weight_tensor_index(std::size_t stage) const {
        return stage * tensors_per_hidden_stage();
    }
    std::size_t bias_tensor_index(std::size_t stage) const {
        return weight_tensor_index(stage) + 1;
    }
    std::size_t tensor_count() const {
        return hidden.size() * tensors_per_hidden_stage() + 2;
    }
};

/// Gradient tensors parallel to Network::tensors().
struct Gradients {
    std::vector<std::vector<double>> g;

    static Gradients zeros_like(Network& net) {
        Gradients out;
        for (const auto& t : net.tensors()) out.g.emplace_back(t.size, 0.0);
        return out;
    }
    std::span<double> operator[](std::size_t i) { return g[i]; }
    std::span<const double> operator[](std::size_t i) const { return g[i]; }
};

struct LayerNormCache {
    Matrix xhat;                 // normalized pre-affine values
    Matrix out;                  // stage output fed to the next layer
    std::vector<double> row_std; // biased per-row standard deviation
};

struct ForwardCache {
    const Matrix* input = nullptr;
    std::vector<Matrix> pre;  // pre-activations, per hidden stage
    std::vector<Matrix> post; // ReLU outputs, per hidden stage
    std::vector<LayerNormCache> norm;
    Matrix logits;
    Matrix probs;

    const Matrix& stage_output(const Network& net, std::size_t s) const {
        return net.hidden[s].norm ? norm[s].out : post[s];
    }
};

inline Network init_network(const NetworkArch& arch, std::uint64_t seed) {
    if (arch.widths.size() < 2)
        throw ConfigError("init_network: need at least input and output widths");
    for (std::size_t w : arch.widths)
        if (w < 1) throw ConfigError("init_network: all widths must be >= 1");
    if (!(arch.ln_epsilon > 0.0)) throw ConfigError("init_network: ln_epsilon must be > 0");

    Rng rng = make_rng(seed, streams::init);
    auto make_dense = [&](std::size_t in, std::size_t out) {
        DenseLayer d;
        d.weight_init = InitSpec::kaiming_uniform(in);
        d.bias_init = InitSpec::constant(0.0);
        d.weights.resize(out, in);
        d.weight_init.fill(std::span(d.weights.values()), rng);
        d.bias.assign(out, 0.0);
        return d;
    };

    Network net;
    const std::size_t n_hidden = arch.widths.size() - 2;
    for (std::size_t s = 0; s < n_hidden; ++s) {
        HiddenStage st;
        st.dense = make_dense(arch.widths[s], arch.widths[s + 1]);
        if (arch.norm != LayerNormMode::None) {
            LayerNormStage ln;
            ln.reparameterized = arch.norm == LayerNormMode::Reparameterized;
            ln.epsilon = arch.ln_epsilon;
            ln.gamma_init = InitSpec::constant(ln.reparameterized ? 0.0 : 1.0);
            ln.beta_init = InitSpec::constant(0.0);
            ln.gamma.assign(arch.widths[s + 1], ln.gamma_init.mean());
            ln.beta.assign(arch.widths[s + 1], 0.0);
            st.norm = std::move(ln);
        }
        net.hidden.push_back(std::move(st));
    }
    net.output = make_dense(arch.widths[n_hidden], arch.widths.back());
    return net;
}

inline void linear_forward(const DenseLayer& d, const Matrix& in, Matrix& out) {
    multiply_nt(in, d.weights, out);
    for (std::size_t i = 0; i < out.rows(); ++i) {
        double* oi = out.data() + i * out.cols();
        for (std::size_t j = 0; j < out.cols(); ++j) oi[j] += d.bias[j];
    }
}

inline void layer_norm_forward(const LayerNormStage& ln, const Matrix& in,
                               LayerNormCache& cache) {
    const std::size_t m = in.rows(), n = in.cols();
    if (ln.gamma.size() != n)
        throw ShapeError("layer_norm_forward: width mismatch (" + std::to_string(ln.gamma.size()) +
                         " vs " + std::to_string(n) + ")");
    if (cache.xhat.rows() != m || cache.xhat.cols() != n) cache.xhat.resize(m, n);
    if (cache.out.rows() != m || cache.out.cols() != n) cache.out.resize(m, n);
    cache.row_std.assign(m, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* x = in.data() + i * n;
        double mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) mean += x[j];
        mean /= static_cast<double>(n); // exact for constant rows
        double var = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double c = x[j] - mean;
            var += c * c;
        }
        const double sd = std::sqrt(var * inv_n);
        cache.row_std[i] = sd;
        const double inv = 1.0 / (sd + ln.epsilon);
        double* xh = cache.xhat.data() + i * n;
        double* y = cache.out.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            xh[j] = (x[j] - mean) * inv;
            y[j] = xh[j] * ln.scale(j) + ln.beta[j];
        }
    }
}

/// Forward pass through every stage; fills the cache and leaves softmax
/// probabilities in cache.probs (rows sum to 1).
inline void forward(const Network& net, const Matrix& batch, ForwardCache& cache) {
    if (batch.cols() != net.input_width())
        throw ShapeError("forward: batch has " + std::to_string(batch.cols()) +
                         " columns, network expects " + std::to_string(net.input_width()));
    const std::size_t H = net.hidden.size();
    cache.input = &batch;
    cache.pre.resize(H);
    cache.post.resize(H);
    cache.norm.resize(H);

    const Matrix* h = &batch;
    for (std::size_t s = 0; s < H; ++s) {
        const HiddenStage& st = net.hidden[s];
        linear_forward(st.dense, *h, cache.pre[s]);
        Matrix& post = cache.post[s];
        if (post.rows() != cache.pre[s].rows() || post.cols() != cache.pre[s].cols())
            post.resize(cache.pre[s].rows(), cache.pre[s].cols());
        const double* z = cache.pre[s].data();
        double* a = post.data();
        for (std::size_t i = 0; i < post.size(); ++i) a[i] = z[i] > 0.0 ? z[i] : 0.0;
        if (st.norm) {
            layer_norm_forward(*st.norm, post, cache.norm[s]);
            h = &cache.norm[s].out;
        } else {
            h = &post;
        }
    }
    linear_forward(net.output, *h, cache.logits);

    const std::size_t m = cache.logits.rows(), c = cache.logits.cols();
    if (cache.probs.rows() != m || cache.probs.cols() != c) cache.probs.resize(m, c);
    for (std::size_t i = 0; i < m; ++i) {
        const double* z = cache.logits.data() + i * c;
        double* p = cache.probs.data() + i * c;
        double zmax = z[0];
        for (std::size_t j = 1; j < c; ++j) zmax = std::max(zmax, z[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            p[j] = std::exp(z[j] - zmax);
            sum += p[j];
        }
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < c; ++j) p[j] *= inv;
    }
}

/// Scratch buffers for one backward pass; reusing them keeps the training
/// loop allocation-free after the first batch.
struct Workspace {
    ForwardCache cache;
    Matrix dlogits;
    Matrix dh; // gradient flowing into the current stage output
    Matrix dz; // gradient at pre-activations
};

namespace detail {

/// Backprop through y = xhat * scale + beta with xhat = (x - mean)/(sd + eps),
/// sd the biased row standard deviation. Accumulates dgamma/dbeta, rewrites
/// dy into dx in place.
inline void layer_norm_backward(const LayerNormStage& ln, const LayerNormCache& cache,
                                Matrix& dy, std::span<double> dgamma, std::span<double> dbeta) {
    const std::size_t m = dy.rows(), n = dy.cols();
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < m; ++i) {
        double* d = dy.data() + i * n;
        const double* xh = cache.xhat.data() + i * n;
        const double sd = cache.row_std[i];
        const double inv = 1.0 / (sd + ln.epsilon);
        double dxhat_mean = 0.0, sdot = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            dbeta[j] += d[j];
            dgamma[j] += d[j] * xh[j];
            d[j] *= ln.scale(j); // now holds dxhat
            dxhat_mean += d[j];
            sdot += d[j] * xh[j];
        }
        dxhat_mean *= inv_n;
        // d sd / dx contributes only when sd > 0 (when sd == 0 every centered
        // value is 0 and the term vanishes).
        const double k = sd > 0.0 ? sdot * inv_n / sd : 0.0;
        for (std::size_t j = 0; j < n; ++j) d[j] = inv * (d[j] - dxhat_mean) - xh[j] * k;
    }
}

inline double cross_entropy_and_dlogits(const Matrix& logits, const Matrix& probs,
                                        std::span<const std::uint8_t> labels, Matrix& dlogits) {
    const std::size_t m = logits.rows(), c = logits.cols();
    if (dlogits.rows() != m || dlogits.cols() != c) dlogits.resize(m, c);
    const double inv_m = 1.0 / static_cast<double>(m);
    double loss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double* z = logits.data() + i * c;
        const double* p = probs.data() + i * c;
        double* dl = dlogits.data() + i * c;
        double zmax = z[0];
        for (std::size_t j = 1; j < c; ++j) zmax = std::max(zmax, z[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) sum += std::exp(z[j] - zmax);
        loss += zmax + std::log(sum) - z[labels[i]];
        for (std::size_t j = 0; j < c; ++j) dl[j] = p[j] * inv_m;
        dl[labels[i]] -= inv_m;
    }
    return loss * inv_m;
}

} // namespace detail

/// Mean cross-entropy over the batch plus exact gradients for every parameter
/// tensor. Labels are class indices; predictions stay in ws.cache.probs.
inline double loss_and_grad(const Network& net, const Matrix& batch,
                            std::span<const std::uint8_t> labels, Workspace& ws,
                            Gradients& grads) {
    if (labels.size() != batch.rows())
        throw ShapeError("loss_and_grad: " + std::to_string(labels.size()) + " labels for " +
                         std::to_string(batch.rows()) + " rows");
    forward(net, batch, ws.cache);

    const auto sizes = net.tensor_sizes();
    if (grads.g.size() != sizes.size()) {
        grads.g.clear();
        for (std::size_t n : sizes) grads.g.emplace_back(n, 0.0);
    } else {
        for (std::size_t i = 0; i < sizes.size(); ++i) grads.g[i].assign(sizes[i], 0.0);
    }

    const double loss =
        detail::cross_entropy_and_dlogits(ws.cache.logits, ws.cache.probs, labels, ws.dlogits);

    const std::size_t H = net.hidden.size();
    const std::size_t out_w = net.weight_tensor_index(H);
    const Matrix& last_h = H > 0 ? ws.cache.stage_output(net, H - 1) : batch;

    accumulate_tn(ws.dlogits, last_h, grads.g[out_w].data());
    column_sums(ws.dlogits, grads.g[out_w + 1]);
    if (H == 0) return loss;
    multiply_nn(ws.dlogits, net.output.weights, ws.dh);

    for (std::size_t s = H; s-- > 0;) {
        const HiddenStage& st = net.hidden[s];
        const std::size_t wi = net.weight_tensor_index(s);
        if (st.norm)
            detail::layer_norm_backward(*st.norm, ws.cache.norm[s], ws.dh, grads.g[wi + 2],
                                        grads.g[wi + 3]);
        // ReLU: zero slope at and below 0.
        const Matrix& pre = ws.cache.pre[s];
        if (ws.dz.rows() != pre.rows() || ws.dz.cols() != pre.cols())
            ws.dz.resize(pre.rows(), pre.cols());
        for (std::size_t i = 0; i < pre.size(); ++i)
            ws.dz.values()[i] = pre.values()[i] > 0.0 ? ws.dh.values()[i] : 0.0;

        const Matrix& input = s == 0 ? batch : ws.cache.stage_output(net, s - 1);
        accumulate_tn(ws.dz, input, grads.g[wi].data());
        column_sums(ws.dz, grads.g[wi + 1]);
        if (s > 0) multiply_nn(ws.dz, st.dense.weights, ws.dh);
    }
    return loss;
}

/// One-hot overload matching the external contract; rows must contain exactly
/// one 1.0 and zeros elsewhere.
inline double loss_and_grad(const Network& net, const Matrix& batch, const Matrix& targets,
                            Workspace& ws, Gradients& grads) {
    if (targets.rows() != batch.rows() || targets.cols() != net.output_width())
        throw ShapeError("loss_and_grad: target shape mismatch");
    std::vector<std::uint8_t> labels(targets.rows());
    for (std::size_t i = 0; i < targets.rows(); ++i) {
        std::size_t ones = 0, hit = 0;
        for (std::size_t j = 0; j < targets.cols(); ++j) {
            const double t = targets(i, j);
            if (t == 1.0) {
                ++ones;
                hit = j;
            } else if (t != 0.0) {
                throw InputError("loss_and_grad: target row " + std::to_string(i) +
                                 " is not one-hot");
            }
        }
        if (ones != 1)
            throw InputError("loss_and_grad: target row " + std::to_string(i) +
                             " is not one-hot");
        labels[i] = static_cast<std::uint8_t>(hit);
    }
    return loss_and_grad(net, batch, labels, ws, grads);
}

} // namespace plastlab
