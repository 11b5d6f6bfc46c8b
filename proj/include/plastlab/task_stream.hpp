#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

#include "plastlab/dataio.hpp"
#include "plastlab/matrix.hpp"
#include "plastlab/rng.hpp"

namespace plastlab {

/// Deterministic pixel permutation for one task: a bijection on the input
/// positions derived from (master seed, task index) alone.
inline std::vector<std::uint32_t> permutation_for_task(std::uint64_t master_seed,
                                                       std::size_t task,
                                                       std::size_t width = kImagePixels) {
    std::vector<std::uint32_t> perm(width);
    std::iota(perm.begin(), perm.end(), 0u);
    Rng rng = make_rng(master_seed, streams::permutation, task);
    std::shuffle(perm.begin(), perm.end(), rng);
    return perm;
}

/// Permuted task stream over a fixed base dataset: task k presents every
/// sample once, in a freshly seeded order, with pixel positions permuted by
/// the task's bijection.
class TaskStream {
public:
    TaskStream(const Dataset& data, std::uint64_t master_seed, std::size_t tasks,
               std::size_t batch)
        : data_(&data), master_seed_(master_seed), tasks_(tasks), batch_(batch) {
        if (batch_ == 0) throw ConfigError("run.batch: must be >= 1");
        if (data.size() == 0) throw ConfigError("task stream: empty dataset");
    }

    const Dataset& dataset() const { return *data_; }
    std::uint64_t master_seed() const { return master_seed_; }
    std::size_t tasks() const { return tasks_; }
    std::size_t batch_size() const { return batch_; }
    std::size_t samples_per_task() const { return data_->size(); }

    /// One update per mini-batch; a short final batch is still one update.
    std::size_t updates_per_task() const {
        return (data_->size() + batch_ - 1) / batch_;
    }

    std::vector<std::uint32_t> permutation(std::size_t task) const {
        return permutation_for_task(master_seed_, task, data_->images.cols());
    }

    /// Seeded per-task sample order; every index appears exactly once.
    std::vector<std::uint32_t> sample_order(std::size_t task) const {
        std::vector<std::uint32_t> order(data_->size());
        std::iota(order.begin(), order.end(), 0u);
        Rng rng = make_rng(master_seed_, streams::shuffle, task);
        std::shuffle(order.begin(), order.end(), rng);
        return order;
    }

    /// Materialize mini-batch `index` of a task: gathers the permuted pixels
    /// of the scheduled samples into `x` and their labels into `y`.
    void fill_batch(const std::vector<std::uint32_t>& order,
                    const std::vector<std::uint32_t>& perm, std::size_t index, Matrix& x,
                    std::vector<std::uint8_t>& y) const {
        const std::size_t n = data_->size();
        const std::size_t begin = index * batch_;
        const std::size_t end = std::min(begin + batch_, n);
        const std::size_t rows = end - begin;
        const std::size_t width = data_->images.cols();
        if (x.rows() != rows || x.cols() != width) x.resize(rows, width);
        y.resize(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            const std::uint32_t sample = order[begin + r];
            const double* src = data_->images.data() + std::size_t(sample) * width;
            double* dst = x.data() + r * width;
            for (std::size_t j = 0; j < width; ++j) dst[j] = src[perm[j]];
            y[r] = data_->labels[sample];
        }
    }

private:
    const Dataset* data_;
    std::uint64_t master_seed_;
    std::size_t tasks_;
    std::size_t batch_;
};

/// Apply a pixel permutation to every row of a matrix (used for probe sets).
inline void permute_columns(const Matrix& in, const std::vector<std::uint32_t>& perm,
                            Matrix& out) {
    if (perm.size() != in.cols()) throw ShapeError("permute_columns: permutation width mismatch");
    if (out.rows() != in.rows() || out.cols() != in.cols()) out.resize(in.rows(), in.cols());
    for (std::size_t r = 0; r < in.rows(); ++r) {
        const double* src = in.data() + r * in.cols();
        double* dst = out.data() + r * in.cols();
        for (std::size_t j = 0; j < in.cols(); ++j) dst[j] = src[perm[j]];
    }
}

} // namespace plastlab
