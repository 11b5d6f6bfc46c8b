#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "plastlab/errors.hpp"

namespace plastlab {

/// Dense row-major matrix of doubles. The workhorse container for batches,
/// weights and activations.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return v_.size(); }
    bool empty() const { return v_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return v_[r * cols_ + c]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    std::span<double> row(std::size_t r) { return {v_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {v_.data() + r * cols_, cols_}; }
    std::vector<double>& values() { return v_; }
    const std::vector<double>& values() const { return v_; }

    void resize(std::size_t rows, std::size_t cols) {
        rows_ = rows;
        cols_ = cols;
        v_.assign(rows * cols, 0.0);
    }
    void fill(double x) { v_.assign(v_.size(), x); }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.v_ == b.v_;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> v_;
};

inline void require_shape(const Matrix& m, std::size_t rows, std::size_t cols,
                          const char* what) {
    if (m.rows() != rows || m.cols() != cols)
        throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
}

/// out = a * b^T, where a is m x k and b is n x k. Row-by-row dot products,
/// unit stride on both operands.
inline void multiply_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    if (a.cols() != b.cols())
        throw ShapeError("multiply_nt: inner dimensions differ (" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.cols()) + ")");
    const std::size_t m = a.rows(), n = b.rows(), k = a.cols();
    if (out.rows() != m || out.cols() != n) out.resize(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a.data() + i * k;
        double* oi = out.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b.data() + j * k;
            double acc = 0.0;
            for (std::size_t l = 0; l < k; ++l) acc += ai[l] * bj[l];
            oi[j] = acc;
        }
    }
}

/// out = a * b, where a is m x k and b is k x n.
inline void multiply_nn(const Matrix& a, const Matrix& b, Matrix& out) {
    if (a.cols() != b.rows())
        throw ShapeError("multiply_nn: inner dimensions differ (" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()) + ")");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (out.rows() != m || out.cols() != n) out.resize(m, n);
    for (std::size_t i = 0; i < m; ++i) {
        double* oi = out.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) oi[j] = 0.0;
        const double* ai = a.data() + i * k;
        for (std::size_t l = 0; l < k; ++l) {
            const double s = ai[l];
            if (s == 0.0) continue;
            const double* bl = b.data() + l * n;
            for (std::size_t j = 0; j < n; ++j) oi[j] += s * bl[j];
        }
    }
}

/// out = a^T * b, where a is m x k and b is m x n; out is k x n.
inline void multiply_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    if (a.rows() != b.rows())
        throw ShapeError("multiply_tn: row counts differ (" + std::to_string(a.rows()) + " vs " +
                         std::to_string(b.rows()) + ")");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (out.rows() != k || out.cols() != n) out.resize(k, n);
    out.fill(0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a.data() + i * k;
        const double* bi = b.data() + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double s = ai[l];
            if (s == 0.0) continue;
            double* ol = out.data() + l * n;
            for (std::size_t j = 0; j < n; ++j) ol[j] += s * bi[j];
        }
    }
}

/// out += a^T * b into a raw k x n buffer (not zeroed here).
inline void accumulate_tn(const Matrix& a, const Matrix& b, double* out) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a.data() + i * k;
        const double* bi = b.data() + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            const double s = ai[l];
            if (s == 0.0) continue;
            double* ol = out + l * n;
            for (std::size_t j = 0; j < n; ++j) ol[j] += s * bi[j];
        }
    }
}

inline void column_sums(const Matrix& a, std::vector<double>& out) {
    out.assign(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.data() + i * a.cols();
        for (std::size_t j = 0; j < a.cols(); ++j) out[j] += ai[j];
    }
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Matrix& m) { return all_finite(std::span(m.values())); }

} // namespace plastlab
