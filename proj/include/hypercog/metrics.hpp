#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hypercog/error.hpp"

namespace hypercog {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }

    Matrix select_rows(std::span<const std::size_t> idx) const {
        Matrix out(idx.size(), cols);
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t c = 0; c < cols; ++c) out(i, c) = (*this)(idx[i], c);
        return out;
    }
};

namespace detail {
inline void check_pair(std::span<const double> y_true, std::span<const double> y_pred) {
    if (y_true.size() != y_pred.size()) throw Error("metrics: length mismatch");
    if (y_true.empty()) throw Error("metrics: empty input");
}
}  // namespace detail

inline double rss(std::span<const double> y_true, std::span<const double> y_pred) {
    detail::check_pair(y_true, y_pred);
    double s = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) s += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    return s;
}

inline double rmse(std::span<const double> y_true, std::span<const double> y_pred) {
    return std::sqrt(rss(y_true, y_pred) / static_cast<double>(y_true.size()));
}

inline double tss(std::span<const double> y_true) {
    if (y_true.empty()) throw Error("metrics: empty input");
    double mean = 0.0;
    for (double v : y_true) mean += v;
    mean /= static_cast<double>(y_true.size());
    double s = 0.0;
    for (double v : y_true) s += (v - mean) * (v - mean);
    return s;
}

/// 1 - RSS/TSS; empty when y_true is constant (TSS = 0).
inline std::optional<double> r2(std::span<const double> y_true, std::span<const double> y_pred) {
    detail::check_pair(y_true, y_pred);
    double total = tss(y_true);
    if (y_true.size() < 2 || total <= 0.0) return std::nullopt;
    return 1.0 - rss(y_true, y_pred) / total;
}

/// Per-column z-score fitted on training rows.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> scale;

    static Scaler fit(const Matrix& x) {
        if (x.rows == 0) throw Error("scaler: empty training matrix");
        Scaler s;
        s.mean.assign(x.cols, 0.0);
        s.scale.assign(x.cols, 1.0);
        const auto n = static_cast<double>(x.rows);
        for (std::size_t c = 0; c < x.cols; ++c) {
            double m = 0.0;
            for (std::size_t r = 0; r < x.rows; ++r) m += x(r, c);
            m /= n;
            double var = 0.0;
            for (std::size_t r = 0; r < x.rows; ++r) var += (x(r, c) - m) * (x(r, c) - m);
            double sd = std::sqrt(var / n);
            s.mean[c] = m;
            s.scale[c] = sd > 1e-12 * std::max(1.0, std::abs(m)) ? sd : 1.0;
        }
        return s;
    }

    Matrix apply(const Matrix& x) const {
        Matrix out = x;
        for (std::size_t r = 0; r < x.rows; ++r)
            for (std::size_t c = 0; c < x.cols; ++c) out(r, c) = (x(r, c) - mean[c]) / scale[c];
        return out;
    }

    void apply_row(std::span<const double> in, std::span<double> out) const {
        for (std::size_t c = 0; c < in.size(); ++c) out[c] = (in[c] - mean[c]) / scale[c];
    }
};

struct StandardizedSplit {
    Matrix train;
    Matrix test;
    Scaler scaler;
};

/// Scales both splits with statistics of the training rows only.
inline StandardizedSplit standardize_fit_apply(const Matrix& train, const Matrix& test) {
    auto scaler = Scaler::fit(train);
    return {scaler.apply(train), scaler.apply(test), scaler};
}

}  // namespace hypercog
