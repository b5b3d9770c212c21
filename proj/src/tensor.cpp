#include "scap/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scap/error.hpp"

namespace scap {

namespace {

std::string shape_str(const DenseMatrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op) + ": " + shape_str(a) + " vs " + shape_str(b));
    }
}

template <typename F>
DenseMatrix map(const DenseMatrix& x, F f) {
    DenseMatrix out(x.rows(), x.cols());
    auto src = x.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
    return out;
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, float fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("DenseMatrix: " + std::to_string(data_.size()) +
                         " elements for shape " + std::to_string(rows) + "x" +
                         std::to_string(cols));
    }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<float>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("DenseMatrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

DenseMatrix DenseMatrix::slice_rows(std::size_t first, std::size_t count) const {
    if (first + count > rows_) throw ShapeError("slice_rows: range past end");
    auto begin = data_.begin() + static_cast<std::ptrdiff_t>(first * cols_);
    return DenseMatrix(count, cols_,
                       std::vector<float>(begin, begin + static_cast<std::ptrdiff_t>(count * cols_)));
}

DenseMatrix matmul(const DenseMatrix& x, const DenseMatrix& w) {
    if (x.cols() != w.rows()) {
        throw ShapeError("matmul: " + shape_str(x) + " * " + shape_str(w));
    }
    const std::size_t n = x.rows(), k_dim = x.cols(), m = w.cols();
    DenseMatrix out(n, m);
    std::vector<double> acc(m);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(acc.begin(), acc.end(), 0.0);
        auto xr = x.row(i);
        for (std::size_t k = 0; k < k_dim; ++k) {
            const double xv = xr[k];
            auto wr = w.row(k);
            for (std::size_t j = 0; j < m; ++j) acc[j] += xv * static_cast<double>(wr[j]);
        }
        auto orow = out.row(i);
        for (std::size_t j = 0; j < m; ++j) orow[j] = static_cast<float>(acc[j]);
    }
    return out;
}

void add_bias(DenseMatrix& y, const DenseVector& b) {
    if (b.len() != y.cols()) {
        throw ShapeError("add_bias: bias length " + std::to_string(b.len()) + " for " +
                         shape_str(y));
    }
    for (std::size_t i = 0; i < y.rows(); ++i) {
        auto r = y.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
    }
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "add");
    DenseMatrix out = a;
    auto dst = out.data();
    auto src = b.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    return out;
}

DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
    require_same_shape(a, b, "hadamard");
    DenseMatrix out = a;
    auto dst = out.data();
    auto src = b.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] *= src[i];
    return out;
}

float silu(float x) noexcept {
    const double v = x;
    return static_cast<float>(v / (1.0 + std::exp(-v)));
}

float gelu(float x) noexcept {
    const double v = x;
    return static_cast<float>(0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0))));
}

DenseMatrix silu(const DenseMatrix& x) {
    return map(x, [](float v) { return silu(v); });
}

DenseMatrix gelu(const DenseMatrix& x) {
    return map(x, [](float v) { return gelu(v); });
}

DenseMatrix rmsnorm(const DenseMatrix& x, const DenseVector& gain, float eps) {
    if (gain.len() != x.cols()) throw ShapeError("rmsnorm: gain length mismatch");
    DenseMatrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto r = x.row(i);
        double ss = 0.0;
        for (float v : r) ss += static_cast<double>(v) * v;
        const double inv = 1.0 / std::sqrt(ss / static_cast<double>(r.size()) + eps);
        auto o = out.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) {
            o[j] = static_cast<float>(r[j] * inv * gain[j]);
        }
    }
    return out;
}

std::vector<double> column_sums(const DenseMatrix& w) {
    std::vector<double> sums(w.cols(), 0.0);
    for (std::size_t k = 0; k < w.rows(); ++k) {
        auto r = w.row(k);
        for (std::size_t j = 0; j < r.size(); ++j) sums[j] += r[j];
    }
    return sums;
}

bool all_finite(std::span<const float> values) noexcept {
    for (float v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace scap
