#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace scap {

/// Row-major 2-D array of 32-bit floats.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, float fill = 0.0f);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<float> data);
    DenseMatrix(std::initializer_list<std::initializer_list<float>> rows);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    float& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    float operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<float> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const float> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }

    /// Rows [first, first + count) as a new matrix.
    DenseMatrix slice_rows(std::size_t first, std::size_t count) const;

    bool operator==(const DenseMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<float> data_;
};

class DenseVector {
public:
    DenseVector() = default;
    explicit DenseVector(std::size_t len, float fill = 0.0f) : data_(len, fill) {}
    explicit DenseVector(std::vector<float> data) : data_(std::move(data)) {}
    DenseVector(std::initializer_list<float> values) : data_(values) {}

    std::size_t len() const noexcept { return data_.size(); }
    float& operator[](std::size_t i) noexcept { return data_[i]; }
    float operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }

    bool operator==(const DenseVector&) const = default;

private:
    std::vector<float> data_;
};

/// x * w, dot products accumulated in double. Throws ShapeError when x.cols != w.rows.
DenseMatrix matmul(const DenseMatrix& x, const DenseMatrix& w);

/// Adds b to every row of y in place.
void add_bias(DenseMatrix& y, const DenseVector& b);

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b);

float silu(float x) noexcept;
float gelu(float x) noexcept;  // exact erf form

DenseMatrix silu(const DenseMatrix& x);
DenseMatrix gelu(const DenseMatrix& x);

/// Row-wise RMS normalization with unit gain scaled by `gain`.
DenseMatrix rmsnorm(const DenseMatrix& x, const DenseVector& gain, float eps = 1e-6f);

/// Column sums of w in double precision.
std::vector<double> column_sums(const DenseMatrix& w);

bool all_finite(std::span<const float> values) noexcept;

}  // namespace scap
