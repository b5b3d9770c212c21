#pragma once

// Helpers and independent reference implementations shared by the tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "scap/tensor.hpp"

namespace testing {

inline scap::DenseMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng,
                                       double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    scap::DenseMatrix m(r, c);
    for (float& v : m.data()) v = static_cast<float>(n(rng));
    return m;
}

inline scap::DenseVector random_vector(std::size_t len, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    scap::DenseVector v(len);
    for (float& x : v.data()) x = static_cast<float>(n(rng));
    return v;
}

// Plain triple loop in long double.
inline std::vector<long double> oracle_matmul(const scap::DenseMatrix& a, const scap::DenseMatrix& b) {
    std::vector<long double> out(a.rows() * b.cols(), 0.0L);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j)
            for (std::size_t k = 0; k < a.cols(); ++k)
                out[i * b.cols() + j] += static_cast<long double>(a(i, k)) * b(k, j);
    return out;
}

// numpy "linear" quantile written from its definition: h = (n - 1) q, interpolate.
inline double oracle_quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
}

// Direct Gaussian KDE argmax on a fine grid over [lo, hi].
inline double oracle_kde_mode(std::span<const float> x, double bandwidth, double lo, double hi,
                              std::size_t points) {
    double best = -1.0, arg = lo;
    for (std::size_t i = 0; i < points; ++i) {
        const double g = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        double d = 0.0;
        for (float v : x) {
            const double z = (g - v) / bandwidth;
            d += std::exp(-0.5 * z * z);
        }
        if (d > best) {
            best = d;
            arg = g;
        }
    }
    return arg;
}

inline double sample_std(std::span<const float> x) {
    double m = 0.0;
    for (float v : x) m += v;
    m /= static_cast<double>(x.size());
    double s = 0.0;
    for (float v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

inline double max_abs_diff(const scap::DenseMatrix& a, const scap::DenseMatrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::fabs(static_cast<double>(a.data()[i]) - b.data()[i]));
    }
    return m;
}

}  // namespace testing
