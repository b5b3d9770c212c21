#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scap/tensor.hpp"

namespace scap {

/// Calibrated parameters for one pruned activation.
struct PruneSpec {
    std::string layer_id;
    double tau = 0.0;  // magnitude threshold, >= 0
    double eta = 0.0;  // mode shift subtracted before thresholding
    double target_sparsity = 0.0;

    void validate() const;
    bool operator==(const PruneSpec&) const = default;
};

/// Work actually performed by a kernel call.
struct OpCount {
    std::uint64_t macs = 0;
    std::uint64_t dense_macs = 0;  // what the dense schedule would have cost
    std::uint64_t channels_skipped = 0;
    std::uint64_t elements_pruned = 0;

    double macs_ratio() const noexcept {
        return dense_macs == 0 ? 1.0 : static_cast<double>(macs) / static_cast<double>(dense_macs);
    }

    OpCount& operator+=(const OpCount& o) noexcept {
        macs += o.macs;
        dense_macs += o.dense_macs;
        channels_skipped += o.channels_skipped;
        elements_pruned += o.elements_pruned;
        return *this;
    }
    bool operator==(const OpCount&) const = default;
};

/// Pruned/total element tally at one activation site.
struct SparsityTally {
    std::uint64_t pruned = 0;
    std::uint64_t total = 0;

    double sparsity() const noexcept {
        return total == 0 ? 0.0 : static_cast<double>(pruned) / static_cast<double>(total);
    }
    SparsityTally& operator+=(const SparsityTally& o) noexcept {
        pruned += o.pruned;
        total += o.total;
        return *this;
    }
};

/// Row-major keep-mask: 1 where the element survived pruning.
struct KeepMask {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> kept;

    bool operator()(std::size_t r, std::size_t c) const noexcept { return kept[r * cols + c] != 0; }
    std::span<const std::uint8_t> row(std::size_t r) const noexcept {
        return {kept.data() + r * cols, cols};
    }
    std::size_t count_kept() const noexcept;
};

struct PrunedActivations {
    DenseMatrix values;
    KeepMask mask;
};

/// Zeroes every element with |x| <= tau (strict keep rule |x| > tau).
PrunedActivations prune_activations(const DenseMatrix& x, double tau);

/// Frozen FC layer with mode-centered, thresholded input.
///
/// forward computes prune(x - eta, tau) * W + b_fused where
/// b_fused = b + eta * colsum(W); at tau == 0 this reproduces x * W + b.
class SparseLinear {
public:
    SparseLinear(DenseMatrix weight, const DenseVector& bias, double tau, double eta);

    const DenseMatrix& weight() const noexcept { return weight_; }
    const DenseVector& bias_fused() const noexcept { return bias_fused_; }
    double tau() const noexcept { return tau_; }
    double eta() const noexcept { return eta_; }
    std::size_t in_features() const noexcept { return weight_.rows(); }
    std::size_t out_features() const noexcept { return weight_.cols(); }

    struct Result {
        DenseMatrix y;
        OpCount ops;
        SparsityTally input;
        KeepMask mask;
    };

    /// Throws ShapeError when x.cols != in_features().
    Result forward(const DenseMatrix& x) const;

private:
    DenseMatrix weight_;
    DenseVector bias_fused_;
    double tau_;
    double eta_;
};

SparseLinear build_sparse_linear(const DenseMatrix& weight, const DenseVector& bias,
                                 const PruneSpec& spec);

/// Reference for the online-shift form: y = prune(x - eta_r, tau) * W + eta_r * colsum(W) + b,
/// with a separate shift per input row and the compensation computed at call time.
DenseMatrix forward_dynamic_eta(const DenseMatrix& weight, const DenseVector& bias, double tau,
                                const DenseMatrix& x, std::span<const double> eta_per_row);

}  // namespace scap
