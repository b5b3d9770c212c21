#include "scap/prune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scap/error.hpp"

namespace scap {

void PruneSpec::validate() const {
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        throw DomainError("prune spec '" + layer_id + "': tau must be finite and >= 0");
    }
    if (!std::isfinite(eta)) throw DomainError("prune spec '" + layer_id + "': eta not finite");
    if (!(target_sparsity >= 0.0 && target_sparsity <= 1.0)) {
        throw DomainError("prune spec '" + layer_id + "': target sparsity outside [0, 1]");
    }
}

std::size_t KeepMask::count_kept() const noexcept {
    return static_cast<std::size_t>(std::count(kept.begin(), kept.end(), std::uint8_t{1}));
}

PrunedActivations prune_activations(const DenseMatrix& x, double tau) {
    if (!(tau >= 0.0)) throw DomainError("prune_activations: tau must be >= 0");
    PrunedActivations out{DenseMatrix(x.rows(), x.cols()), KeepMask{x.rows(), x.cols(), {}}};
    out.mask.kept.resize(x.size());
    auto src = x.data();
    auto dst = out.values.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        const bool keep = std::fabs(static_cast<double>(src[i])) > tau;
        out.mask.kept[i] = keep ? 1 : 0;
        dst[i] = keep ? src[i] : 0.0f;
    }
    return out;
}

SparseLinear::SparseLinear(DenseMatrix weight, const DenseVector& bias, double tau, double eta)
    : weight_(std::move(weight)), tau_(tau), eta_(eta) {
    if (bias.len() != weight_.cols()) {
        throw ShapeError("SparseLinear: bias length " + std::to_string(bias.len()) +
                         " != out features " + std::to_string(weight_.cols()));
    }
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw DomainError("SparseLinear: tau must be >= 0");
    if (!std::isfinite(eta)) throw DomainError("SparseLinear: eta must be finite");

    bias_fused_ = DenseVector(bias.len());
    if (eta_ == 0.0) {
        bias_fused_ = bias;
    } else {
        const auto sums = column_sums(weight_);
        for (std::size_t j = 0; j < sums.size(); ++j) {
            bias_fused_[j] = static_cast<float>(static_cast<double>(bias[j]) + eta_ * sums[j]);
        }
    }
}

SparseLinear::Result SparseLinear::forward(const DenseMatrix& x) const {
    if (x.cols() != in_features()) {
        throw ShapeError("SparseLinear::forward: input has " + std::to_string(x.cols()) +
                         " columns, layer expects " + std::to_string(in_features()));
    }
    const std::size_t n = x.rows(), ic = in_features(), oc = out_features();
    Result res{DenseMatrix(n, oc), {}, {}, KeepMask{n, ic, std::vector<std::uint8_t>(n * ic)}};
    const auto shift = static_cast<float>(eta_);

    std::vector<double> acc(oc);
    std::vector<std::size_t> kept_idx;
    std::vector<float> kept_val;
    kept_idx.reserve(ic);
    kept_val.reserve(ic);
    for (std::size_t i = 0; i < n; ++i) {
        // Gather surviving input channels, then stream only their weight rows.
        kept_idx.clear();
        kept_val.clear();
        auto xr = x.row(i);
        for (std::size_t k = 0; k < ic; ++k) {
            const float centered = xr[k] - shift;
            if (std::fabs(static_cast<double>(centered)) > tau_) {
                kept_idx.push_back(k);
                kept_val.push_back(centered);
                res.mask.kept[i * ic + k] = 1;
            }
        }
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t t = 0; t < kept_idx.size(); ++t) {
            const double xv = kept_val[t];
            auto wr = weight_.row(kept_idx[t]);
            for (std::size_t j = 0; j < oc; ++j) acc[j] += xv * static_cast<double>(wr[j]);
        }
        auto yr = res.y.row(i);
        for (std::size_t j = 0; j < oc; ++j) {
            yr[j] = static_cast<float>(static_cast<float>(acc[j]) + bias_fused_[j]);
        }

        const std::uint64_t pruned = ic - kept_idx.size();
        res.ops.macs += kept_idx.size() * oc;
        res.ops.channels_skipped += pruned;
        res.ops.elements_pruned += pruned;
        res.input.pruned += pruned;
    }
    res.ops.dense_macs = static_cast<std::uint64_t>(n) * ic * oc;
    res.input.total = static_cast<std::uint64_t>(n) * ic;
    return res;
}

SparseLinear build_sparse_linear(const DenseMatrix& weight, const DenseVector& bias,
                                 const PruneSpec& spec) {
    spec.validate();
    return SparseLinear(weight, bias, spec.tau, spec.eta);
}

DenseMatrix forward_dynamic_eta(const DenseMatrix& weight, const DenseVector& bias, double tau,
                                const DenseMatrix& x, std::span<const double> eta_per_row) {
    if (x.cols() != weight.rows()) throw ShapeError("forward_dynamic_eta: input width mismatch");
    if (bias.len() != weight.cols()) throw ShapeError("forward_dynamic_eta: bias length mismatch");
    if (eta_per_row.size() != x.rows()) throw ShapeError("forward_dynamic_eta: one eta per row");
    const auto sums = column_sums(weight);
    DenseMatrix y(x.rows(), weight.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double eta = eta_per_row[i];
        auto xr = x.row(i);
        auto yr = y.row(i);
        for (std::size_t j = 0; j < weight.cols(); ++j) {
            double acc = eta * sums[j] + bias[j];
            for (std::size_t k = 0; k < weight.rows(); ++k) {
                const double c = static_cast<double>(xr[k]) - eta;
                if (std::fabs(c) > tau) acc += c * weight(k, j);
            }
            yr[j] = static_cast<float>(acc);
        }
    }
    return y;
}

}  // namespace scap
