#pragma once

#include <cstddef>

#include "scap/prune.hpp"
#include "scap/tensor.hpp"

namespace scap {

/// Gated FFN weights: y = (silu(x Wg) * (x Wu)) Wd. Shapes d x h, d x h, h x d.
struct SwiGluWeights {
    DenseMatrix w_gate;
    DenseMatrix w_up;
    DenseMatrix w_down;

    std::size_t d_model() const noexcept { return w_up.rows(); }
    std::size_t d_hidden() const noexcept { return w_up.cols(); }
    void validate() const;
};

/// Non-gated FFN: y = gelu(x Wu + bu) Wd + bd.
struct GeluMlpWeights {
    DenseMatrix w_up;
    DenseVector b_up;
    DenseMatrix w_down;
    DenseVector b_down;

    std::size_t d_model() const noexcept { return w_up.rows(); }
    std::size_t d_hidden() const noexcept { return w_up.cols(); }
    void validate() const;
};

/// Output of one FFN evaluation plus everything the analyses need from it.
struct FfnResult {
    DenseMatrix y;
    OpCount ops;
    SparsityTally input;   // at the Up (and Gate) input
    SparsityTally hidden;  // at the Down input (post-silu for CATS)
    KeepMask input_mask;
    KeepMask hidden_mask;
    DenseMatrix hidden_values;  // Down input before any shift or pruning
};

/// One FC layer that is either dense or input-pruned.
class FcStage {
public:
    static FcStage dense(DenseMatrix weight, DenseVector bias);
    static FcStage sparse(DenseMatrix weight, DenseVector bias, double tau, double eta);

    bool is_sparse() const noexcept { return sparse_; }
    const SparseLinear& layer() const noexcept { return layer_; }

    SparseLinear::Result forward(const DenseMatrix& x) const;

private:
    FcStage(SparseLinear layer, bool sparse) : layer_(std::move(layer)), sparse_(sparse) {}

    SparseLinear layer_;
    bool sparse_;
};

/// SCAP SwiGLU with pre-built stages. Up and Gate must share the same
/// threshold and shift so the input mask is computed once for both.
class SwiGluKernel {
public:
    SwiGluKernel(FcStage up, FcStage gate, FcStage down);
    FfnResult forward(const DenseMatrix& x) const;

private:
    FcStage up_, gate_, down_;
};

class GeluMlpKernel {
public:
    GeluMlpKernel(FcStage up, FcStage down);
    FfnResult forward(const DenseMatrix& x) const;

private:
    FcStage up_, down_;
};

FfnResult dense_swiglu(const DenseMatrix& x, const SwiGluWeights& w);

/// Post-silu pruning with one mask shared by the Up columns and the Down rows.
/// Inclusive keep rule |v| >= tau_silu. The Gate path always runs densely.
FfnResult cats_swiglu(double tau_silu, const DenseMatrix& x, const SwiGluWeights& w);

FfnResult scap_swiglu(double tau_x, double tau_gated, const DenseMatrix& x,
                      const SwiGluWeights& w, double eta_x = 0.0, double eta_gated = 0.0);

FfnResult dense_gelu_mlp(const DenseMatrix& x, const GeluMlpWeights& w);

FfnResult scap_gelu_mlp(double tau_x, double tau_h, double eta_h, const DenseMatrix& x,
                        const GeluMlpWeights& w);

/// FFN sparsity of a gated block with three equal-sized FCs: (2 s_x + s_gated) / 3.
double ffn_sparsity(double s_x, double s_gated);

/// CATS prunes Up and Down with one post-silu mask: 2/3 * s_silu.
double cats_ffn_sparsity(double s_silu);

/// Two equal-sized FCs of a non-gated MLP: (s_up + s_down) / 2.
double mlp_ffn_sparsity(double s_up, double s_down);

}  // namespace scap
