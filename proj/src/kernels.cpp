#include "scap/kernels.hpp"

#include <cmath>
#include <string>

#include "scap/error.hpp"

namespace scap {

namespace {

void require_unit(double s, const char* name) {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError(std::string(name) + " outside [0, 1]");
}

void require_input(const DenseMatrix& x, std::size_t d) {
    if (x.cols() != d) {
        throw ShapeError("FFN input has " + std::to_string(x.cols()) + " columns, expected " +
                         std::to_string(d));
    }
}

KeepMask full_mask(std::size_t rows, std::size_t cols) {
    return KeepMask{rows, cols, std::vector<std::uint8_t>(rows * cols, 1)};
}

}  // namespace

void SwiGluWeights::validate() const {
    if (w_gate.rows() != w_up.rows() || w_gate.cols() != w_up.cols()) {
        throw ShapeError("SwiGLU: gate and up weights differ in shape");
    }
    if (w_down.rows() != w_up.cols() || w_down.cols() != w_up.rows()) {
        throw ShapeError("SwiGLU: down weight must be h x d");
    }
}

void GeluMlpWeights::validate() const {
    if (b_up.len() != w_up.cols()) throw ShapeError("GELU MLP: up bias length");
    if (w_down.rows() != w_up.cols() || w_down.cols() != w_up.rows()) {
        throw ShapeError("GELU MLP: down weight must be h x d");
    }
    if (b_down.len() != w_down.cols()) throw ShapeError("GELU MLP: down bias length");
}

FcStage FcStage::dense(DenseMatrix weight, DenseVector bias) {
    return FcStage(SparseLinear(std::move(weight), bias, 0.0, 0.0), false);
}

FcStage FcStage::sparse(DenseMatrix weight, DenseVector bias, double tau, double eta) {
    return FcStage(SparseLinear(std::move(weight), bias, tau, eta), true);
}

SparseLinear::Result FcStage::forward(const DenseMatrix& x) const {
    if (sparse_) return layer_.forward(x);
    if (x.cols() != layer_.in_features()) throw ShapeError("FcStage: input width mismatch");
    SparseLinear::Result res;
    res.y = matmul(x, layer_.weight());
    add_bias(res.y, layer_.bias_fused());
    res.ops.macs = static_cast<std::uint64_t>(x.rows()) * layer_.in_features() *
                   layer_.out_features();
    res.ops.dense_macs = res.ops.macs;
    res.input.total = static_cast<std::uint64_t>(x.size());
    res.mask = full_mask(x.rows(), x.cols());
    return res;
}

SwiGluKernel::SwiGluKernel(FcStage up, FcStage gate, FcStage down)
    : up_(std::move(up)), gate_(std::move(gate)), down_(std::move(down)) {
    const auto& u = up_.layer();
    const auto& g = gate_.layer();
    if (u.in_features() != g.in_features() || u.out_features() != g.out_features()) {
        throw ShapeError("SwiGluKernel: up and gate shapes differ");
    }
    if (down_.layer().in_features() != u.out_features() ||
        down_.layer().out_features() != u.in_features()) {
        throw ShapeError("SwiGluKernel: down shape");
    }
    if (up_.is_sparse() != gate_.is_sparse() || u.tau() != g.tau() || u.eta() != g.eta()) {
        throw DomainError("SwiGluKernel: up and gate must share one input pruning spec");
    }
}

FfnResult SwiGluKernel::forward(const DenseMatrix& x) const {
    require_input(x, up_.layer().in_features());
    auto up = up_.forward(x);
    auto gate = gate_.forward(x);
    DenseMatrix gated = hadamard(up.y, silu(gate.y));
    auto down = down_.forward(gated);

    FfnResult out;
    out.y = std::move(down.y);
    out.ops = up.ops;
    out.ops += gate.ops;
    out.ops += down.ops;
    out.input = up.input;
    out.hidden = down.input;
    out.ops.elements_pruned = out.input.pruned + out.hidden.pruned;
    out.input_mask = std::move(up.mask);
    out.hidden_mask = std::move(down.mask);
    out.hidden_values = std::move(gated);
    return out;
}

GeluMlpKernel::GeluMlpKernel(FcStage up, FcStage down) : up_(std::move(up)), down_(std::move(down)) {
    if (down_.layer().in_features() != up_.layer().out_features() ||
        down_.layer().out_features() != up_.layer().in_features()) {
        throw ShapeError("GeluMlpKernel: down shape");
    }
}

FfnResult GeluMlpKernel::forward(const DenseMatrix& x) const {
    require_input(x, up_.layer().in_features());
    auto up = up_.forward(x);
    DenseMatrix hidden = gelu(up.y);
    auto down = down_.forward(hidden);

    FfnResult out;
    out.y = std::move(down.y);
    out.ops = up.ops;
    out.ops += down.ops;
    out.input = up.input;
    out.hidden = down.input;
    out.input_mask = std::move(up.mask);
    out.hidden_mask = std::move(down.mask);
    out.hidden_values = std::move(hidden);
    return out;
}

FfnResult dense_swiglu(const DenseMatrix& x, const SwiGluWeights& w) {
    w.validate();
    require_input(x, w.d_model());
    DenseMatrix gated = hadamard(matmul(x, w.w_up), silu(matmul(x, w.w_gate)));
    FfnResult out;
    out.y = matmul(gated, w.w_down);
    const std::uint64_t n = x.rows(), d = w.d_model(), h = w.d_hidden();
    out.ops.macs = n * (2 * d * h + h * d);
    out.ops.dense_macs = out.ops.macs;
    out.input.total = n * d;
    out.hidden.total = n * h;
    out.input_mask = full_mask(n, d);
    out.hidden_mask = full_mask(n, h);
    out.hidden_values = std::move(gated);
    return out;
}

FfnResult cats_swiglu(double tau_silu, const DenseMatrix& x, const SwiGluWeights& w) {
    w.validate();
    require_input(x, w.d_model());
    if (!(tau_silu >= 0.0)) throw DomainError("cats_swiglu: tau must be >= 0");
    const std::size_t n = x.rows(), d = w.d_model(), h = w.d_hidden();

    const DenseMatrix v = silu(matmul(x, w.w_gate));
    FfnResult out;
    out.y = DenseMatrix(n, d);
    out.hidden_values = DenseMatrix(n, h);
    out.input_mask = full_mask(n, d);
    out.hidden_mask = KeepMask{n, h, std::vector<std::uint8_t>(n * h, 0)};
    out.ops.macs = static_cast<std::uint64_t>(n) * d * h;  // gate path

    std::vector<double> acc(d);
    for (std::size_t i = 0; i < n; ++i) {
        auto xr = x.row(i);
        auto vr = v.row(i);
        std::fill(acc.begin(), acc.end(), 0.0);
        std::uint64_t kept = 0;
        for (std::size_t j = 0; j < h; ++j) {
            if (!(std::fabs(static_cast<double>(vr[j])) >= tau_silu)) continue;
            ++kept;
            out.hidden_mask.kept[i * h + j] = 1;
            // Up column j, only for surviving channels.
            double u = 0.0;
            for (std::size_t k = 0; k < d; ++k) u += static_cast<double>(xr[k]) * w.w_up(k, j);
            const float x1 = static_cast<float>(u) * vr[j];
            out.hidden_values(i, j) = x1;
            // Down row j shares the same mask bit.
            auto wd = w.w_down.row(j);
            for (std::size_t c = 0; c < d; ++c) acc[c] += static_cast<double>(x1) * wd[c];
        }
        auto yr = out.y.row(i);
        for (std::size_t c = 0; c < d; ++c) yr[c] = static_cast<float>(acc[c]);

        out.ops.macs += 2 * kept * d;
        out.ops.channels_skipped += 2 * (h - kept);
        out.hidden.pruned += h - kept;
    }
    out.hidden.total = static_cast<std::uint64_t>(n) * h;
    out.input.total = static_cast<std::uint64_t>(n) * d;
    out.ops.elements_pruned = out.hidden.pruned;
    out.ops.dense_macs = static_cast<std::uint64_t>(n) * 3 * d * h;
    return out;
}

FfnResult scap_swiglu(double tau_x, double tau_gated, const DenseMatrix& x,
                      const SwiGluWeights& w, double eta_x, double eta_gated) {
    w.validate();
    const DenseVector zero_h(w.d_hidden());
    const DenseVector zero_d(w.d_model());
    SwiGluKernel kernel(FcStage::sparse(w.w_up, zero_h, tau_x, eta_x),
                        FcStage::sparse(w.w_gate, zero_h, tau_x, eta_x),
                        FcStage::sparse(w.w_down, zero_d, tau_gated, eta_gated));
    return kernel.forward(x);
}

FfnResult dense_gelu_mlp(const DenseMatrix& x, const GeluMlpWeights& w) {
    w.validate();
    GeluMlpKernel kernel(FcStage::dense(w.w_up, w.b_up), FcStage::dense(w.w_down, w.b_down));
    return kernel.forward(x);
}

FfnResult scap_gelu_mlp(double tau_x, double tau_h, double eta_h, const DenseMatrix& x,
                        const GeluMlpWeights& w) {
    w.validate();
    GeluMlpKernel kernel(FcStage::sparse(w.w_up, w.b_up, tau_x, 0.0),
                         FcStage::sparse(w.w_down, w.b_down, tau_h, eta_h));
    return kernel.forward(x);
}

double ffn_sparsity(double s_x, double s_gated) {
    require_unit(s_x, "s_x");
    require_unit(s_gated, "s_gated");
    return (2.0 * s_x + s_gated) / 3.0;
}

double cats_ffn_sparsity(double s_silu) {
    require_unit(s_silu, "s_silu");
    return 2.0 * s_silu / 3.0;
}

double mlp_ffn_sparsity(double s_up, double s_down) {
    require_unit(s_up, "s_up");
    require_unit(s_down, "s_down");
    return 0.5 * (s_up + s_down);
}

}  // namespace scap
