#include "scap/model.hpp"

#include <cmath>
#include <random>

#include "scap/error.hpp"

namespace scap {

namespace {

const char* hook_suffix(HookKind kind) {
    return kind == HookKind::UpGateInput ? "up_gate_in" : "down_in";
}

DenseMatrix random_weight(std::size_t fan_in, std::size_t fan_out, double gain,
                          std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, gain / std::sqrt(static_cast<double>(fan_in)));
    DenseMatrix w(fan_in, fan_out);
    for (float& v : w.data()) v = static_cast<float>(normal(rng));
    return w;
}

FcStage make_stage(const DenseMatrix& w, const DenseVector& b, const PruneSpec* spec) {
    if (spec == nullptr) return FcStage::dense(w, b);
    spec->validate();
    return FcStage::sparse(w, b, spec->tau, spec->eta);
}

}  // namespace

const char* to_string(FfnKind kind) noexcept {
    return kind == FfnKind::SwiGlu ? "swiglu" : "gelu";
}

FfnKind parse_ffn_kind(const std::string& name) {
    if (name == "swiglu") return FfnKind::SwiGlu;
    if (name == "gelu") return FfnKind::GeluMlp;
    throw DomainError("unknown ffn kind '" + name + "'");
}

void BlockConfig::validate() const {
    if (d_model == 0 || d_hidden == 0 || n_blocks == 0) {
        throw DomainError("d_model, d_hidden and n_blocks must all be >= 1");
    }
    if (!std::isfinite(up_bias_offset)) throw DomainError("up_bias_offset must be finite");
    if (!(init_gain > 0.0) || !std::isfinite(init_gain)) throw DomainError("init_gain must be > 0");
}

std::string HookPoint::id() const {
    return "block" + std::to_string(block) + "." + hook_suffix(kind);
}

HookPoint HookPoint::parse(const std::string& id) {
    const auto dot = id.find('.');
    if (id.rfind("block", 0) != 0 || dot == std::string::npos || dot == 5) {
        throw HookError("malformed hook id '" + id + "'");
    }
    HookPoint hook;
    try {
        std::size_t used = 0;
        hook.block = std::stoul(id.substr(5, dot - 5), &used);
        if (used != dot - 5) throw HookError("malformed hook id '" + id + "'");
    } catch (const std::logic_error&) {
        throw HookError("malformed hook id '" + id + "'");
    }
    const auto suffix = id.substr(dot + 1);
    if (suffix == "up_gate_in") {
        hook.kind = HookKind::UpGateInput;
    } else if (suffix == "down_in") {
        hook.kind = HookKind::DownInput;
    } else {
        throw HookError("unknown hook site '" + suffix + "'");
    }
    return hook;
}

Model::Model(BlockConfig config, std::vector<Block> blocks)
    : config_(config), blocks_(std::move(blocks)) {
    config_.validate();
    if (blocks_.size() != config_.n_blocks) throw ShapeError("Model: block count mismatch");
    for (const auto& b : blocks_) {
        std::visit(
            [&](const auto& w) {
                w.validate();
                if (w.d_model() != config_.d_model || w.d_hidden() != config_.d_hidden) {
                    throw ShapeError("Model: block weights do not match the config");
                }
            },
            b.ffn);
        const bool want_swiglu = config_.ffn_kind == FfnKind::SwiGlu;
        if (std::holds_alternative<SwiGluWeights>(b.ffn) != want_swiglu) {
            throw ShapeError("Model: block FFN kind does not match the config");
        }
        if (config_.rmsnorm && b.norm_gain.len() != config_.d_model) {
            throw ShapeError("Model: missing RMSNorm gain");
        }
        if (!config_.rmsnorm && b.norm_gain.len() != 0) {
            throw ShapeError("Model: RMSNorm gain present but rmsnorm is off");
        }
    }
    dense_ = std::make_shared<const PrunedModel>(*this, PruneSpecMap{});
}

std::vector<HookPoint> Model::hook_points() const {
    std::vector<HookPoint> out;
    for (std::size_t b = 0; b < config_.n_blocks; ++b) {
        out.push_back({b, HookKind::UpGateInput});
        out.push_back({b, HookKind::DownInput});
    }
    return out;
}

void Model::check_hook(const HookPoint& hook) const {
    if (hook.block >= config_.n_blocks) {
        throw HookError("hook " + hook.id() + " is past the last block (" +
                        std::to_string(config_.n_blocks) + " blocks)");
    }
}

Model::Captured Model::forward_with_hooks(const DenseMatrix& x,
                                          const std::set<HookPoint>& hooks) const {
    for (const auto& h : hooks) check_hook(h);
    PrunedModel::Options opt;
    opt.capture = hooks;
    auto res = dense_->forward(x, opt);
    return {std::move(res.y), std::move(res.captured)};
}

DenseMatrix Model::forward(const DenseMatrix& x) const {
    return dense_->forward(x).y;
}

bool Model::operator==(const Model& o) const {
    if (!(config_ == o.config_) || blocks_.size() != o.blocks_.size()) return false;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const auto& a = blocks_[i];
        const auto& b = o.blocks_[i];
        if (!(a.norm_gain == b.norm_gain) || a.ffn.index() != b.ffn.index()) return false;
        if (const auto* sa = std::get_if<SwiGluWeights>(&a.ffn)) {
            const auto& sb = std::get<SwiGluWeights>(b.ffn);
            if (!(sa->w_gate == sb.w_gate && sa->w_up == sb.w_up && sa->w_down == sb.w_down)) {
                return false;
            }
        } else {
            const auto& ga = std::get<GeluMlpWeights>(a.ffn);
            const auto& gb = std::get<GeluMlpWeights>(b.ffn);
            if (!(ga.w_up == gb.w_up && ga.b_up == gb.b_up && ga.w_down == gb.w_down &&
                  ga.b_down == gb.b_down)) {
                return false;
            }
        }
    }
    return true;
}

Model init_weights(const BlockConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    const std::size_t d = config.d_model, h = config.d_hidden;
    std::vector<Block> blocks;
    blocks.reserve(config.n_blocks);
    for (std::size_t b = 0; b < config.n_blocks; ++b) {
        Block block;
        if (config.ffn_kind == FfnKind::SwiGlu) {
            SwiGluWeights w;
            w.w_gate = random_weight(d, h, config.init_gain, rng);
            w.w_up = random_weight(d, h, config.init_gain, rng);
            w.w_down = random_weight(h, d, config.init_gain, rng);
            block.ffn = std::move(w);
        } else {
            GeluMlpWeights w;
            w.w_up = random_weight(d, h, config.init_gain, rng);
            w.b_up = DenseVector(h, static_cast<float>(config.up_bias_offset));
            w.w_down = random_weight(h, d, config.init_gain, rng);
            w.b_down = DenseVector(d, 0.0f);
            block.ffn = std::move(w);
        }
        if (config.rmsnorm) block.norm_gain = DenseVector(d, 1.0f);
        blocks.push_back(std::move(block));
    }
    return Model(config, std::move(blocks));
}

PrunedModel::PrunedModel(const Model& model, PruneSpecMap specs)
    : config_(model.config()), specs_(std::move(specs)) {
    for (const auto& [hook, spec] : specs_) model.check_hook(hook);
    auto find = [&](std::size_t b, HookKind kind) -> const PruneSpec* {
        auto it = specs_.find(HookPoint{b, kind});
        return it == specs_.end() ? nullptr : &it->second;
    };
    for (std::size_t b = 0; b < model.blocks().size(); ++b) {
        const auto& block = model.blocks()[b];
        const PruneSpec* in_spec = find(b, HookKind::UpGateInput);
        const PruneSpec* down_spec = find(b, HookKind::DownInput);
        if (const auto* w = std::get_if<SwiGluWeights>(&block.ffn)) {
            const DenseVector zero_h(w->d_hidden());
            const DenseVector zero_d(w->d_model());
            kernels_.emplace_back(std::in_place_type<SwiGluKernel>,
                                  make_stage(w->w_up, zero_h, in_spec),
                                  make_stage(w->w_gate, zero_h, in_spec),
                                  make_stage(w->w_down, zero_d, down_spec));
        } else {
            const auto& g = std::get<GeluMlpWeights>(block.ffn);
            kernels_.emplace_back(std::in_place_type<GeluMlpKernel>,
                                  make_stage(g.w_up, g.b_up, in_spec),
                                  make_stage(g.w_down, g.b_down, down_spec));
        }
        norm_gains_.push_back(block.norm_gain);
    }
}

PrunedModel::Result PrunedModel::forward(const DenseMatrix& x, const Options& options) const {
    if (x.cols() != config_.d_model) {
        throw ShapeError("model input has " + std::to_string(x.cols()) + " columns, expected " +
                         std::to_string(config_.d_model));
    }
    Result res;
    DenseMatrix u = x;
    const std::size_t n_run = std::min(kernels_.size(), options.last_block == static_cast<std::size_t>(-1)
                                                            ? kernels_.size()
                                                            : options.last_block + 1);
    for (std::size_t b = 0; b < n_run; ++b) {
        DenseMatrix normed = config_.rmsnorm ? rmsnorm(u, norm_gains_[b]) : u;
        const HookPoint in_hook{b, HookKind::UpGateInput};
        const HookPoint down_hook{b, HookKind::DownInput};

        FfnResult r = std::visit([&](const auto& k) { return k.forward(normed); }, kernels_[b]);

        res.ops += r.ops;
        res.tallies[in_hook] += r.input;
        res.tallies[down_hook] += r.hidden;
        if (options.keep_masks) {
            res.masks[in_hook] = std::move(r.input_mask);
            res.masks[down_hook] = std::move(r.hidden_mask);
        }
        if (options.capture.contains(in_hook)) res.captured[in_hook] = normed;
        if (options.capture.contains(down_hook)) res.captured[down_hook] = std::move(r.hidden_values);

        u = config_.residual ? add(u, r.y) : std::move(r.y);
    }
    res.y = std::move(u);
    return res;
}

PrunedModel apply_prune_specs(const Model& model, const PruneSpecMap& specs) {
    return PrunedModel(model, specs);
}

}  // namespace scap
