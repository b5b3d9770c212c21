#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "scap/kernels.hpp"
#include "scap/prune.hpp"
#include "scap/tensor.hpp"

namespace scap {

enum class FfnKind { SwiGlu, GeluMlp };

const char* to_string(FfnKind kind) noexcept;
FfnKind parse_ffn_kind(const std::string& name);  // "swiglu" | "gelu"

struct BlockConfig {
    FfnKind ffn_kind = FfnKind::SwiGlu;
    std::size_t d_model = 64;
    std::size_t d_hidden = 256;
    std::size_t n_blocks = 1;
    bool residual = false;
    bool rmsnorm = false;
    // Constant added to every GELU-MLP Up bias; shifts the GELU output mode away from zero.
    double up_bias_offset = 0.0;
    // Weights are N(0, (init_gain)^2 / fan_in).
    double init_gain = 0.8;

    void validate() const;
    bool operator==(const BlockConfig&) const = default;
};

enum class HookKind { UpGateInput, DownInput };

/// An activation site feeding an FC layer: the Up/Gate input or the Down input of a block.
struct HookPoint {
    std::size_t block = 0;
    HookKind kind = HookKind::UpGateInput;

    /// Stable identifier such as "block2.down_in".
    std::string id() const;
    static HookPoint parse(const std::string& id);

    auto operator<=>(const HookPoint&) const = default;
};

using PruneSpecMap = std::map<HookPoint, PruneSpec>;

struct Block {
    std::variant<SwiGluWeights, GeluMlpWeights> ffn;
    DenseVector norm_gain;  // empty when rmsnorm is off
};

class PrunedModel;

/// Dense stack of FFN blocks with optional residual and RMSNorm; attention is omitted.
class Model {
public:
    Model(BlockConfig config, std::vector<Block> blocks);

    const BlockConfig& config() const noexcept { return config_; }
    const std::vector<Block>& blocks() const noexcept { return blocks_; }

    /// All hook points in forward order.
    std::vector<HookPoint> hook_points() const;
    /// Throws HookError for a block index past the end.
    void check_hook(const HookPoint& hook) const;

    struct Captured {
        DenseMatrix y;
        std::map<HookPoint, DenseMatrix> captured;
    };

    Captured forward_with_hooks(const DenseMatrix& x, const std::set<HookPoint>& hooks) const;
    DenseMatrix forward(const DenseMatrix& x) const;

    bool operator==(const Model& o) const;

private:
    friend class PrunedModel;

    BlockConfig config_;
    std::vector<Block> blocks_;
    std::shared_ptr<const PrunedModel> dense_;  // all stages dense
};

Model init_weights(const BlockConfig& config, std::uint64_t seed);

/// Model whose FC layers at the given hook points are replaced by sparse stages.
class PrunedModel {
public:
    PrunedModel(const Model& model, PruneSpecMap specs);

    const BlockConfig& config() const noexcept { return config_; }
    const PruneSpecMap& specs() const noexcept { return specs_; }

    struct Result {
        DenseMatrix y;
        OpCount ops;
        std::map<HookPoint, SparsityTally> tallies;  // every hook, pruned or not
        std::map<HookPoint, KeepMask> masks;         // filled only when requested
        std::map<HookPoint, DenseMatrix> captured;   // hook values before shift/prune
    };

    struct Options {
        bool keep_masks = false;
        std::set<HookPoint> capture;
        // Run only up to and including this block (forward order); useful for
        // sequential calibration. Default runs the full stack.
        std::size_t last_block = static_cast<std::size_t>(-1);
    };

    Result forward(const DenseMatrix& x, const Options& options) const;
    Result forward(const DenseMatrix& x) const { return forward(x, Options{}); }

private:
    using Kernel = std::variant<SwiGluKernel, GeluMlpKernel>;

    BlockConfig config_;
    PruneSpecMap specs_;
    std::vector<Kernel> kernels_;
    std::vector<DenseVector> norm_gains_;
};

PrunedModel apply_prune_specs(const Model& model, const PruneSpecMap& specs);

}  // namespace scap
