#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "scap/calib.hpp"
#include "scap/model.hpp"

namespace scap {

/// Sequences of activation vectors (one matrix per sequence, rows = tokens).
using ActivationStream = std::vector<DenseMatrix>;

/// Whether each hook gets its own threshold or one threshold per hook kind.
enum class ThresholdScope { PerLayer, PooledGroup };

/// How to derive prune specs for a model from a calibration stream.
struct CalibrationPlan {
    // Target sparsity per hook kind; a kind without an entry stays dense.
    std::map<HookKind, double> targets;
    ModeEstimator estimator = ModeEstimator::mean();
    bool center_up_gate = false;
    bool center_down = true;
    // Calibrate hook by hook in forward order with every upstream spec applied.
    // Ignored (one dense pass) for PooledGroup.
    bool sequential = true;
    ThresholdScope scope = ThresholdScope::PerLayer;
    std::size_t reservoir_capacity = LayerStats::kDefaultCapacity;
    std::uint64_t seed = kDefaultSeed;
    // Extra sparsity levels tabulated in the report (tau of |X| for each).
    std::vector<double> report_sparsities = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    // KDE settings used for the report's kde column and for ModeKind::Kde.
    std::size_t kde_grid_points = 2048;
};

struct CalibrationResult {
    PruneSpecMap specs;
    std::vector<LayerCalibration> layers;  // one per calibrated hook (or group), forward order
};

/// Seed for the reservoir of one hook, derived from the plan seed.
std::uint64_t hook_seed(std::uint64_t base, const HookPoint& hook);

/// Collects statistics for every hook of the dense model in a single pass.
std::map<HookPoint, LayerStats> collect_stats(const Model& model, const ActivationStream& stream,
                                              std::size_t capacity, std::uint64_t seed);

/// Per-layer specs from statistics gathered beforehand (one-pass calibration).
CalibrationResult calibrate_from_stats(const Model& model,
                                       const std::map<HookPoint, LayerStats>& stats,
                                       const CalibrationPlan& plan);

CalibrationResult calibrate(const Model& model, const ActivationStream& stream,
                            const CalibrationPlan& plan);

}  // namespace scap
