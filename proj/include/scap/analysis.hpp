#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "scap/calibrate.hpp"
#include "scap/model.hpp"

namespace scap {

// ---------------------------------------------------------------------------
// Synthetic streams

/// n_seq sequences of seq_len i.i.d. N(0, 1) vectors of width d.
ActivationStream gaussian_stream(std::size_t n_seq, std::size_t seq_len, std::size_t d,
                                 std::uint64_t seed);

/// Beam-search proxy: every row of a batch is sqrt(rho) * base + sqrt(1 - rho) * noise,
/// with one shared N(0, I) base vector per batch. rho = 0 gives independent rows.
class CorrelatedBatchGenerator {
public:
    CorrelatedBatchGenerator(std::size_t d, double rho, std::uint64_t seed);
    DenseMatrix next(std::size_t batch);
    double rho() const noexcept { return rho_; }

private:
    std::size_t d_;
    double rho_;
    std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------
// Sparsity measurement

struct HookObservation {
    HookPoint hook;
    double target_sparsity = 0.0;  // 0 for dense hooks
    double observed_sparsity = 0.0;
    SparsityTally tally;
};

struct SparsityReport {
    std::vector<HookObservation> hooks;  // forward order
    double up_gate_target = 0.0;
    double down_target = 0.0;
    double up_gate_observed = 0.0;  // pooled over blocks
    double down_observed = 0.0;
    double ffn_sparsity = 0.0;
    double macs_ratio = 1.0;
    OpCount ops;
    std::uint64_t sample_count = 0;  // vectors evaluated
};

/// Runs the pruned model over the stream and tallies what was pruned where.
SparsityReport measure_sparsity(const PrunedModel& model, const ActivationStream& eval_stream);

struct Evaluation {
    SparsityReport report;
    double reconstruction_error = 0.0;  // ||Y_pruned - Y_dense|| / ||Y_dense|| over the stream
};

Evaluation evaluate(const Model& dense, const PrunedModel& pruned,
                    const ActivationStream& eval_stream);

// ---------------------------------------------------------------------------
// Overlapping sparsity

/// Fraction of positions pruned in every one of the keep-masks (1 = kept).
double overlap_sparsity(std::span<const std::vector<std::uint8_t>> keep_masks);

/// Same, over rows [first, first + count) of a mask matrix.
double overlap_sparsity(const KeepMask& mask, std::size_t first, std::size_t count);

struct OverlapCurve {
    std::vector<std::size_t> batch_sizes;
    std::vector<double> overlap_sparsity;
    double per_vector_sparsity = 0.0;
};

/// Average overlapping sparsity at `hook` for each batch size. Batch size k
/// uses the k consecutive rows (cyclically) after every start row of a batch
/// of max(batch_sizes) rows, so each window of size k sits inside the window
/// of size k + 1 with the same start.
OverlapCurve overlap_curve(const PrunedModel& model, const HookPoint& hook,
                           CorrelatedBatchGenerator& generator,
                           std::span<const std::size_t> batch_sizes, std::size_t trials);

// ---------------------------------------------------------------------------
// Pareto sweep

struct SweepEntry {
    double target_up_gate = 0.0;
    double target_down = 0.0;
    SparsityReport report;
    double reconstruction_error = 0.0;
    double quality = 0.0;  // 1 - reconstruction_error
};

struct SweepResult {
    std::vector<SweepEntry> entries;  // grid_up major, grid_down minor
    std::vector<std::size_t> dominant;  // indices into entries, ascending
};

/// True when a is at least as good as b on (ffn_sparsity, quality) and strictly better on one.
bool dominates(const SweepEntry& a, const SweepEntry& b) noexcept;

std::vector<std::size_t> pareto_front(std::span<const SweepEntry> entries);

/// Number of worker threads: SCAP_THREADS when set (>= 1), else hardware concurrency.
std::size_t worker_threads();

/// Grid search over (up/gate target, down target). `plan` supplies everything
/// except the targets. With plan.sequential == false the statistics are
/// collected once and shared by all grid points.
SweepResult pareto_sweep(const Model& model, const ActivationStream& calib_stream,
                         const ActivationStream& eval_stream, std::span<const double> grid_up,
                         std::span<const double> grid_down, const CalibrationPlan& plan,
                         std::size_t threads = worker_threads());

// ---------------------------------------------------------------------------
// Mode-centering ablation

struct AblationRow {
    double target = 0.0;
    double observed_with = 0.0;
    double observed_without = 0.0;
    double err_with = 0.0;
    double err_without = 0.0;
    double eta = 0.0;  // first Down hook's shift in the centered variant
};

struct AblationResult {
    std::vector<AblationRow> rows;
};

/// Sweeps the Down-input target sparsity with and without mode centering.
/// Up/Gate inputs stay dense.
AblationResult mode_centering_ablation(const Model& model, const ActivationStream& calib_stream,
                                       const ActivationStream& eval_stream,
                                       std::span<const double> sparsity_grid,
                                       const ModeEstimator& estimator,
                                       std::size_t reservoir_capacity = LayerStats::kDefaultCapacity);

struct CurvePoint {
    double sparsity = 0.0;
    double error = 0.0;
};

/// Largest sparsity reachable with error <= budget, linearly interpolating
/// between the last point under budget and the next point above it. Points
/// are taken in order of increasing sparsity.
double achievable_sparsity(std::vector<CurvePoint> curve, double budget);

/// Fraction of samples with |x - eta| <= tau.
double sparsity_at_threshold(std::span<const float> samples, double tau, double eta);

}  // namespace scap
