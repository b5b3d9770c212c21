#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scap/tensor.hpp"

namespace scap {

inline constexpr std::uint64_t kDefaultSeed = 0x5CA9'2024'0001ULL;

enum class ModeKind { Mean, Median, Kde };
enum class BandwidthRule { Scott, Silverman, Fixed };

struct ModeEstimator {
    ModeKind kind = ModeKind::Mean;
    std::size_t kde_grid_points = 2048;
    BandwidthRule bandwidth_rule = BandwidthRule::Scott;
    double fixed_bandwidth = 0.0;  // used by BandwidthRule::Fixed

    static ModeEstimator mean() { return {}; }
    static ModeEstimator median() { return {.kind = ModeKind::Median}; }
    static ModeEstimator kde(BandwidthRule rule = BandwidthRule::Scott,
                             std::size_t grid_points = 2048, double fixed = 0.0) {
        return {ModeKind::Kde, grid_points, rule, fixed};
    }

    /// Throws DomainError on an unusable configuration.
    void validate() const;
};

const char* to_string(ModeKind kind) noexcept;
/// Parses "mean", "median" or "kde"; throws DomainError otherwise.
ModeKind parse_mode_kind(const std::string& name);

/// Per-layer calibration accumulator.
///
/// Keeps two aligned reservoirs filled by Algorithm R: raw activation values
/// and their magnitudes. Slot i of both reservoirs always refers to the same
/// stream element, so abs_reservoir()[i] == |raw_reservoir()[i]|.
class LayerStats {
public:
    static constexpr std::size_t kDefaultCapacity = std::size_t{1} << 20;

    explicit LayerStats(std::string layer_id, std::size_t capacity = kDefaultCapacity,
                        std::uint64_t seed = kDefaultSeed);

    void observe(std::span<const float> values);
    void observe(const DenseMatrix& activations) { observe(activations.data()); }

    const std::string& layer_id() const noexcept { return layer_id_; }
    std::uint64_t seen_count() const noexcept { return seen_; }
    std::size_t capacity() const noexcept { return capacity_; }
    std::uint64_t seed() const noexcept { return seed_; }
    const std::vector<float>& raw_reservoir() const noexcept { return raw_; }
    const std::vector<float>& abs_reservoir() const noexcept { return abs_; }

    /// Copy under another id, e.g. to pool shards of different layers into one group.
    LayerStats with_layer_id(std::string id) const {
        LayerStats copy = *this;
        copy.layer_id_ = std::move(id);
        return copy;
    }

private:
    friend LayerStats merge(const LayerStats& a, const LayerStats& b);

    void push(float v);

    std::string layer_id_;
    std::size_t capacity_;
    std::uint64_t seed_;
    std::uint64_t seen_ = 0;
    std::vector<float> raw_;
    std::vector<float> abs_;
    std::mt19937_64 rng_;
};

/// Functional form: returns stats after observing activations.
LayerStats observe(LayerStats stats, const DenseMatrix& activations);

/// Linear-interpolation quantile of an ascending-sorted sample.
double sorted_quantile(std::span<const double> sorted, double q);

/// q-quantile of |X| over the reservoir. Throws CalibrationError when empty.
double quantile_threshold(const LayerStats& stats, double target_sparsity);

/// Thresholds for several targets with a single sort.
std::vector<double> quantile_thresholds(const LayerStats& stats, std::span<const double> targets);

/// q-quantile of |X - eta|: the threshold after mode centering.
double centered_quantile_threshold(const LayerStats& stats, double target_sparsity, double eta);

double estimate_mode(const LayerStats& stats, const ModeEstimator& estimator);

/// Mode of a raw sample; the workhorse behind estimate_mode.
double estimate_mode(std::span<const float> samples, const ModeEstimator& estimator);

/// Bandwidth picked by `estimator.bandwidth_rule` for the given sample.
double kde_bandwidth(std::span<const float> samples, const ModeEstimator& estimator);

/// Weighted reservoir union of two shards of the same layer.
LayerStats merge(const LayerStats& a, const LayerStats& b);

struct EtaEstimates {
    double mean = 0.0;
    double median = 0.0;
    double kde = 0.0;

    double get(ModeKind kind) const noexcept;
    bool operator==(const EtaEstimates&) const = default;
};

/// What the calibration report stores for one layer.
struct LayerCalibration {
    std::string layer_id;
    std::uint64_t seen_count = 0;
    std::vector<std::pair<double, double>> tau_by_sparsity;  // (s, tau) ascending in s
    EtaEstimates eta;
    std::uint64_t seed = 0;

    bool operator==(const LayerCalibration&) const = default;
};

LayerCalibration summarize(const LayerStats& stats, std::span<const double> sparsities,
                           const ModeEstimator& kde_config = ModeEstimator::kde());

}  // namespace scap
