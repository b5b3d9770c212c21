#include "scap/calib.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scap/error.hpp"

namespace scap {

namespace {

constexpr double kKernelCutoff = 8.0;  // bandwidths; exp(-32) is below float resolution

std::vector<double> sorted_copy(std::span<const float> values) {
    std::vector<double> out(values.begin(), values.end());
    std::sort(out.begin(), out.end());
    return out;
}

void require_non_empty(const LayerStats& stats) {
    if (stats.raw_reservoir().empty()) {
        throw CalibrationError("layer '" + stats.layer_id() + "' has no calibration samples");
    }
}

void require_unit(double s) {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("target sparsity outside [0, 1]");
}

double sample_stddev(std::span<const float> x) {
    if (x.size() < 2) return 0.0;
    double mean = 0.0;
    for (float v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (float v : x) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

// Gaussian KDE evaluated on an evenly spaced grid over [min, max]. Samples
// are linearly binned onto the grid first, then the bin weights are
// convolved with the truncated kernel.
double kde_argmax(std::span<const float> samples, const ModeEstimator& est) {
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *lo_it, hi = *hi_it;
    if (lo == hi) return lo;
    const double bw = kde_bandwidth(samples, est);
    if (!(bw > 0.0)) return lo;

    const std::size_t m = est.kde_grid_points;
    const double step = (hi - lo) / static_cast<double>(m - 1);
    std::vector<double> weight(m, 0.0);
    for (float v : samples) {
        const double pos = (v - lo) / step;
        auto i = static_cast<std::size_t>(pos);
        if (i >= m - 1) i = m - 2;
        const double frac = pos - static_cast<double>(i);
        weight[i] += 1.0 - frac;
        weight[i + 1] += frac;
    }

    const auto reach = static_cast<std::ptrdiff_t>(
        std::min<double>(static_cast<double>(m), std::ceil(kKernelCutoff * bw / step)));
    std::vector<double> kernel(static_cast<std::size_t>(reach) + 1);
    for (std::ptrdiff_t k = 0; k <= reach; ++k) {
        const double u = static_cast<double>(k) * step / bw;
        kernel[static_cast<std::size_t>(k)] = std::exp(-0.5 * u * u);
    }

    const auto mi = static_cast<std::ptrdiff_t>(m);
    double best = -1.0;
    std::ptrdiff_t best_j = 0;
    for (std::ptrdiff_t j = 0; j < mi; ++j) {
        double dens = 0.0;
        const std::ptrdiff_t first = std::max<std::ptrdiff_t>(0, j - reach);
        const std::ptrdiff_t last = std::min<std::ptrdiff_t>(mi - 1, j + reach);
        for (std::ptrdiff_t i = first; i <= last; ++i) {
            dens += weight[static_cast<std::size_t>(i)] *
                    kernel[static_cast<std::size_t>(std::abs(i - j))];
        }
        if (dens > best) {
            best = dens;
            best_j = j;
        }
    }
    return lo + static_cast<double>(best_j) * step;
}

}  // namespace

void ModeEstimator::validate() const {
    if (kind == ModeKind::Kde) {
        if (kde_grid_points < 2) throw DomainError("KDE needs at least 2 grid points");
        if (bandwidth_rule == BandwidthRule::Fixed && !(fixed_bandwidth > 0.0)) {
            throw DomainError("fixed KDE bandwidth must be positive");
        }
    }
}

const char* to_string(ModeKind kind) noexcept {
    switch (kind) {
        case ModeKind::Mean: return "mean";
        case ModeKind::Median: return "median";
        case ModeKind::Kde: return "kde";
    }
    return "?";
}

ModeKind parse_mode_kind(const std::string& name) {
    if (name == "mean") return ModeKind::Mean;
    if (name == "median") return ModeKind::Median;
    if (name == "kde") return ModeKind::Kde;
    throw DomainError("unknown mode estimator '" + name + "'");
}

LayerStats::LayerStats(std::string layer_id, std::size_t capacity, std::uint64_t seed)
    : layer_id_(std::move(layer_id)), capacity_(capacity), seed_(seed), rng_(seed) {
    if (capacity_ == 0) throw DomainError("reservoir capacity must be positive");
}

void LayerStats::push(float v) {
    if (raw_.size() < capacity_) {
        raw_.push_back(v);
        abs_.push_back(std::fabs(v));
    } else {
        std::uniform_int_distribution<std::uint64_t> pick(0, seen_);
        const std::uint64_t j = pick(rng_);
        if (j < capacity_) {
            raw_[j] = v;
            abs_[j] = std::fabs(v);
        }
    }
    ++seen_;
}

void LayerStats::observe(std::span<const float> values) {
    for (float v : values) push(v);
}

LayerStats observe(LayerStats stats, const DenseMatrix& activations) {
    stats.observe(activations);
    return stats;
}

double sorted_quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw CalibrationError("quantile of an empty sample");
    require_unit(q);
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile_threshold(const LayerStats& stats, double target_sparsity) {
    const double targets[] = {target_sparsity};
    return quantile_thresholds(stats, targets).front();
}

std::vector<double> quantile_thresholds(const LayerStats& stats,
                                        std::span<const double> targets) {
    require_non_empty(stats);
    const auto sorted = sorted_copy(stats.abs_reservoir());
    std::vector<double> out;
    out.reserve(targets.size());
    for (double s : targets) out.push_back(sorted_quantile(sorted, s));
    return out;
}

double centered_quantile_threshold(const LayerStats& stats, double target_sparsity, double eta) {
    require_non_empty(stats);
    std::vector<double> dev;
    dev.reserve(stats.raw_reservoir().size());
    for (float v : stats.raw_reservoir()) {
        // Mirrors the kernel, which subtracts eta in float.
        dev.push_back(std::fabs(v - static_cast<float>(eta)));
    }
    std::sort(dev.begin(), dev.end());
    return sorted_quantile(dev, target_sparsity);
}

double kde_bandwidth(std::span<const float> samples, const ModeEstimator& est) {
    const auto n = static_cast<double>(samples.size());
    switch (est.bandwidth_rule) {
        case BandwidthRule::Scott: return sample_stddev(samples) * std::pow(n, -0.2);
        case BandwidthRule::Silverman:
            return sample_stddev(samples) * std::pow(n * 0.75, -0.2);
        case BandwidthRule::Fixed: return est.fixed_bandwidth;
    }
    return 0.0;
}

double estimate_mode(std::span<const float> samples, const ModeEstimator& est) {
    est.validate();
    if (samples.empty()) throw CalibrationError("mode of an empty sample");
    switch (est.kind) {
        case ModeKind::Mean: {
            double sum = 0.0;
            for (float v : samples) sum += v;
            return sum / static_cast<double>(samples.size());
        }
        case ModeKind::Median: return sorted_quantile(sorted_copy(samples), 0.5);
        case ModeKind::Kde: return kde_argmax(samples, est);
    }
    return 0.0;
}

double estimate_mode(const LayerStats& stats, const ModeEstimator& est) {
    require_non_empty(stats);
    return estimate_mode(stats.raw_reservoir(), est);
}

LayerStats merge(const LayerStats& a, const LayerStats& b) {
    if (a.layer_id_ != b.layer_id_) {
        throw MergeError("cannot merge '" + a.layer_id_ + "' with '" + b.layer_id_ + "'");
    }
    if (a.capacity_ != b.capacity_) throw MergeError("reservoir capacities differ");
    if (a.seen_ == 0) return b;
    if (b.seen_ == 0) return a;

    LayerStats out(a.layer_id_, a.capacity_, a.seed_);
    std::seed_seq seq{a.seed_, b.seed_, a.seen_, b.seen_};
    out.rng_.seed(seq);
    out.seen_ = a.seen_ + b.seen_;

    if (a.raw_.size() + b.raw_.size() <= a.capacity_ &&
        out.seen_ == a.raw_.size() + b.raw_.size()) {
        out.raw_ = a.raw_;
        out.raw_.insert(out.raw_.end(), b.raw_.begin(), b.raw_.end());
    } else {
        // Draw capacity slots without replacement from the pooled stream: each
        // slot comes from shard A with probability proportional to the number
        // of A's stream elements not yet drawn. Each reservoir is a uniform
        // sample of its shard, so a random permutation of it supplies the draws.
        auto perm_a = a.raw_;
        auto perm_b = b.raw_;
        std::shuffle(perm_a.begin(), perm_a.end(), out.rng_);
        std::shuffle(perm_b.begin(), perm_b.end(), out.rng_);
        std::uint64_t left_a = a.seen_, left_b = b.seen_;
        std::size_t next_a = 0, next_b = 0;
        const std::size_t target = std::min<std::uint64_t>(a.capacity_, out.seen_);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        out.raw_.reserve(target);
        while (out.raw_.size() < target) {
            const double p_a =
                static_cast<double>(left_a) / static_cast<double>(left_a + left_b);
            const bool take_a = next_b == perm_b.size() ||
                                (next_a < perm_a.size() && unit(out.rng_) < p_a);
            if (take_a) {
                out.raw_.push_back(perm_a[next_a++]);
                --left_a;
            } else {
                out.raw_.push_back(perm_b[next_b++]);
                --left_b;
            }
        }
    }
    out.abs_.resize(out.raw_.size());
    std::transform(out.raw_.begin(), out.raw_.end(), out.abs_.begin(),
                   [](float v) { return std::fabs(v); });
    return out;
}

double EtaEstimates::get(ModeKind kind) const noexcept {
    switch (kind) {
        case ModeKind::Mean: return mean;
        case ModeKind::Median: return median;
        case ModeKind::Kde: return kde;
    }
    return mean;
}

LayerCalibration summarize(const LayerStats& stats, std::span<const double> sparsities,
                           const ModeEstimator& kde_config) {
    LayerCalibration out;
    out.layer_id = stats.layer_id();
    out.seen_count = stats.seen_count();
    out.seed = stats.seed();
    std::vector<double> s(sparsities.begin(), sparsities.end());
    std::sort(s.begin(), s.end());
    const auto taus = quantile_thresholds(stats, s);
    for (std::size_t i = 0; i < s.size(); ++i) out.tau_by_sparsity.emplace_back(s[i], taus[i]);
    out.eta.mean = estimate_mode(stats, ModeEstimator::mean());
    out.eta.median = estimate_mode(stats, ModeEstimator::median());
    auto kde = kde_config;
    kde.kind = ModeKind::Kde;
    out.eta.kde = estimate_mode(stats, kde);
    return out;
}

}  // namespace scap
