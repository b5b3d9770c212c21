#include "scap/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "scap/error.hpp"

namespace scap {

namespace {

void check_grid(std::span<const double> grid, const char* what) {
    for (double s : grid) {
        if (!(s >= 0.0 && s <= 1.0)) throw DomainError(std::string(what) + " value outside [0, 1]");
    }
}

double target_of(const PruneSpecMap& specs, HookKind kind) {
    for (const auto& [h, spec] : specs) {
        if (h.kind == kind) return spec.target_sparsity;
    }
    return 0.0;
}

}  // namespace

ActivationStream gaussian_stream(std::size_t n_seq, std::size_t seq_len, std::size_t d,
                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    ActivationStream out;
    out.reserve(n_seq);
    for (std::size_t s = 0; s < n_seq; ++s) {
        DenseMatrix m(seq_len, d);
        for (float& v : m.data()) v = static_cast<float>(normal(rng));
        out.push_back(std::move(m));
    }
    return out;
}

CorrelatedBatchGenerator::CorrelatedBatchGenerator(std::size_t d, double rho, std::uint64_t seed)
    : d_(d), rho_(rho), rng_(seed) {
    if (d == 0) throw DomainError("correlated generator needs d >= 1");
    if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("correlation rho must lie in [0, 1]");
}

DenseMatrix CorrelatedBatchGenerator::next(std::size_t batch) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> base(d_);
    for (double& b : base) b = normal(rng_);
    const double a = std::sqrt(rho_), c = std::sqrt(1.0 - rho_);
    DenseMatrix out(batch, d_);
    for (std::size_t r = 0; r < batch; ++r) {
        for (std::size_t j = 0; j < d_; ++j) {
            out(r, j) = static_cast<float>(a * base[j] + c * normal(rng_));
        }
    }
    return out;
}

SparsityReport measure_sparsity(const PrunedModel& model, const ActivationStream& eval_stream) {
    if (eval_stream.empty()) throw DomainError("measure_sparsity: evaluation stream is empty");
    std::map<HookPoint, SparsityTally> tallies;
    SparsityReport report;
    for (const auto& seq : eval_stream) {
        auto res = model.forward(seq);
        for (const auto& [h, t] : res.tallies) tallies[h] += t;
        report.ops += res.ops;
        report.sample_count += seq.rows();
    }
    SparsityTally up, down;
    for (const auto& [h, t] : tallies) {
        HookObservation obs;
        obs.hook = h;
        auto it = model.specs().find(h);
        obs.target_sparsity = it == model.specs().end() ? 0.0 : it->second.target_sparsity;
        obs.tally = t;
        obs.observed_sparsity = t.sparsity();
        report.hooks.push_back(obs);
        (h.kind == HookKind::UpGateInput ? up : down) += t;
    }
    report.up_gate_target = target_of(model.specs(), HookKind::UpGateInput);
    report.down_target = target_of(model.specs(), HookKind::DownInput);
    report.up_gate_observed = up.sparsity();
    report.down_observed = down.sparsity();
    report.ffn_sparsity = model.config().ffn_kind == FfnKind::SwiGlu
                              ? ffn_sparsity(report.up_gate_observed, report.down_observed)
                              : mlp_ffn_sparsity(report.up_gate_observed, report.down_observed);
    report.macs_ratio = report.ops.macs_ratio();
    return report;
}

Evaluation evaluate(const Model& dense, const PrunedModel& pruned,
                    const ActivationStream& eval_stream) {
    Evaluation ev;
    ev.report = measure_sparsity(pruned, eval_stream);
    double num = 0.0, den = 0.0;
    for (const auto& seq : eval_stream) {
        const DenseMatrix ref = dense.forward(seq);
        const DenseMatrix got = pruned.forward(seq).y;
        const auto r = ref.data();
        const auto g = got.data();
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double diff = static_cast<double>(g[i]) - r[i];
            num += diff * diff;
            den += static_cast<double>(r[i]) * r[i];
        }
    }
    ev.reconstruction_error = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
    return ev;
}

double overlap_sparsity(std::span<const std::vector<std::uint8_t>> keep_masks) {
    if (keep_masks.empty()) throw DomainError("overlap_sparsity: no masks");
    const std::size_t n = keep_masks.front().size();
    for (const auto& m : keep_masks) {
        if (m.size() != n) throw ShapeError("overlap_sparsity: masks differ in length");
    }
    if (n == 0) throw ShapeError("overlap_sparsity: empty masks");
    std::size_t common = 0;
    for (std::size_t j = 0; j < n; ++j) {
        bool all_pruned = true;
        for (const auto& m : keep_masks) {
            if (m[j]) {
                all_pruned = false;
                break;
            }
        }
        common += all_pruned;
    }
    return static_cast<double>(common) / static_cast<double>(n);
}

double overlap_sparsity(const KeepMask& mask, std::size_t first, std::size_t count) {
    if (count == 0 || first + count > mask.rows) throw ShapeError("overlap_sparsity: bad row range");
    std::vector<std::vector<std::uint8_t>> rows;
    for (std::size_t r = first; r < first + count; ++r) {
        const auto row = mask.row(r);
        rows.emplace_back(row.begin(), row.end());
    }
    return overlap_sparsity(rows);
}

OverlapCurve overlap_curve(const PrunedModel& model, const HookPoint& hook,
                           CorrelatedBatchGenerator& generator,
                           std::span<const std::size_t> batch_sizes, std::size_t trials) {
    if (batch_sizes.empty() || trials == 0) throw DomainError("overlap_curve: nothing to measure");
    if (!std::is_sorted(batch_sizes.begin(), batch_sizes.end()) || batch_sizes.front() == 0) {
        throw DomainError("overlap_curve: batch sizes must be ascending and >= 1");
    }
    if (hook.block >= model.config().n_blocks) throw HookError("overlap_curve: unknown hook " + hook.id());
    const std::size_t K = batch_sizes.back();

    PrunedModel::Options opt;
    opt.keep_masks = true;
    opt.last_block = hook.block;

    std::vector<std::uint64_t> common(batch_sizes.size(), 0);
    std::uint64_t pruned_total = 0, denom = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto res = model.forward(generator.next(K), opt);
        const KeepMask& mask = res.masks.at(hook);
        const std::size_t n = mask.cols;
        pruned_total += mask.rows * n - mask.count_kept();
        denom += K * n;
        // One window per start row; rows wrap around so every start sees k rows.
        std::vector<std::uint8_t> all_pruned(n);
        for (std::size_t start = 0; start < K; ++start) {
            std::fill(all_pruned.begin(), all_pruned.end(), 1);
            std::size_t next_k = 0;
            for (std::size_t k = 1; k <= K && next_k < batch_sizes.size(); ++k) {
                const auto row = mask.row((start + k - 1) % K);
                for (std::size_t j = 0; j < n; ++j) all_pruned[j] &= static_cast<std::uint8_t>(!row[j]);
                while (next_k < batch_sizes.size() && batch_sizes[next_k] == k) {
                    common[next_k] += std::count(all_pruned.begin(), all_pruned.end(), 1);
                    ++next_k;
                }
            }
        }
    }
    OverlapCurve curve;
    curve.batch_sizes.assign(batch_sizes.begin(), batch_sizes.end());
    for (auto c : common) curve.overlap_sparsity.push_back(static_cast<double>(c) / denom);
    curve.per_vector_sparsity = static_cast<double>(pruned_total) / denom;
    return curve;
}

bool dominates(const SweepEntry& a, const SweepEntry& b) noexcept {
    const double sa = a.report.ffn_sparsity, sb = b.report.ffn_sparsity;
    return sa >= sb && a.quality >= b.quality && (sa > sb || a.quality > b.quality);
}

std::vector<std::size_t> pareto_front(std::span<const SweepEntry> entries) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < entries.size() && !dominated; ++j) {
            dominated = j != i && dominates(entries[j], entries[i]);
        }
        if (!dominated) out.push_back(i);
    }
    return out;
}

std::size_t worker_threads() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SCAP_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) n = static_cast<std::size_t>(v);
    }
    return n;
}

SweepResult pareto_sweep(const Model& model, const ActivationStream& calib_stream,
                         const ActivationStream& eval_stream, std::span<const double> grid_up,
                         std::span<const double> grid_down, const CalibrationPlan& plan,
                         std::size_t threads) {
    check_grid(grid_up, "grid_up");
    check_grid(grid_down, "grid_down");
    if (calib_stream.empty()) throw CalibrationError("calibration stream is empty");

    std::optional<std::map<HookPoint, LayerStats>> shared;
    if (!plan.sequential && plan.scope == ThresholdScope::PerLayer) {
        shared = collect_stats(model, calib_stream, plan.reservoir_capacity, plan.seed);
    }

    SweepResult result;
    result.entries.resize(grid_up.size() * grid_down.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;

    auto work = [&] {
        for (std::size_t i; (i = next++) < result.entries.size();) {
            try {
                CalibrationPlan p = plan;
                p.targets = {{HookKind::UpGateInput, grid_up[i / grid_down.size()]},
                             {HookKind::DownInput, grid_down[i % grid_down.size()]}};
                auto cal = shared ? calibrate_from_stats(model, *shared, p)
                                  : calibrate(model, calib_stream, p);
                const PrunedModel pruned(model, cal.specs);
                auto ev = evaluate(model, pruned, eval_stream);
                SweepEntry& e = result.entries[i];
                e.target_up_gate = p.targets[HookKind::UpGateInput];
                e.target_down = p.targets[HookKind::DownInput];
                e.report = std::move(ev.report);
                e.reconstruction_error = ev.reconstruction_error;
                e.quality = 1.0 - ev.reconstruction_error;
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };

    const std::size_t n = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, result.entries.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < n; ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);

    result.dominant = pareto_front(result.entries);
    return result;
}

AblationResult mode_centering_ablation(const Model& model, const ActivationStream& calib_stream,
                                       const ActivationStream& eval_stream,
                                       std::span<const double> sparsity_grid,
                                       const ModeEstimator& estimator,
                                       std::size_t reservoir_capacity) {
    check_grid(sparsity_grid, "sparsity_grid");
    if (calib_stream.empty()) throw CalibrationError("calibration stream is empty");
    const auto stats = collect_stats(model, calib_stream, reservoir_capacity, kDefaultSeed);

    CalibrationPlan with;
    with.estimator = estimator;
    with.center_down = true;
    with.sequential = false;
    with.report_sparsities.clear();
    CalibrationPlan without = with;
    without.center_down = false;

    AblationResult out;
    for (double s : sparsity_grid) {
        with.targets = {{HookKind::DownInput, s}};
        without.targets = with.targets;
        const auto cw = calibrate_from_stats(model, stats, with);
        const auto co = calibrate_from_stats(model, stats, without);
        const auto ew = evaluate(model, PrunedModel(model, cw.specs), eval_stream);
        const auto eo = evaluate(model, PrunedModel(model, co.specs), eval_stream);
        AblationRow row;
        row.target = s;
        row.observed_with = ew.report.down_observed;
        row.observed_without = eo.report.down_observed;
        row.err_with = ew.reconstruction_error;
        row.err_without = eo.reconstruction_error;
        row.eta = cw.specs.at(HookPoint{0, HookKind::DownInput}).eta;
        out.rows.push_back(row);
    }
    return out;
}

double achievable_sparsity(std::vector<CurvePoint> curve, double budget) {
    std::stable_sort(curve.begin(), curve.end(),
                     [](const CurvePoint& a, const CurvePoint& b) { return a.sparsity < b.sparsity; });
    CurvePoint prev{0.0, 0.0};
    for (const auto& p : curve) {
        if (p.error > budget) {
            if (p.error == prev.error) return prev.sparsity;
            const double f = (budget - prev.error) / (p.error - prev.error);
            return prev.sparsity + std::clamp(f, 0.0, 1.0) * (p.sparsity - prev.sparsity);
        }
        prev = p;
    }
    return prev.sparsity;
}

double sparsity_at_threshold(std::span<const float> samples, double tau, double eta) {
    if (samples.empty()) return 0.0;
    std::size_t n = 0;
    for (float v : samples) n += std::abs(static_cast<double>(v) - eta) <= tau;
    return static_cast<double>(n) / static_cast<double>(samples.size());
}

}  // namespace scap
