#include "scap/calibrate.hpp"

#include "scap/error.hpp"

namespace scap {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

bool centered(const CalibrationPlan& plan, HookKind kind) {
    return kind == HookKind::UpGateInput ? plan.center_up_gate : plan.center_down;
}

PruneSpec spec_from_stats(const LayerStats& stats, const CalibrationPlan& plan, HookKind kind,
                          double target) {
    PruneSpec spec;
    spec.layer_id = stats.layer_id();
    spec.target_sparsity = target;
    if (centered(plan, kind)) {
        auto est = plan.estimator;
        est.kde_grid_points = plan.kde_grid_points;
        spec.eta = estimate_mode(stats, est);
        spec.tau = centered_quantile_threshold(stats, target, spec.eta);
    } else {
        spec.tau = quantile_threshold(stats, target);
    }
    return spec;
}

const char* group_id(HookKind kind) {
    return kind == HookKind::UpGateInput ? "group.up_gate_in" : "group.down_in";
}

void validate_plan(const CalibrationPlan& plan, const ActivationStream& stream) {
    if (stream.empty()) throw CalibrationError("calibration stream is empty");
    for (const auto& [kind, s] : plan.targets) {
        if (!(s >= 0.0 && s <= 1.0)) throw DomainError("calibration target outside [0, 1]");
    }
    plan.estimator.validate();
}

ModeEstimator report_kde(const CalibrationPlan& plan) {
    auto kde = ModeEstimator::kde(BandwidthRule::Scott, plan.kde_grid_points);
    if (plan.estimator.kind == ModeKind::Kde) {
        kde = plan.estimator;
        kde.kde_grid_points = plan.kde_grid_points;
    }
    return kde;
}

}  // namespace

std::uint64_t hook_seed(std::uint64_t base, const HookPoint& hook) {
    return splitmix64(base ^ splitmix64(hook.block * 2 + (hook.kind == HookKind::DownInput)));
}

std::map<HookPoint, LayerStats> collect_stats(const Model& model, const ActivationStream& stream,
                                              std::size_t capacity, std::uint64_t seed) {
    const auto hooks = model.hook_points();
    std::map<HookPoint, LayerStats> stats;
    for (const auto& h : hooks) stats.emplace(h, LayerStats(h.id(), capacity, hook_seed(seed, h)));
    const std::set<HookPoint> wanted(hooks.begin(), hooks.end());
    for (const auto& seq : stream) {
        auto cap = model.forward_with_hooks(seq, wanted);
        for (auto& [h, m] : cap.captured) stats.at(h).observe(m);
    }
    return stats;
}

CalibrationResult calibrate_from_stats(const Model& model,
                                       const std::map<HookPoint, LayerStats>& stats,
                                       const CalibrationPlan& plan) {
    plan.estimator.validate();
    CalibrationResult result;
    const auto kde_cfg = report_kde(plan);
    for (const auto& h : model.hook_points()) {
        const auto& st = stats.at(h);
        result.layers.push_back(summarize(st, plan.report_sparsities, kde_cfg));
        auto it = plan.targets.find(h.kind);
        if (it != plan.targets.end()) {
            result.specs.emplace(h, spec_from_stats(st, plan, h.kind, it->second));
        }
    }
    return result;
}

CalibrationResult calibrate(const Model& model, const ActivationStream& stream,
                            const CalibrationPlan& plan) {
    validate_plan(plan, stream);
    CalibrationResult result;
    const auto kde_cfg = report_kde(plan);

    if (plan.scope == ThresholdScope::PooledGroup) {
        auto per_hook = collect_stats(model, stream, plan.reservoir_capacity, plan.seed);
        for (HookKind kind : {HookKind::UpGateInput, HookKind::DownInput}) {
            std::optional<LayerStats> pooled;
            for (auto& [h, st] : per_hook) {
                if (h.kind != kind) continue;
                auto shard = st.with_layer_id(group_id(kind));
                pooled = pooled ? merge(*pooled, shard) : std::move(shard);
            }
            if (!pooled) continue;
            result.layers.push_back(summarize(*pooled, plan.report_sparsities, kde_cfg));
            auto it = plan.targets.find(kind);
            if (it == plan.targets.end()) continue;
            const PruneSpec shared = spec_from_stats(*pooled, plan, kind, it->second);
            for (const auto& h : model.hook_points()) {
                if (h.kind != kind) continue;
                PruneSpec s = shared;
                s.layer_id = h.id();
                result.specs.emplace(h, s);
            }
        }
        return result;
    }

    if (!plan.sequential) {
        return calibrate_from_stats(model, collect_stats(model, stream, plan.reservoir_capacity,
                                                         plan.seed),
                                    plan);
    }

    // Sequential: each hook sees activations produced by the already-pruned upstream.
    for (const auto& h : model.hook_points()) {
        PrunedModel current(model, result.specs);
        PrunedModel::Options opt;
        opt.capture = {h};
        opt.last_block = h.block;
        LayerStats st(h.id(), plan.reservoir_capacity, hook_seed(plan.seed, h));
        for (const auto& seq : stream) {
            auto res = current.forward(seq, opt);
            st.observe(res.captured.at(h));
        }
        result.layers.push_back(summarize(st, plan.report_sparsities, kde_cfg));
        auto it = plan.targets.find(h.kind);
        if (it != plan.targets.end()) {
            result.specs.emplace(h, spec_from_stats(st, plan, h.kind, it->second));
        }
    }
    return result;
}

}  // namespace scap
