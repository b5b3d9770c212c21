#include "doctest.h"
#include "scap/analysis.hpp"
#include "scap/calibrate.hpp"
#include "scap/error.hpp"

using namespace scap;

namespace {

Model toy(std::size_t blocks, FfnKind kind = FfnKind::SwiGlu) {
    BlockConfig c;
    c.ffn_kind = kind;
    c.d_model = 16;
    c.d_hidden = 64;
    c.n_blocks = blocks;
    c.residual = true;
    return init_weights(c, 99);
}

}  // namespace

TEST_CASE("calibration produces one layer entry per hook") {
    const auto m = toy(3);
    CalibrationPlan plan;
    plan.targets = {{HookKind::DownInput, 0.5}};
    const auto cal = calibrate(m, gaussian_stream(2, 64, 16, 1), plan);
    CHECK(cal.layers.size() == 6);
    CHECK(cal.specs.size() == 3);
    for (const auto& [h, s] : cal.specs) {
        CHECK(h.kind == HookKind::DownInput);
        CHECK(s.layer_id == h.id());
        CHECK(s.target_sparsity == 0.5);
    }
    CHECK(cal.layers[0].layer_id == "block0.up_gate_in");
    CHECK(cal.layers[1].layer_id == "block0.down_in");
}

TEST_CASE("centering is applied only where the plan asks for it") {
    const auto m = toy(1, FfnKind::GeluMlp);
    CalibrationPlan plan;
    plan.targets = {{HookKind::UpGateInput, 0.3}, {HookKind::DownInput, 0.5}};
    const auto cal = calibrate(m, gaussian_stream(2, 64, 16, 2), plan);
    CHECK(cal.specs.at(HookPoint{0, HookKind::UpGateInput}).eta == 0.0);
    CHECK(cal.specs.at(HookPoint{0, HookKind::DownInput}).eta != 0.0);
    plan.center_down = false;
    const auto plain = calibrate(m, gaussian_stream(2, 64, 16, 2), plan);
    CHECK(plain.specs.at(HookPoint{0, HookKind::DownInput}).eta == 0.0);
}

TEST_CASE("sequential calibration sees pruned upstream activations") {
    const auto m = toy(2);
    CalibrationPlan plan;
    plan.targets = {{HookKind::UpGateInput, 0.6}, {HookKind::DownInput, 0.6}};
    const auto stream = gaussian_stream(2, 64, 16, 3);
    const auto seq = calibrate(m, stream, plan);
    plan.sequential = false;
    const auto one = calibrate(m, stream, plan);
    // The very first hook has nothing upstream, so both agree there.
    const HookPoint first{0, HookKind::UpGateInput};
    CHECK(seq.specs.at(first).tau == one.specs.at(first).tau);
    CHECK(seq.specs.at(HookPoint{1, HookKind::DownInput}).tau !=
          one.specs.at(HookPoint{1, HookKind::DownInput}).tau);
}

TEST_CASE("pooled scope shares one threshold per hook kind") {
    const auto m = toy(3);
    CalibrationPlan plan;
    plan.scope = ThresholdScope::PooledGroup;
    plan.targets = {{HookKind::UpGateInput, 0.4}, {HookKind::DownInput, 0.6}};
    const auto cal = calibrate(m, gaussian_stream(2, 64, 16, 4), plan);
    REQUIRE(cal.layers.size() == 2);
    CHECK(cal.layers[0].layer_id == "group.up_gate_in");
    CHECK(cal.layers[0].seen_count == 3u * 2u * 64u * 16u);
    const double tau_down = cal.specs.at(HookPoint{0, HookKind::DownInput}).tau;
    for (const auto& [h, s] : cal.specs) {
        CHECK(s.layer_id == h.id());
        if (h.kind == HookKind::DownInput) CHECK(s.tau == tau_down);
    }
}

TEST_CASE("calibration is deterministic") {
    const auto m = toy(2);
    CalibrationPlan plan;
    plan.targets = {{HookKind::UpGateInput, 0.4}, {HookKind::DownInput, 0.6}};
    plan.reservoir_capacity = 500;
    const auto stream = gaussian_stream(2, 64, 16, 5);
    const auto a = calibrate(m, stream, plan);
    const auto b = calibrate(m, stream, plan);
    CHECK(a.specs == b.specs);
    CHECK(a.layers == b.layers);
}

TEST_CASE("hook seeds differ between hooks") {
    CHECK(hook_seed(1, HookPoint{0, HookKind::UpGateInput}) != hook_seed(1, HookPoint{0, HookKind::DownInput}));
    CHECK(hook_seed(1, HookPoint{0, HookKind::DownInput}) != hook_seed(1, HookPoint{1, HookKind::DownInput}));
    CHECK(hook_seed(1, HookPoint{0, HookKind::DownInput}) != hook_seed(2, HookPoint{0, HookKind::DownInput}));
}

TEST_CASE("calibration rejects bad plans") {
    const auto m = toy(1);
    CalibrationPlan plan;
    CHECK_THROWS_AS(calibrate(m, {}, plan), CalibrationError);
    plan.targets = {{HookKind::DownInput, 1.5}};
    CHECK_THROWS_AS(calibrate(m, gaussian_stream(1, 4, 16, 1), plan), DomainError);
}
