#include "doctest.h"
#include "scap/analysis.hpp"
#include "scap/calibrate.hpp"
#include "scap/error.hpp"
#include "scap/model.hpp"
#include "support.hpp"

using namespace scap;

namespace {

BlockConfig small(FfnKind kind, std::size_t blocks = 1) {
    BlockConfig c;
    c.ffn_kind = kind;
    c.d_model = 16;
    c.d_hidden = 48;
    c.n_blocks = blocks;
    return c;
}

}  // namespace

TEST_CASE("same seed gives identical weights") {
    const auto c = small(FfnKind::SwiGlu, 2);
    CHECK(init_weights(c, 42) == init_weights(c, 42));
    CHECK_FALSE(init_weights(c, 42) == init_weights(c, 43));
}

TEST_CASE("fan-in scaling keeps layer output variance near one") {
    BlockConfig c;
    c.ffn_kind = FfnKind::GeluMlp;
    c.d_model = 64;
    c.d_hidden = 256;
    const auto m = init_weights(c, 3);
    const auto& w = std::get<GeluMlpWeights>(m.blocks()[0].ffn);
    std::mt19937_64 rng(4);
    const auto x = testing::random_matrix(512, 64, rng);
    const auto y = matmul(x, w.w_up);
    double ss = 0.0;
    for (float v : y.data()) ss += static_cast<double>(v) * v;
    const double var = ss / static_cast<double>(y.size());
    CHECK(var >= 0.5);
    CHECK(var <= 2.0);
}

TEST_CASE("Up bias offset moves the GELU output mode away from zero") {
    BlockConfig c = small(FfnKind::GeluMlp);
    c.d_model = 64;
    c.d_hidden = 256;
    c.up_bias_offset = 1.2;
    const auto m = init_weights(c, 5);
    const auto x = gaussian_stream(1, 512, 64, 6)[0];
    const HookPoint down{0, HookKind::DownInput};
    const auto cap = m.forward_with_hooks(x, {down});
    const auto& h = cap.captured.at(down);
    CHECK(estimate_mode(h.data(), ModeEstimator::kde()) > 0.2);
}

TEST_CASE("forward without hooks is a plain forward") {
    const auto m = init_weights(small(FfnKind::SwiGlu), 1);
    std::mt19937_64 rng(2);
    const auto x = testing::random_matrix(3, 16, rng);
    const auto cap = m.forward_with_hooks(x, {});
    CHECK(cap.y == m.forward(x));
    CHECK(cap.captured.empty());
    const auto& w = std::get<SwiGluWeights>(m.blocks()[0].ffn);
    CHECK(testing::max_abs_diff(m.forward(x), dense_swiglu(x, w).y) < 1e-6);
}

TEST_CASE("Down hook on a GELU block captures the GELU output") {
    const auto m = init_weights(small(FfnKind::GeluMlp), 1);
    std::mt19937_64 rng(3);
    const auto x = testing::random_matrix(4, 16, rng);
    const HookPoint down{0, HookKind::DownInput};
    const auto cap = m.forward_with_hooks(x, {down});
    const auto& w = std::get<GeluMlpWeights>(m.blocks()[0].ffn);
    auto h = matmul(x, w.w_up);
    add_bias(h, w.b_up);
    CHECK(cap.captured.at(down) == gelu(h));
}

TEST_CASE("capturing every hook of two blocks") {
    auto c = small(FfnKind::SwiGlu, 2);
    c.residual = true;
    c.rmsnorm = true;
    const auto m = init_weights(c, 8);
    std::mt19937_64 rng(9);
    const auto x = testing::random_matrix(5, 16, rng);
    const auto hooks = m.hook_points();
    const auto cap = m.forward_with_hooks(x, {hooks.begin(), hooks.end()});
    REQUIRE(cap.captured.size() == 4);
    for (const auto& [h, t] : cap.captured) {
        CHECK(t.rows() == 5);
        CHECK(t.cols() == (h.kind == HookKind::UpGateInput ? 16u : 48u));
    }
    // Hooks never change the output.
    CHECK(cap.y == m.forward(x));
}

TEST_CASE("hooks past the last block are rejected") {
    const auto m = init_weights(small(FfnKind::SwiGlu, 2), 1);
    CHECK_THROWS_AS(m.forward_with_hooks(DenseMatrix(1, 16), {HookPoint{2, HookKind::DownInput}}),
                    HookError);
    PruneSpecMap specs{{HookPoint{5, HookKind::UpGateInput}, PruneSpec{"x", 0.1, 0.0, 0.1}}};
    CHECK_THROWS_AS(apply_prune_specs(m, specs), HookError);
    CHECK_THROWS_AS(m.forward(DenseMatrix(1, 15)), ShapeError);
}

TEST_CASE("hook ids round-trip") {
    const HookPoint h{3, HookKind::DownInput};
    CHECK(h.id() == "block3.down_in");
    CHECK(HookPoint::parse("block3.down_in") == h);
    CHECK(HookPoint::parse("block0.up_gate_in") == HookPoint{0, HookKind::UpGateInput});
    CHECK_THROWS_AS(HookPoint::parse("block.down_in"), HookError);
    CHECK_THROWS_AS(HookPoint::parse("block1.attn_in"), HookError);
    CHECK_THROWS_AS(HookPoint::parse("layer1.down_in"), HookError);
    CHECK_THROWS_AS(HookPoint::parse("block1x.down_in"), HookError);
}

TEST_CASE("empty specs leave the output bitwise unchanged") {
    for (auto kind : {FfnKind::SwiGlu, FfnKind::GeluMlp}) {
        auto c = small(kind, 2);
        c.residual = true;
        const auto m = init_weights(c, 10);
        std::mt19937_64 rng(11);
        const auto x = testing::random_matrix(6, 16, rng);
        CHECK(apply_prune_specs(m, {}).forward(x).y == m.forward(x));
    }
}

TEST_CASE("zero thresholds with calibrated shifts keep a three-block stack") {
    for (auto kind : {FfnKind::SwiGlu, FfnKind::GeluMlp}) {
        auto c = small(kind, 3);
        c.residual = true;
        c.rmsnorm = true;
        c.up_bias_offset = 1.0;
        const auto m = init_weights(c, 12);
        CalibrationPlan plan;
        plan.targets = {{HookKind::UpGateInput, 0.5}, {HookKind::DownInput, 0.5}};
        plan.center_up_gate = true;
        plan.reservoir_capacity = 4096;
        const auto cal = calibrate(m, gaussian_stream(2, 64, 16, 13), plan);
        PruneSpecMap specs = cal.specs;
        bool any_shift = false;
        for (auto& [h, s] : specs) {
            s.tau = 0.0;
            any_shift |= s.eta != 0.0;
        }
        CHECK(any_shift);
        const auto x = gaussian_stream(1, 32, 16, 14)[0];
        CHECK(testing::max_abs_diff(apply_prune_specs(m, specs).forward(x).y, m.forward(x)) < 1e-4);
    }
}

TEST_CASE("calibrated specs hit their targets on held-out data") {
    auto c = small(FfnKind::SwiGlu, 2);
    c.d_model = 32;
    c.d_hidden = 96;
    const auto m = init_weights(c, 15);
    CalibrationPlan plan;
    plan.targets = {{HookKind::UpGateInput, 0.4}, {HookKind::DownInput, 0.6}};
    const auto cal = calibrate(m, gaussian_stream(8, 256, 32, 16), plan);
    const auto rep = measure_sparsity(apply_prune_specs(m, cal.specs), gaussian_stream(8, 256, 32, 17));
    for (const auto& h : rep.hooks) {
        CHECK(std::fabs(h.observed_sparsity - h.target_sparsity) <= 0.03);
    }
}

TEST_CASE("forward is deterministic") {
    const auto c = small(FfnKind::GeluMlp, 2);
    const auto x = gaussian_stream(1, 16, 16, 3)[0];
    CHECK(init_weights(c, 4).forward(x) == init_weights(c, 4).forward(x));
}

TEST_CASE("model construction validates blocks") {
    auto c = small(FfnKind::SwiGlu, 1);
    const auto m = init_weights(c, 1);
    CHECK_THROWS_AS(Model(c, {}), ShapeError);
    auto c2 = c;
    c2.rmsnorm = true;
    CHECK_THROWS_AS(Model(c2, m.blocks()), ShapeError);
    auto c3 = c;
    c3.d_model = 0;
    CHECK_THROWS_AS(init_weights(c3, 1), DomainError);
    CHECK(parse_ffn_kind("gelu") == FfnKind::GeluMlp);
    CHECK_THROWS_AS(parse_ffn_kind("relu"), DomainError);
}

TEST_CASE("pruned model reports per-hook tallies and masks") {
    const auto m = init_weights(small(FfnKind::GeluMlp, 2), 20);
    PruneSpecMap specs{{HookPoint{1, HookKind::DownInput}, PruneSpec{"block1.down_in", 0.1, 0.0, 0.5}}};
    const PrunedModel p(m, specs);
    PrunedModel::Options opt;
    opt.keep_masks = true;
    const auto x = gaussian_stream(1, 10, 16, 21)[0];
    const auto r = p.forward(x, opt);
    CHECK(r.tallies.size() == 4);
    CHECK(r.masks.size() == 4);
    CHECK(r.tallies.at(HookPoint{0, HookKind::DownInput}).pruned == 0);
    CHECK(r.tallies.at(HookPoint{1, HookKind::DownInput}).pruned ==
          r.masks.at(HookPoint{1, HookKind::DownInput}).kept.size() -
              r.masks.at(HookPoint{1, HookKind::DownInput}).count_kept());
}
