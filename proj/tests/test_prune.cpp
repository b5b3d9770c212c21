#include "doctest.h"
#include "scap/calib.hpp"
#include "scap/error.hpp"
#include "scap/prune.hpp"
#include "support.hpp"

using namespace scap;

namespace {

DenseMatrix dense_affine(const DenseMatrix& x, const DenseMatrix& w, const DenseVector& b) {
    auto y = matmul(x, w);
    add_bias(y, b);
    return y;
}

}  // namespace

TEST_CASE("pruning at zero keeps every nonzero value") {
    const DenseMatrix x{{0.0f, 1.5f, -2.0f}, {3.0f, 0.0f, -0.25f}};
    const auto p = prune_activations(x, 0.0);
    CHECK(p.values == x);
    CHECK(p.mask.count_kept() == 4);
    CHECK_FALSE(p.mask(0, 0));
    CHECK_FALSE(p.mask(1, 1));
}

TEST_CASE("values equal to the threshold are pruned") {
    const auto p = prune_activations(DenseMatrix{{0.1f, -0.5f, 0.9f}}, 0.5);
    CHECK(p.values == DenseMatrix{{0.0f, 0.0f, 0.9f}});
    CHECK(p.mask.kept == std::vector<std::uint8_t>{0, 0, 1});
}

TEST_CASE("calibrated threshold gives the requested zero fraction") {
    std::mt19937_64 rng(100);
    const auto calib = testing::random_matrix(100, 100, rng);
    const auto held_out = testing::random_matrix(100, 100, rng);
    LayerStats st("x");
    st.observe(calib);
    const auto p = prune_activations(held_out, quantile_threshold(st, 0.3));
    const double zero_frac = 1.0 - static_cast<double>(p.mask.count_kept()) / 1e4;
    CHECK(std::fabs(zero_frac - 0.3) < 0.02);
}

TEST_CASE("pruning is monotone in the threshold") {
    std::mt19937_64 rng(7);
    const auto x = testing::random_matrix(20, 50, rng);
    std::size_t prev_kept = x.size() + 1;
    for (double tau = 0.0; tau < 3.0; tau += 0.1) {
        const auto kept = prune_activations(x, tau).mask.count_kept();
        CHECK(kept <= prev_kept);
        prev_kept = kept;
    }
}

TEST_CASE("negative threshold is rejected") {
    CHECK_THROWS_AS(prune_activations(DenseMatrix(1, 1), -0.1), DomainError);
}

TEST_CASE("zero shift leaves the bias untouched") {
    std::mt19937_64 rng(1);
    const auto w = testing::random_matrix(6, 4, rng);
    const auto b = testing::random_vector(4, rng);
    const auto layer = build_sparse_linear(w, b, PruneSpec{"l", 0.3, 0.0, 0.5});
    CHECK(layer.bias_fused() == b);
    CHECK(layer.tau() == 0.3);
    CHECK(layer.eta() == 0.0);
}

TEST_CASE("bias fusion adds the shifted column sums") {
    const DenseMatrix ones(3, 2, 1.0f);
    const auto layer = build_sparse_linear(ones, DenseVector{0, 0}, PruneSpec{"l", 0.0, 2.0, 0.0});
    CHECK(layer.bias_fused() == DenseVector{6, 6});

    std::mt19937_64 rng(2);
    const auto w = testing::random_matrix(9, 5, rng);
    const auto b = testing::random_vector(5, rng);
    const double eta = -0.61;
    const SparseLinear l2(w, b, 0.0, eta);
    for (std::size_t j = 0; j < 5; ++j) {
        long double sum = 0.0L;
        for (std::size_t k = 0; k < 9; ++k) sum += w(k, j);
        CHECK(l2.bias_fused()[j] == doctest::Approx(static_cast<double>(b[j] + eta * sum)).epsilon(1e-6));
    }
}

TEST_CASE("shifted layer at zero threshold reproduces the dense layer") {
    std::mt19937_64 rng(3);
    const auto w = testing::random_matrix(8, 4, rng);
    const auto b = testing::random_vector(4, rng);
    const auto layer = build_sparse_linear(w, b, PruneSpec{"l", 0.0, 0.37, 0.0});
    const DenseMatrix ones(1, 8, 1.0f);
    CHECK(testing::max_abs_diff(layer.forward(ones).y, dense_affine(ones, w, b)) < 1e-5);
}

TEST_CASE("zero threshold and zero shift match matmul plus bias") {
    std::mt19937_64 rng(4);
    const auto w = testing::random_matrix(32, 16, rng);
    const auto b = testing::random_vector(16, rng);
    const auto x = testing::random_matrix(5, 32, rng);
    const SparseLinear layer(w, b, 0.0, 0.0);
    CHECK(testing::max_abs_diff(layer.forward(x).y, dense_affine(x, w, b)) < 1e-6);
}

TEST_CASE("mode centering keeps the layer function for random shifts") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> eta_dist(-3.0, 3.0);
    for (int t = 0; t < 20; ++t) {
        const auto w = testing::random_matrix(40, 24, rng, 1.0 / std::sqrt(40.0));
        const auto b = testing::random_vector(24, rng);
        const auto x = testing::random_matrix(3, 40, rng);
        const SparseLinear layer(w, b, 0.0, eta_dist(rng));
        CHECK(testing::max_abs_diff(layer.forward(x).y, dense_affine(x, w, b)) < 1e-5);
    }
}

TEST_CASE("static shift agrees with the per-row dynamic reference") {
    std::mt19937_64 rng(6);
    const auto w = testing::random_matrix(16, 8, rng, 0.25);
    const auto b = testing::random_vector(8, rng);
    const auto x = testing::random_matrix(4, 16, rng);
    const double eta = 0.4, tau = 0.3;
    const SparseLinear layer(w, b, tau, eta);
    const std::vector<double> etas(4, eta);
    CHECK(testing::max_abs_diff(layer.forward(x).y, forward_dynamic_eta(w, b, tau, x, etas)) < 1e-5);
    // A different shift per row at tau 0 is still the dense function.
    const std::vector<double> varied{-1.0, 0.0, 0.5, 2.0};
    CHECK(testing::max_abs_diff(forward_dynamic_eta(w, b, 0.0, x, varied), dense_affine(x, w, b)) < 1e-5);
}

TEST_CASE("MAC count equals surviving channels times output width") {
    std::mt19937_64 rng(8);
    const auto w = testing::random_matrix(128, 64, rng);
    const DenseVector b(64);
    // 64 entries at 0.1 (below tau after the shift), 64 at 2.0 (above).
    DenseMatrix x(1, 128);
    for (std::size_t k = 0; k < 128; ++k) x(0, k) = (k % 2 == 0) ? 0.1f : 2.0f;
    const SparseLinear layer(w, b, 0.5, 0.05);
    const auto r = layer.forward(x);
    CHECK(r.mask.count_kept() == 64);
    CHECK(r.ops.macs == 64u * 64u);
    CHECK(r.ops.dense_macs == 128u * 64u);
    CHECK(r.input.pruned == 64);
}

TEST_CASE("MAC count invariant on random batches") {
    std::mt19937_64 rng(9);
    const auto w = testing::random_matrix(30, 11, rng);
    const SparseLinear layer(w, DenseVector(11), 0.7, -0.2);
    for (int t = 0; t < 10; ++t) {
        const auto x = testing::random_matrix(1 + t, 30, rng);
        const auto r = layer.forward(x);
        CHECK(r.ops.macs == 11 * r.mask.count_kept());
        CHECK(r.input.total == x.size());
        CHECK(r.input.pruned + r.mask.count_kept() == x.size());
    }
}

TEST_CASE("output error grows with the threshold on nonnegative layers") {
    // With x >= 0 and W >= 0 every pruned term moves each output the same way.
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (int t = 0; t < 10; ++t) {
        DenseMatrix w(64, 32), x(8, 64);
        for (auto& v : w.data()) v = u(rng) * 0.125f;
        for (auto& v : x.data()) v = u(rng) * 2.0f;
        const auto b = testing::random_vector(32, rng);
        const auto y0 = SparseLinear(w, b, 0.0, 0.0).forward(x).y;
        double prev = 0.0;
        for (double tau = 0.0; tau <= 2.0; tau += 0.05) {
            const double err = testing::max_abs_diff(SparseLinear(w, b, tau, 0.0).forward(x).y, y0);
            CHECK(err >= prev - 1e-6);
            prev = err;
        }
    }
}

TEST_CASE("average output error grows with the threshold on random layers") {
    // Cancellation can make a single layer's error dip, so this averages over many.
    std::mt19937_64 rng(11);
    const std::vector<double> taus{0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
    std::vector<double> mean_err(taus.size(), 0.0);
    for (int t = 0; t < 50; ++t) {
        const auto w = testing::random_matrix(64, 32, rng, 0.125);
        const auto b = testing::random_vector(32, rng);
        const auto x = testing::random_matrix(8, 64, rng);
        const auto y0 = SparseLinear(w, b, 0.0, 0.0).forward(x).y;
        for (std::size_t i = 0; i < taus.size(); ++i) {
            mean_err[i] += testing::max_abs_diff(SparseLinear(w, b, taus[i], 0.0).forward(x).y, y0) / 50.0;
        }
    }
    CHECK(mean_err[0] == 0.0);
    for (std::size_t i = 1; i < taus.size(); ++i) CHECK(mean_err[i] > mean_err[i - 1]);
}

TEST_CASE("construction and forward validate shapes") {
    CHECK_THROWS_AS(SparseLinear(DenseMatrix(4, 3), DenseVector(2), 0.0, 0.0), ShapeError);
    CHECK_THROWS_AS(SparseLinear(DenseMatrix(4, 3), DenseVector(3), -1.0, 0.0), DomainError);
    const SparseLinear layer(DenseMatrix(4, 3), DenseVector(3), 0.0, 0.0);
    CHECK_THROWS_AS(layer.forward(DenseMatrix(1, 5)), ShapeError);
    CHECK_THROWS_AS(build_sparse_linear(DenseMatrix(4, 3), DenseVector(3), PruneSpec{"l", -0.5, 0, 0}),
                    DomainError);
}
