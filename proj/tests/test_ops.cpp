#include <doctest.h>

#include <cmath>

#include "msv2/errors.hpp"
#include "msv2/ops.hpp"
#include "testutil.hpp"

using namespace msv2;
using testutil::rand_tensor;

TEST_SUITE_BEGIN("ops");

TEST_CASE("linear matches a hand-computed 2x3 case") {
    Tensor x({1, 3}, {1, 2, 3});
    Tensor w({2, 3}, {1, 0, -1, 2, 1, 0});
    Tensor y = ops::linear(x, w);
    CHECK(y.shape == std::vector<int64_t>{1, 2});
    CHECK(y.at(0, 0) == doctest::Approx(-2));
    CHECK(y.at(0, 1) == doctest::Approx(4));
}

TEST_CASE("linear rejects mismatched shapes") {
    Tensor x({1, 3}, {1, 2, 3});
    Tensor w({2, 4}, std::vector<float>(8, 0.0f));
    CHECK_THROWS_AS(ops::linear(x, w), ShapeError);
}

TEST_CASE("softmax of a uniform row is 1/n") {
    Tensor x({1, 7}, std::vector<float>(7, 3.25f));
    Tensor y = ops::softmax(x);
    for (float v : y.data) CHECK(v == doctest::Approx(1.0 / 7).epsilon(1e-6));
}

TEST_CASE("softmax rows sum to 1 and stay finite under extreme logits") {
    Tensor x({2, 4}, {1e4f, -1e4f, 50.0f, 49.0f, 0.0f, 0.0f, 0.0f, 0.0f});
    Tensor y = ops::softmax(x);
    for (int64_t r = 0; r < 2; ++r) {
        double sum = 0;
        for (int64_t c = 0; c < 4; ++c) {
            CHECK(std::isfinite(y.at(r, c)));
            sum += y.at(r, c);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("layer_norm of a constant row is zero before gain") {
    Tensor x({1, 16}, std::vector<float>(16, 4.5f));
    Tensor gain({16}, std::vector<float>(16, 1.0f));
    Tensor y = ops::layer_norm(x, gain);
    for (float v : y.data) CHECK(v == 0.0f);
}

TEST_CASE("layer_norm output is standardized per row") {
    Tensor x = rand_tensor({5, 128}, 11, 10.0f);
    Tensor gain({128}, std::vector<float>(128, 1.0f));
    Tensor y = ops::layer_norm(x, gain);
    for (int64_t r = 0; r < 5; ++r) {
        double mean = 0, var = 0;
        for (int64_t c = 0; c < 128; ++c) mean += y.at(r, c);
        mean /= 128;
        for (int64_t c = 0; c < 128; ++c) var += (y.at(r, c) - mean) * (y.at(r, c) - mean);
        var /= 128;
        CHECK(std::fabs(mean) < 1e-5);
        CHECK(std::fabs(var - 1.0) < 1e-4);
    }
}

// ─── Attention ──────────────────────────────────────────────────────────────

TEST_CASE("banded attention with a single position returns v") {
    Tensor q = rand_tensor({1, 32}, 1), k = rand_tensor({1, 32}, 2), v = rand_tensor({1, 32}, 3);
    Tensor out = ops::banded_attention(q, k, v, 2, {5, 5});
    CHECK(testutil::bitwise_equal(out, v));
}

TEST_CASE("banded attention with window (0,0) copies v rows") {
    Tensor q = rand_tensor({9, 32}, 4), k = rand_tensor({9, 32}, 5), v = rand_tensor({9, 32}, 6);
    Tensor out = ops::banded_attention(q, k, v, 2, {0, 0});
    CHECK(testutil::bitwise_equal(out, v));
}

TEST_CASE("banded attention equals the dense masked oracle") {
    for (uint64_t seed : {0ull, 1ull, 2ull}) {
        const int64_t t = 64;
        Tensor q = rand_tensor({t, 48}, seed * 3 + 10);
        Tensor k = rand_tensor({t, 48}, seed * 3 + 11);
        Tensor v = rand_tensor({t, 48}, seed * 3 + 12);
        for (AttentionWindow win : {AttentionWindow{4, 2}, AttentionWindow{16, 0}, AttentionWindow{63, 63}}) {
            Tensor fast = ops::banded_attention(q, k, v, 3, win);
            Tensor oracle = ops::dense_attention(q, k, v, 3, win);
            CHECK(testutil::rel_err_max(fast, oracle) < 1e-5);
        }
    }
}

TEST_CASE("maximal window equals unmasked dense attention") {
    const int64_t t = 33;
    Tensor q = rand_tensor({t, 32}, 20), k = rand_tensor({t, 32}, 21), v = rand_tensor({t, 32}, 22);
    Tensor banded = ops::banded_attention(q, k, v, 2, {static_cast<int>(t - 1), static_cast<int>(t - 1)});
    Tensor dense = ops::dense_attention(q, k, v, 2);
    CHECK(testutil::rel_err_max(banded, dense) < 1e-5);
}

TEST_CASE("causal band: future perturbations do not reach earlier rows") {
    const int64_t t = 24;
    Tensor q = rand_tensor({t, 16}, 30), k = rand_tensor({t, 16}, 31), v = rand_tensor({t, 16}, 32);
    Tensor base = ops::banded_attention(q, k, v, 1, {6, 0});
    Tensor k2 = k, v2 = v;
    const int64_t u = 15;
    for (int64_t c = 0; c < 16; ++c) {
        k2.at(u, c) += 3.0f;
        v2.at(u, c) -= 2.0f;
    }
    Tensor pert = ops::banded_attention(q, k2, v2, 1, {6, 0});
    for (int64_t r = 0; r < u; ++r)
        for (int64_t c = 0; c < 16; ++c) CHECK(pert.at(r, c) == base.at(r, c));
}

TEST_CASE("banded attention mixing cost is linear in T at fixed window") {
    const AttentionWindow win{8, 2};
    auto measure = [&](int64_t t) {
        Tensor q = rand_tensor({t, 32}, 40), k = rand_tensor({t, 32}, 41), v = rand_tensor({t, 32}, 42);
        ops::reset_counters();
        ops::banded_attention(q, k, v, 2, win);
        return ops::attn_mix_ops();
    };
    auto expected = [&](int64_t t) {
        uint64_t band_total = 0;
        for (int64_t i = 0; i < t; ++i)
            band_total += static_cast<uint64_t>(std::min<int64_t>(t - 1, i + win.right) - std::max<int64_t>(0, i - win.left) + 1);
        return 4ull * 32ull * band_total;
    };
    for (int64_t t : {16, 32, 64, 128}) CHECK(measure(t) == expected(t));
    // Doubling T doubles the in-band work once edges are negligible.
    const uint64_t a = measure(128), b = measure(256);
    CHECK(static_cast<double>(b) / static_cast<double>(a) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("cross attention weights are normalized over every key") {
    // With all-ones values the output must be exactly the softmax mass: 1.
    Tensor q = rand_tensor({5, 32}, 90), k = rand_tensor({9, 32}, 91);
    Tensor v({9, 32}, std::vector<float>(9 * 32, 1.0f));
    Tensor out = ops::dense_cross_attention(q, k, v, 2);
    for (float x : out.data) CHECK(x == doctest::Approx(1.0).epsilon(1e-6));
}

// ─── Convolution ────────────────────────────────────────────────────────────

TEST_CASE("causal conv output length is ceil(T/stride)") {
    Tensor x = rand_tensor({200, 8}, 50);
    Tensor kernel = rand_tensor({4, 8, 8}, 51);
    CHECK(ops::causal_conv1d(x, kernel, 2).rows() == 100);
    CHECK(ops::causal_conv1d(x, kernel, 1).rows() == 200);
    Tensor x2 = rand_tensor({201, 8}, 52);
    CHECK(ops::causal_conv1d(x2, kernel, 2).rows() == 101);
}

TEST_CASE("identity kernel with stride 1 reproduces the input") {
    Tensor x = rand_tensor({17, 6}, 53);
    Tensor kernel({1, 6, 6});
    for (int64_t i = 0; i < 6; ++i) kernel.data[static_cast<size_t>(i * 6 + i)] = 1.0f;
    Tensor y = ops::causal_conv1d(x, kernel, 1);
    CHECK(testutil::bitwise_equal(y, x));
}

TEST_CASE("conv causality: output j never sees inputs past j*stride") {
    Tensor x = rand_tensor({40, 4}, 54);
    Tensor kernel = rand_tensor({5, 4, 4}, 55);
    Tensor base = ops::causal_conv1d(x, kernel, 2);
    for (int64_t u : {7, 20, 39}) {
        Tensor xp = x;
        for (int64_t c = 0; c < 4; ++c) xp.at(u, c) += 1.0f;
        Tensor pert = ops::causal_conv1d(xp, kernel, 2);
        for (int64_t j = 0; j < base.rows(); ++j) {
            if (j * 2 < u) {
                for (int64_t c = 0; c < 4; ++c) CHECK(pert.at(j, c) == base.at(j, c));
            }
        }
    }
}

TEST_CASE("conv rejects empty input") {
    Tensor x({0, 4});
    Tensor kernel = rand_tensor({3, 4, 4}, 56);
    CHECK_THROWS_AS(ops::causal_conv1d(x, kernel, 2), ShapeError);
}

// ─── RoPE ───────────────────────────────────────────────────────────────────

TEST_CASE("rope at position 0 is the identity") {
    Tensor x = rand_tensor({3, 16}, 60);
    Tensor y = ops::rope_rotate(x, {0, 0, 0}, 10000.0f);
    CHECK(testutil::bitwise_equal(x, y));
}

TEST_CASE("rope dot products depend only on relative position") {
    Tensor q = rand_tensor({1, 32}, 61);
    Tensor k = rand_tensor({1, 32}, 62);
    auto rotated_dot = [&](int64_t i, int64_t j) {
        Tensor qr = ops::rope_rotate(q, {i}, 10000.0f);
        Tensor kr = ops::rope_rotate(k, {j}, 10000.0f);
        return static_cast<double>(ops::dot(qr.data.data(), kr.data.data(), 32));
    };
    for (int64_t shift : {1, 5, 40, 300}) {
        const double base = rotated_dot(3, 11);
        const double shifted = rotated_dot(3 + shift, 11 + shift);
        CHECK(std::fabs(base - shifted) < 1e-5);
    }
}

TEST_CASE("rope preserves the norm of each rotated pair") {
    Tensor x = rand_tensor({1, 24}, 63);
    Tensor y = ops::rope_rotate(x, {987}, 10000.0f);
    for (int i = 0; i < 24; i += 2) {
        const double before = std::hypot(x.data[static_cast<size_t>(i)], x.data[static_cast<size_t>(i + 1)]);
        const double after = std::hypot(y.data[static_cast<size_t>(i)], y.data[static_cast<size_t>(i + 1)]);
        CHECK(std::fabs(before - after) <= 1e-6 * std::max(1.0, before));
    }
}

TEST_CASE("rope rejects odd head dimensions") {
    float buf[3] = {1, 2, 3};
    CHECK_THROWS_AS(ops::rope_rotate_inplace(buf, 3, 1, 10000.0f), ShapeError);
}

// ─── Feed-forward ───────────────────────────────────────────────────────────

TEST_CASE("swiglu of zero input is zero") {
    Tensor x({2, 8});
    Tensor g = rand_tensor({16, 8}, 70), u = rand_tensor({16, 8}, 71), d = rand_tensor({8, 16}, 72);
    Tensor y = ops::swiglu_ffn(x, g, u, d);
    for (float v : y.data) CHECK(v == 0.0f);
}

TEST_CASE("ffn blocks preserve the row shape") {
    Tensor x = rand_tensor({5, 12}, 73);
    Tensor g = rand_tensor({48, 12}, 74), u = rand_tensor({48, 12}, 75), d = rand_tensor({12, 48}, 76);
    CHECK(ops::swiglu_ffn(x, g, u, d).shape == x.shape);
    Tensor w1 = rand_tensor({48, 12}, 77), w2 = rand_tensor({12, 48}, 78);
    CHECK(ops::plain_ffn(x, w1, w2, ops::Activation::gelu).shape == x.shape);
}

TEST_CASE("plain_ffn matches a hand-computed case with identity activation") {
    Tensor x({1, 2}, {1, 2});
    Tensor w1({3, 2}, {1, 0, 0, 1, 1, 1}); // h = [1, 2, 3]
    Tensor w2({2, 3}, {1, 1, 0, 0, 1, 1}); // y = [3, 5]
    Tensor y = ops::plain_ffn(x, w1, w2, ops::Activation::identity);
    CHECK(y.at(0, 0) == doctest::Approx(3));
    CHECK(y.at(0, 1) == doctest::Approx(5));
}

TEST_CASE("activations stay finite on random inputs") {
    Tensor x = rand_tensor({64, 32}, 80, 5.0f);
    Tensor gain({32}, std::vector<float>(32, 1.0f));
    for (const Tensor& t : {ops::layer_norm(x, gain), ops::softmax(x)})
        for (float v : t.data) CHECK(std::isfinite(v));
    for (float v : x.data) {
        CHECK(std::isfinite(ops::apply_activation(ops::Activation::gelu, v)));
        CHECK(std::isfinite(ops::apply_activation(ops::Activation::silu, v)));
        CHECK(std::isfinite(ops::apply_activation(ops::Activation::asinh, v)));
    }
}

TEST_SUITE_END();
