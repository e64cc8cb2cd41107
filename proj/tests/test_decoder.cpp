#include <doctest.h>

#include <cmath>

#include "msv2/decoder.hpp"
#include "msv2/errors.hpp"
#include "testutil.hpp"

using namespace msv2;
using testutil::rand_features;

TEST_SUITE_BEGIN("decoder");

namespace {

WeightStore small_decoder_weights(uint64_t seed = 0) {
    return init_weights(testutil::small_config(64, 64, 4, 2, 16, 80), seed);
}

} // namespace

TEST_CASE("argmax is invariant to a constant logit shift") {
    Tensor logits = rand_features(1, 33, 1);
    const int base = argmax(logits.data.data(), 33);
    for (float& v : logits.data) v += 123.5f;
    CHECK(argmax(logits.data.data(), 33) == base);
}

TEST_CASE("single cross frame still yields finite logits") {
    WeightStore w = small_decoder_weights(2);
    CrossCache cross = prepare_cross(rand_features(1, 64, 3), w);
    DecodeState state = new_decode_state(w.cfg);
    StepResult step = decode_step(state, cross, w);
    CHECK(step.logits.numel() == 80);
    for (float v : step.logits.data) CHECK(std::isfinite(v));
}

TEST_CASE("incremental decode matches the batch reference, step by step") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        WeightStore w = small_decoder_weights(seed + 10);
        Tensor adapter_out = rand_features(6, 64, seed + 50);
        CrossCache cross = prepare_cross(adapter_out, w);

        DecodeState state = new_decode_state(w.cfg);
        std::vector<Tensor> step_logits;
        const int steps = 11;
        for (int i = 0; i < steps; ++i) step_logits.push_back(decode_step(state, cross, w).logits);

        // Batch logits over the tokens the incremental path consumed: entry i
        // is the distribution that chose tokens[i+1].
        std::vector<int> consumed(state.tokens.begin(), state.tokens.end() - 1);
        Tensor batch = decode_logits_batch(consumed, adapter_out, w);
        REQUIRE(batch.rows() == steps);
        for (int i = 0; i < steps; ++i) {
            Tensor row({1, batch.cols()});
            std::copy_n(batch.row_ptr(i), batch.cols(), row.data.begin());
            Tensor inc({1, batch.cols()});
            std::copy_n(step_logits[static_cast<size_t>(i)].data.data(), batch.cols(), inc.data.begin());
            CHECK(testutil::rel_err_max(inc, row) < 1e-5);
            CHECK(argmax(row.data.data(), row.cols()) == state.tokens[static_cast<size_t>(i) + 1]);
        }
    }
}

TEST_CASE("decoder causality: future tokens never change earlier batch logits") {
    WeightStore w = small_decoder_weights(20);
    Tensor adapter_out = rand_features(5, 64, 21);
    std::vector<int> tokens = {w.cfg.bos_id, 7, 12, 9, 30};
    Tensor base = decode_logits_batch(tokens, adapter_out, w);
    std::vector<int> mutated = tokens;
    mutated[4] = 55;
    Tensor pert = decode_logits_batch(mutated, adapter_out, w);
    for (int64_t i = 0; i < 4; ++i)
        for (int64_t c = 0; c < base.cols(); ++c) CHECK(base.at(i, c) == pert.at(i, c));
}

TEST_CASE("greedy decoding: token budget, determinism, EOS stop") {
    WeightStore w = small_decoder_weights(30);
    Tensor adapter_out = rand_features(4, 64, 31);

    std::vector<int> one = decode_greedy(adapter_out, w, 1);
    CHECK(one.size() == 1);

    std::vector<int> a = decode_greedy(adapter_out, w, 12);
    std::vector<int> b = decode_greedy(adapter_out, w, 12);
    CHECK(a == b);

    // Re-badge the first emitted token as EOS: the loop must stop right there.
    ModelConfig cfg = w.cfg;
    if (a[0] != cfg.bos_id && a[0] != 0) {
        cfg.eos_id = a[0];
        WeightStore w2 = w;
        w2.cfg = cfg;
        std::vector<int> stopped = decode_greedy(prepare_cross(adapter_out, w2), w2, 12);
        CHECK(stopped.size() == 1);
        CHECK(stopped[0] == cfg.eos_id);
    }
}

TEST_CASE("cross window: slicing the cache equals rebuilding it from the suffix") {
    WeightStore w = small_decoder_weights(40);
    Tensor adapter_out = rand_features(9, 64, 41);
    CrossCache full = prepare_cross(adapter_out, w);

    const int64_t from = 4;
    Tensor suffix({adapter_out.rows() - from, 64});
    std::copy_n(adapter_out.row_ptr(from), suffix.numel(), suffix.data.begin());
    CrossCache sliced = prepare_cross(suffix, w);

    DecodeState s1 = new_decode_state(w.cfg);
    DecodeState s2 = new_decode_state(w.cfg);
    for (int i = 0; i < 6; ++i) {
        StepResult a = decode_step(s1, full, w, from);
        StepResult b = decode_step(s2, sliced, w);
        CHECK(a.next_token == b.next_token);
        CHECK(a.logits.data == b.logits.data);
    }
}

TEST_CASE("extend + truncate leave the cache bit-identical") {
    WeightStore w = small_decoder_weights(50);
    Tensor adapter_out = rand_features(6, 64, 51);
    CrossCache cache = prepare_cross(adapter_out, w);
    const auto k_before = cache.k;
    const auto v_before = cache.v;

    extend_cross(cache, rand_features(3, 64, 52), w);
    CHECK(cache.frames == 9);
    truncate_cross(cache, 6, w);
    CHECK(cache.frames == 6);
    CHECK(cache.k == k_before);
    CHECK(cache.v == v_before);

    // Incremental extension equals batch projection of the concatenation.
    Tensor more = rand_features(3, 64, 53);
    extend_cross(cache, more, w);
    Tensor all({9, 64});
    std::copy_n(adapter_out.data.data(), 6 * 64, all.data.begin());
    std::copy_n(more.data.data(), 3 * 64, all.data.begin() + 6 * 64);
    CrossCache batch = prepare_cross(all, w);
    CHECK(cache.k == batch.k);
    CHECK(cache.v == batch.v);
}

TEST_CASE("decode misuse is rejected") {
    WeightStore w = small_decoder_weights(60);
    CrossCache empty;
    DecodeState state = new_decode_state(w.cfg);
    CHECK_THROWS_AS(decode_step(state, empty, w), SessionError);

    CrossCache cross = prepare_cross(rand_features(2, 64, 61), w);
    DecodeState desynced = new_decode_state(w.cfg);
    desynced.processed = 1; // nothing pending
    CHECK_THROWS_AS(decode_step(desynced, cross, w), SessionError);

    DecodeState no_bos;
    no_bos.tokens = {5};
    CHECK_THROWS_AS(decode_step(no_bos, cross, w), SessionError);

    CHECK_THROWS_AS(decode_greedy(cross, w, 0), SessionError);
    CHECK_THROWS_AS(decode_logits_batch({}, rand_features(2, 64, 62), w), SessionError);
}

TEST_SUITE_END();
