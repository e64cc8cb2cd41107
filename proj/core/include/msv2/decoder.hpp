#pragma once

#include <cstdint>
#include <vector>

#include "msv2/tensor.hpp"
#include "msv2/weights.hpp"

namespace msv2 {

int argmax(const float* x, int64_t n);

// ─── Cross-attention cache ──────────────────────────────────────────────────
//
// Per-layer key/value projections of the adapter output. Projections are
// row-local, so extending the cache frame by frame as encoder outputs
// finalize gives bit-identical state to projecting the whole utterance at
// once — this is what keeps first-token work after end of capture flat.

struct CrossCache {
    int64_t frames = 0;
    std::vector<std::vector<float>> k, v; // one [frames, dec_dim] flat array per layer
};

CrossCache prepare_cross(const Tensor& adapter_out, const WeightStore& w);
void extend_cross(CrossCache& cache, const Tensor& new_rows, const WeightStore& w);
// Drops frames from the tail (used to retract provisional frames).
void truncate_cross(CrossCache& cache, int64_t frames, const WeightStore& w);

// ─── Incremental decoding ───────────────────────────────────────────────────

struct DecodeState {
    std::vector<int> tokens; // begins with BOS; the last entry may be unprocessed
    int64_t processed = 0;   // tokens whose self-attention k/v are cached
    std::vector<std::vector<float>> self_k, self_v; // per layer, [processed, dec_dim], keys post-RoPE
};

DecodeState new_decode_state(const ModelConfig& cfg);

struct StepResult {
    int next_token = 0;
    Tensor logits; // [vocab]
};

// Runs the pending token(s) through the decoder with the KV cache, returns
// greedy argmax logits for the newest position, and appends the chosen token
// to the state. Self-attention is causal with RoPE at the absolute token
// index; cross-attention is softmax-normalized over every handed-in adapter
// frame, unmasked. cross_from restricts which frames are handed in (the
// session uses it to bound provisional decodes); within that span attention
// stays full.
StepResult decode_step(DecodeState& state, const CrossCache& cross, const WeightStore& w, int64_t cross_from = 0);

// Greedy loop: emits up to max_tokens tokens, stopping after EOS (which is
// included in the returned sequence when it occurs). Deterministic.
std::vector<int> decode_greedy(const CrossCache& cross, const WeightStore& w, int max_tokens, int64_t cross_from = 0);
std::vector<int> decode_greedy(const Tensor& adapter_out, const WeightStore& w, int max_tokens);

// Full-sequence reference: logits for every position of `tokens` computed
// with dense causally-masked attention and no cache. This is the oracle the
// incremental path is checked against.
Tensor decode_logits_batch(const std::vector<int>& tokens, const Tensor& adapter_out, const WeightStore& w);

} // namespace msv2
