#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <vector>

#include "msv2/config.hpp"
#include "msv2/tensor.hpp"

namespace msv2::ops {

// ─── Operation counters ─────────────────────────────────────────────────────
//
// attn_mix counts multiply+add in the attention mixing products (Q·K^T and
// A·V) only, two ops per MAC; total_mac counts every matvec MAC in the
// engine. Both are cheap enough to stay on unconditionally.

uint64_t attn_mix_ops();
uint64_t total_macs();
void reset_counters();

namespace detail {
extern std::atomic<uint64_t> g_attn_mix_ops;
extern std::atomic<uint64_t> g_total_macs;
inline void count_attn(uint64_t ops) { g_attn_mix_ops.fetch_add(ops, std::memory_order_relaxed); }
inline void count_mac(uint64_t macs) { g_total_macs.fetch_add(macs, std::memory_order_relaxed); }
} // namespace detail

// ─── Elementwise ────────────────────────────────────────────────────────────

enum class Activation { identity, gelu, silu, asinh };

float apply_activation(Activation act, float x);

// ─── Dense linear algebra ───────────────────────────────────────────────────
//
// Weight matrices are stored [out, in], one output row contiguous in the
// input dimension. The dot kernel uses a fixed 8-lane accumulation order, so
// results are bit-reproducible for a given length regardless of chunking or
// batching.

float dot(const float* a, const float* b, int64_t n);
void matvec(float* y, const float* w, const float* x, int64_t out_dim, int64_t in_dim);
void matvec_add(float* y, const float* w, const float* x, int64_t out_dim, int64_t in_dim);

// x: [T, in], w: [out, in] -> [T, out]
Tensor linear(const Tensor& x, const Tensor& w);
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);

// ─── Normalization / softmax ───────────────────────────────────────────────

void layer_norm_row(float* out, const float* x, const float* gain, int64_t d, float eps);
Tensor layer_norm(const Tensor& x, const Tensor& gain, float eps = 1e-5f);

void softmax_inplace(float* x, int64_t n);
Tensor softmax(const Tensor& x);

// ─── Attention ──────────────────────────────────────────────────────────────

// One output row of banded attention. q_row points at the query projection
// for position t; keys/values are [kv_rows, heads*head_dim] flat arrays whose
// row 0 is absolute position kv_base. The band [lo, hi] is in absolute
// positions and must be resident in the key/value arrays.
void attention_row(float* out, const float* q_row, const float* keys, const float* values,
                   int64_t kv_base, int64_t lo, int64_t hi, int heads, int head_dim);

// q,k,v: [T, heads*head_dim]. Per-row band [t-left, t+right] clipped to the
// sequence. Iterates in-band keys only; cost is O(T * (left+right+1)).
Tensor banded_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads, AttentionWindow win);

// Dense scaled-dot attention over all T^2 pairs. When a window is given, the
// band is enforced with an additive -1e9 mask before the softmax; this is the
// reference path banded_attention is checked against.
Tensor dense_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads,
                       std::optional<AttentionWindow> win = std::nullopt);

// q: [T, inner] against k,v: [M, inner]; every query sees every key.
Tensor dense_cross_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads);

// ─── Convolution ────────────────────────────────────────────────────────────

// Causal strided 1-D convolution. x: [T, c_in], kernel: [k, c_out, c_in].
// Output j is anchored at input j*stride and reaches back k-1 frames
// (zero-padded before the sequence start); length is ceil(T / stride).
Tensor causal_conv1d(const Tensor& x, const Tensor& kernel, int stride);

// ─── RoPE ───────────────────────────────────────────────────────────────────

// Rotates consecutive pairs of a single head vector by position-dependent
// angles: pair i turns by position * base^(-2i/d_head).
void rope_rotate_inplace(float* x, int d_head, int64_t position, float base);

// x: [T, d_head]; positions supplies the absolute position per row.
Tensor rope_rotate(const Tensor& x, const std::vector<int64_t>& positions, float base);

// ─── Feed-forward blocks ────────────────────────────────────────────────────

// w_gate, w_up: [hidden, d]; w_down: [d, hidden].
Tensor swiglu_ffn(const Tensor& x, const Tensor& w_gate, const Tensor& w_up, const Tensor& w_down);

// w1: [hidden, d]; w2: [d, hidden].
Tensor plain_ffn(const Tensor& x, const Tensor& w1, const Tensor& w2, Activation act);

} // namespace msv2::ops
