#pragma once

#include <cstdint>
#include <tuple>
#include <vector>

#include "msv2/tensor.hpp"
#include "msv2/wav.hpp"
#include "msv2/weights.hpp"

namespace msv2 {

// 50 Hz feature frames, [T2, enc_dim].
struct FeatureSequence {
    Tensor frames;
    double frame_rate_hz = 50.0;
};

// Frame counts through the frontend for N input samples:
// T = floor(N/80), T1 = ceil(T/2), T2 = ceil(T1/2).
std::tuple<int64_t, int64_t, int64_t> frontend_frame_counts(int64_t n_samples);

// In-place zero-mean unit-variance normalization of one analysis frame.
// Constant frames (variance below eps) come back as all zeros.
void cmvn_frame(float* frame, int64_t n, float eps = 1e-8f);

// ─── Batch path ─────────────────────────────────────────────────────────────
//
// Pipeline: 80-sample non-overlapping frames -> per-frame CMVN -> asinh ->
// per-frame embed (80 -> enc_dim) -> causal stride-2 conv -> asinh ->
// causal stride-2 conv. Everything is strictly causal; there is no lookahead
// anywhere in the frontend.

struct FrontendBatchResult {
    FeatureSequence features;
    int64_t clipped_samples = 0; // inputs outside [-1, 1] were clipped
};

FrontendBatchResult preprocess_batch(const float* samples, int64_t n, const WeightStore& w);
FrontendBatchResult preprocess_batch(const AudioBuffer& audio, const WeightStore& w);

// ─── Streaming path ─────────────────────────────────────────────────────────
//
// Emits exactly the frames the batch path would: feature j appears as soon
// as analysis frame 4j has arrived, so any chunking of the input produces a
// bit-identical frame stream and there is nothing left to flush.

class FrontendStream {
  public:
    explicit FrontendStream(const WeightStore& w);

    // Returns newly completed feature rows ([m, enc_dim], possibly empty).
    Tensor push(const float* samples, int64_t n);
    Tensor push(const std::vector<float>& samples) { return push(samples.data(), static_cast<int64_t>(samples.size())); }

    void reset();

    int64_t samples_seen() const { return samples_seen_; }
    int64_t frames_emitted() const { return frames_emitted_; }
    int64_t clipped_samples() const { return clipped_samples_; }

  private:
    Tensor conv_tap_output(const Tensor& kernel, const std::vector<float>& ring, int64_t ring_base, int64_t anchor,
                           int64_t dim) const;

    const WeightStore* w_;
    int enc_dim_;
    int kernel_;

    std::vector<float> residual_; // < 80 pending samples
    // Rings hold the last (kernel) rows of each conv's input, indexed
    // absolutely; row `ring_base` is the first resident row.
    std::vector<float> conv1_ring_, conv2_ring_;
    int64_t conv1_base_ = 0, conv2_base_ = 0;
    int64_t conv1_rows_ = 0, conv2_rows_ = 0; // absolute input counts
    int64_t samples_seen_ = 0;
    int64_t frames_emitted_ = 0;
    int64_t clipped_samples_ = 0;
};

} // namespace msv2
