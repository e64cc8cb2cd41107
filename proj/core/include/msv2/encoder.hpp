#pragma once

#include <cstdint>
#include <vector>

#include "msv2/frontend.hpp"
#include "msv2/tensor.hpp"
#include "msv2/weights.hpp"

namespace msv2 {

struct ReceptiveField {
    int64_t left = 0;
    int64_t right = 0;
};

// Sum of the window schedule: `right` is the finalization horizon — the
// number of future feature frames after which an encoder output can no
// longer change.
ReceptiveField receptive_field(const ModelConfig& cfg);

struct ProvisionalOutput {
    Tensor rows;         // [m, enc_dim]
    int64_t start = 0;   // absolute index of rows[0]
};

// ─── Incremental encoder ────────────────────────────────────────────────────
//
// Each layer keeps a ring of its settled input rows together with their
// normalized form and key/value projections. An output row is emitted as
// settled once every frame in its attention band is settled, which makes
// every emitted row bit-identical to the full-sequence computation and
// bounds both memory and per-frame work by the window schedule, not the
// stream length. The not-yet-settled suffix can be recomputed on demand by
// treating the current end of input as if it were the end of the utterance.
class EncoderStream {
  public:
    explicit EncoderStream(const WeightStore& w);

    struct PushResult {
        Tensor finalized;         // newly finalized output rows, possibly empty
        int64_t finalized_start;  // absolute index of finalized[0]
    };

    // Feed new feature rows ([m, enc_dim]). Rows are processed one at a time
    // internally, so results do not depend on how the stream is chunked.
    PushResult push(const Tensor& new_features);

    // Current provisional suffix (indices [finalized_count, frames_in)).
    // Cheap: work is bounded by the total lookahead, not the stream length.
    ProvisionalOutput provisional();

    // Treat the current end of input as the end of the utterance and
    // finalize everything outstanding. The stream is closed afterwards.
    Tensor flush();

    int64_t frames_in() const { return frames_in_; }
    int64_t finalized_count() const { return finalized_; }
    bool flushed() const { return flushed_; }

  private:
    struct Layer {
        AttentionWindow win;
        const Tensor *norm1, *wq, *wk, *wv, *wo, *norm2, *w1, *w2;
        // Ring of settled input rows [base, n_in): raw, normalized, and the
        // k/v projections of the normalized rows.
        std::vector<float> x, nx, k, v;
        int64_t base = 0;
        int64_t n_in = 0;
        int64_t n_out = 0;
    };

    void append_settled(Layer& L, const float* row);
    void evict(Layer& L);
    // Output row t of a layer; `end` is the exclusive input length used for
    // right-clipping the band (the utterance end once known).
    void output_row(const Layer& L, int64_t t, int64_t end, const float* kv, const float* vv, int64_t kv_base,
                    const float* nx_row, const float* x_row, float* out) const;
    void settled_output_row(const Layer& L, int64_t t, float* out) const;

    const WeightStore* w_;
    ModelConfig cfg_;
    std::vector<Layer> layers_;
    int64_t frames_in_ = 0;
    int64_t finalized_ = 0;
    bool flushed_ = false;
};

// Full-utterance encode: push everything, then flush. [T2, enc_dim] in,
// [T2, enc_dim] out. Bit-identical to any chunked streaming of the same
// features by construction.
Tensor encode_full(const Tensor& features, const WeightStore& w);
inline Tensor encode_full(const FeatureSequence& features, const WeightStore& w) {
    return encode_full(features.frames, w);
}

} // namespace msv2
