#include "msv2/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "msv2/errors.hpp"
#include "msv2/ops.hpp"

namespace msv2 {

std::tuple<int64_t, int64_t, int64_t> frontend_frame_counts(int64_t n_samples) {
    const int64_t t = n_samples / 80;
    const int64_t t1 = (t + 1) / 2;
    const int64_t t2 = (t1 + 1) / 2;
    return {t, t1, t2};
}

void cmvn_frame(float* frame, int64_t n, float eps) {
    float mean = 0.0f;
    for (int64_t i = 0; i < n; ++i) mean += frame[i];
    mean /= static_cast<float>(n);
    float var = 0.0f;
    for (int64_t i = 0; i < n; ++i) {
        const float c = frame[i] - mean;
        var += c * c;
    }
    var /= static_cast<float>(n);
    if (var < eps) {
        std::memset(frame, 0, sizeof(float) * static_cast<size_t>(n));
        return;
    }
    const float inv = 1.0f / std::sqrt(var);
    for (int64_t i = 0; i < n; ++i) frame[i] = (frame[i] - mean) * inv;
}

namespace {

// CMVN + asinh + embed for one 80-sample frame. Shared by both paths so the
// streaming/batch equality is bit-level.
void embed_frame(float* out, const float* samples, const Tensor& embed_w, int enc_dim) {
    float frame[80];
    std::memcpy(frame, samples, sizeof(frame));
    cmvn_frame(frame, 80);
    for (float& v : frame) v = std::asinh(v);
    ops::matvec(out, embed_w.data.data(), frame, enc_dim, 80);
}

float clip_sample(float s, int64_t& clipped) {
    if (s > 1.0f || s < -1.0f) {
        ++clipped;
        return std::clamp(s, -1.0f, 1.0f);
    }
    return s;
}

} // namespace

// ─── Batch ──────────────────────────────────────────────────────────────────

FrontendBatchResult preprocess_batch(const float* samples, int64_t n, const WeightStore& w) {
    if (n < 320) throw AudioError("audio too short: need at least 320 samples (one feature frame), got " + std::to_string(n));
    const int enc_dim = w.cfg.enc_dim;
    const auto [t, t1, t2] = frontend_frame_counts(n);
    (void)t1;

    FrontendBatchResult result;
    Tensor embedded({t, enc_dim});
    {
        std::vector<float> buf(80);
        for (int64_t f = 0; f < t; ++f) {
            for (int64_t i = 0; i < 80; ++i) buf[static_cast<size_t>(i)] = clip_sample(samples[f * 80 + i], result.clipped_samples);
            embed_frame(embedded.row_ptr(f), buf.data(), w.get("pre.embed"), enc_dim);
        }
    }
    Tensor h = ops::causal_conv1d(embedded, w.get("pre.conv1"), 2);
    for (float& v : h.data) v = std::asinh(v);
    Tensor out = ops::causal_conv1d(h, w.get("pre.conv2"), 2);
    if (out.rows() != t2) throw ShapeError("frontend: unexpected output frame count");
    result.features.frames = std::move(out);
    result.features.frame_rate_hz = w.cfg.feature_rate_hz;
    return result;
}

FrontendBatchResult preprocess_batch(const AudioBuffer& audio, const WeightStore& w) {
    if (audio.sample_rate_hz != w.cfg.sample_rate_hz)
        throw AudioError("audio sample rate " + std::to_string(audio.sample_rate_hz) + " Hz does not match model (" +
                         std::to_string(w.cfg.sample_rate_hz) + " Hz)");
    return preprocess_batch(audio.samples.data(), static_cast<int64_t>(audio.samples.size()), w);
}

// ─── Streaming ──────────────────────────────────────────────────────────────

FrontendStream::FrontendStream(const WeightStore& w) : w_(&w), enc_dim_(w.cfg.enc_dim), kernel_(w.cfg.frontend_kernel) {
    residual_.reserve(80);
}

void FrontendStream::reset() {
    residual_.clear();
    conv1_ring_.clear();
    conv2_ring_.clear();
    conv1_base_ = conv2_base_ = 0;
    conv1_rows_ = conv2_rows_ = 0;
    samples_seen_ = 0;
    frames_emitted_ = 0;
    clipped_samples_ = 0;
}

Tensor FrontendStream::conv_tap_output(const Tensor& kernel, const std::vector<float>& ring, int64_t ring_base,
                                       int64_t anchor, int64_t dim) const {
    Tensor out({1, dim});
    for (int64_t i = 0; i < kernel_; ++i) {
        const int64_t src = anchor - (kernel_ - 1) + i;
        if (src < 0) continue;
        ops::matvec_add(out.data.data(), kernel.data.data() + i * dim * dim, ring.data() + (src - ring_base) * dim, dim,
                        dim);
    }
    return out;
}

Tensor FrontendStream::push(const float* samples, int64_t n) {
    const Tensor& embed_w = w_->get("pre.embed");
    const Tensor& conv1_w = w_->get("pre.conv1");
    const Tensor& conv2_w = w_->get("pre.conv2");
    const int64_t dim = enc_dim_;

    std::vector<float> emitted;
    auto push_ring = [&](std::vector<float>& ring, int64_t& base, int64_t rows, const float* row) {
        // Keep the last `kernel_` rows; older ones can no longer be taps.
        if (rows - base >= kernel_) {
            ring.erase(ring.begin(), ring.begin() + dim);
            ++base;
        }
        ring.insert(ring.end(), row, row + dim);
    };

    for (int64_t s = 0; s < n; ++s) {
        residual_.push_back(clip_sample(samples[s], clipped_samples_));
        ++samples_seen_;
        if (residual_.size() < 80) continue;

        std::vector<float> row(static_cast<size_t>(dim));
        embed_frame(row.data(), residual_.data(), embed_w, enc_dim_);
        residual_.clear();

        const int64_t i1 = conv1_rows_;
        push_ring(conv1_ring_, conv1_base_, conv1_rows_, row.data());
        ++conv1_rows_;
        if (i1 % 2 != 0) continue; // conv1 emits on even input indices

        Tensor mid = conv_tap_output(conv1_w, conv1_ring_, conv1_base_, i1, dim);
        for (float& v : mid.data) v = std::asinh(v);

        const int64_t i2 = conv2_rows_;
        push_ring(conv2_ring_, conv2_base_, conv2_rows_, mid.data.data());
        ++conv2_rows_;
        if (i2 % 2 != 0) continue;

        Tensor feat = conv_tap_output(conv2_w, conv2_ring_, conv2_base_, i2, dim);
        emitted.insert(emitted.end(), feat.data.begin(), feat.data.end());
        ++frames_emitted_;
    }

    Tensor out({static_cast<int64_t>(emitted.size()) / dim, dim});
    out.data = std::move(emitted);
    return out;
}

} // namespace msv2
