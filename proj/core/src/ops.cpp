#include "msv2/ops.hpp"

#include <cmath>
#include <cstring>

namespace msv2::ops {

namespace detail {
std::atomic<uint64_t> g_attn_mix_ops{0};
std::atomic<uint64_t> g_total_macs{0};
} // namespace detail

uint64_t attn_mix_ops() { return detail::g_attn_mix_ops.load(std::memory_order_relaxed); }
uint64_t total_macs() { return detail::g_total_macs.load(std::memory_order_relaxed); }
void reset_counters() {
    detail::g_attn_mix_ops.store(0, std::memory_order_relaxed);
    detail::g_total_macs.store(0, std::memory_order_relaxed);
}

float apply_activation(Activation act, float x) {
    switch (act) {
        case Activation::identity: return x;
        case Activation::gelu: return 0.5f * x * (1.0f + std::erf(x * 0.70710678118654752f));
        case Activation::silu: return x / (1.0f + std::exp(-x));
        case Activation::asinh: return std::asinh(x);
    }
    return x;
}

// ─── Dense kernels ──────────────────────────────────────────────────────────

float dot(const float* a, const float* b, int64_t n) {
    // 32 fixed accumulator lanes: wide enough for two 512-bit FMA chains,
    // and a deterministic summation order for a given length.
    float acc[32];
    for (float& v : acc) v = 0.0f;
    int64_t i = 0;
    for (; i + 32 <= n; i += 32)
        for (int l = 0; l < 32; ++l) acc[l] += a[i + l] * b[i + l];
    float tail = 0.0f;
    for (; i < n; ++i) tail += a[i] * b[i];
    float sum[4] = {0, 0, 0, 0};
    for (int g = 0; g < 4; ++g)
        for (int l = 0; l < 8; ++l) sum[g] += acc[g * 8 + l];
    return (sum[0] + sum[1]) + (sum[2] + sum[3]) + tail;
}

void matvec(float* y, const float* w, const float* x, int64_t out_dim, int64_t in_dim) {
    for (int64_t o = 0; o < out_dim; ++o) y[o] = dot(w + o * in_dim, x, in_dim);
    detail::count_mac(static_cast<uint64_t>(out_dim) * static_cast<uint64_t>(in_dim));
}

void matvec_add(float* y, const float* w, const float* x, int64_t out_dim, int64_t in_dim) {
    for (int64_t o = 0; o < out_dim; ++o) y[o] += dot(w + o * in_dim, x, in_dim);
    detail::count_mac(static_cast<uint64_t>(out_dim) * static_cast<uint64_t>(in_dim));
}

Tensor linear(const Tensor& x, const Tensor& w) {
    if (w.rank() != 2 || x.cols() != w.dim(1))
        throw ShapeError("linear: x " + x.shape_str() + " does not match w " + w.shape_str());
    Tensor y({x.rows(), w.dim(0)});
    for (int64_t r = 0; r < x.rows(); ++r) matvec(y.row_ptr(r), w.data.data(), x.row_ptr(r), w.dim(0), w.dim(1));
    return y;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
    if (bias.numel() != w.dim(0)) throw ShapeError("linear: bias length does not match output dim");
    Tensor y = linear(x, w);
    for (int64_t r = 0; r < y.rows(); ++r)
        for (int64_t c = 0; c < y.cols(); ++c) y.at(r, c) += bias.data[static_cast<size_t>(c)];
    return y;
}

// ─── Norm / softmax ─────────────────────────────────────────────────────────

void layer_norm_row(float* out, const float* x, const float* gain, int64_t d, float eps) {
    float mean = 0.0f;
    for (int64_t i = 0; i < d; ++i) mean += x[i];
    mean /= static_cast<float>(d);
    float var = 0.0f;
    for (int64_t i = 0; i < d; ++i) {
        float c = x[i] - mean;
        var += c * c;
    }
    var /= static_cast<float>(d);
    float inv = 1.0f / std::sqrt(var + eps);
    for (int64_t i = 0; i < d; ++i) out[i] = (x[i] - mean) * inv * (gain ? gain[i] : 1.0f);
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, float eps) {
    if (gain.numel() != x.cols()) throw ShapeError("layer_norm: gain length does not match row width");
    Tensor y(x.shape);
    for (int64_t r = 0; r < x.rows(); ++r) layer_norm_row(y.row_ptr(r), x.row_ptr(r), gain.data.data(), x.cols(), eps);
    return y;
}

void softmax_inplace(float* x, int64_t n) {
    float mx = x[0];
    for (int64_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
    float sum = 0.0f;
    for (int64_t i = 0; i < n; ++i) {
        x[i] = std::exp(x[i] - mx);
        sum += x[i];
    }
    float inv = 1.0f / sum;
    for (int64_t i = 0; i < n; ++i) x[i] *= inv;
}

Tensor softmax(const Tensor& x) {
    Tensor y = x;
    for (int64_t r = 0; r < y.rows(); ++r) softmax_inplace(y.row_ptr(r), y.cols());
    return y;
}

// ─── Attention ──────────────────────────────────────────────────────────────

void attention_row(float* out, const float* q_row, const float* keys, const float* values,
                   int64_t kv_base, int64_t lo, int64_t hi, int heads, int head_dim) {
    const int64_t band = hi - lo + 1;
    const int64_t inner = static_cast<int64_t>(heads) * head_dim;
    const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
    std::vector<float> scores(static_cast<size_t>(band));
    for (int h = 0; h < heads; ++h) {
        const int64_t off = static_cast<int64_t>(h) * head_dim;
        for (int64_t j = 0; j < band; ++j)
            scores[static_cast<size_t>(j)] = scale * dot(q_row + off, keys + (lo - kv_base + j) * inner + off, head_dim);
        softmax_inplace(scores.data(), band);
        float* oh = out + off;
        std::memset(oh, 0, sizeof(float) * static_cast<size_t>(head_dim));
        for (int64_t j = 0; j < band; ++j) {
            const float a = scores[static_cast<size_t>(j)];
            const float* vh = values + (lo - kv_base + j) * inner + off;
            for (int d = 0; d < head_dim; ++d) oh[d] += a * vh[d];
        }
    }
    detail::count_attn(4ull * static_cast<uint64_t>(inner) * static_cast<uint64_t>(band));
}

Tensor banded_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads, AttentionWindow win) {
    if (!q.same_shape(k) || !q.same_shape(v)) throw ShapeError("banded_attention: q/k/v shapes differ");
    if (q.cols() % heads != 0) throw ShapeError("banded_attention: width not divisible by head count");
    const int head_dim = static_cast<int>(q.cols()) / heads;
    const int64_t T = q.rows();
    Tensor out(q.shape);
    for (int64_t t = 0; t < T; ++t) {
        const int64_t lo = std::max<int64_t>(0, t - win.left);
        const int64_t hi = std::min<int64_t>(T - 1, t + win.right);
        attention_row(out.row_ptr(t), q.row_ptr(t), k.data.data(), v.data.data(), 0, lo, hi, heads, head_dim);
    }
    return out;
}

Tensor dense_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads,
                       std::optional<AttentionWindow> win) {
    if (!q.same_shape(k) || !q.same_shape(v)) throw ShapeError("dense_attention: q/k/v shapes differ");
    if (q.cols() % heads != 0) throw ShapeError("dense_attention: width not divisible by head count");
    const int64_t T = q.rows();
    const int64_t inner = q.cols();
    const int head_dim = static_cast<int>(inner) / heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
    Tensor out(q.shape);
    std::vector<float> scores(static_cast<size_t>(T));
    for (int64_t t = 0; t < T; ++t) {
        for (int h = 0; h < heads; ++h) {
            const int64_t off = static_cast<int64_t>(h) * head_dim;
            for (int64_t j = 0; j < T; ++j) {
                float s = scale * dot(q.row_ptr(t) + off, k.row_ptr(j) + off, head_dim);
                if (win && (j < t - win->left || j > t + win->right)) s += -1e9f;
                scores[static_cast<size_t>(j)] = s;
            }
            softmax_inplace(scores.data(), T);
            float* oh = out.row_ptr(t) + off;
            for (int64_t j = 0; j < T; ++j) {
                const float a = scores[static_cast<size_t>(j)];
                const float* vh = v.row_ptr(j) + off;
                for (int d = 0; d < head_dim; ++d) oh[d] += a * vh[d];
            }
        }
        detail::count_attn(4ull * static_cast<uint64_t>(inner) * static_cast<uint64_t>(T));
    }
    return out;
}

Tensor dense_cross_attention(const Tensor& q, const Tensor& k, const Tensor& v, int heads) {
    if (!k.same_shape(v) || q.cols() != k.cols()) throw ShapeError("dense_cross_attention: shapes inconsistent");
    if (q.cols() % heads != 0) throw ShapeError("dense_cross_attention: width not divisible by head count");
    const int64_t T = q.rows();
    const int64_t M = k.rows();
    const int64_t inner = q.cols();
    const int head_dim = static_cast<int>(inner) / heads;
    const float scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
    Tensor out(q.shape);
    std::vector<float> scores(static_cast<size_t>(M));
    for (int64_t t = 0; t < T; ++t) {
        for (int h = 0; h < heads; ++h) {
            const int64_t off = static_cast<int64_t>(h) * head_dim;
            for (int64_t j = 0; j < M; ++j)
                scores[static_cast<size_t>(j)] = scale * dot(q.row_ptr(t) + off, k.row_ptr(j) + off, head_dim);
            softmax_inplace(scores.data(), M);
            float* oh = out.row_ptr(t) + off;
            for (int64_t j = 0; j < M; ++j) {
                const float a = scores[static_cast<size_t>(j)];
                const float* vh = v.row_ptr(j) + off;
                for (int d = 0; d < head_dim; ++d) oh[d] += a * vh[d];
            }
        }
        detail::count_attn(4ull * static_cast<uint64_t>(inner) * static_cast<uint64_t>(M));
    }
    return out;
}

// ─── Convolution ────────────────────────────────────────────────────────────

Tensor causal_conv1d(const Tensor& x, const Tensor& kernel, int stride) {
    if (x.rows() == 0) throw ShapeError("causal_conv1d: empty input");
    if (kernel.rank() != 3 || kernel.dim(2) != x.cols())
        throw ShapeError("causal_conv1d: kernel " + kernel.shape_str() + " does not match input " + x.shape_str());
    if (stride < 1) throw ShapeError("causal_conv1d: stride must be >= 1");
    const int64_t T = x.rows();
    const int64_t k = kernel.dim(0);
    const int64_t c_out = kernel.dim(1);
    const int64_t c_in = kernel.dim(2);
    const int64_t T_out = (T + stride - 1) / stride;
    Tensor y({T_out, c_out});
    for (int64_t j = 0; j < T_out; ++j) {
        float* out = y.row_ptr(j);
        for (int64_t i = 0; i < k; ++i) {
            const int64_t src = static_cast<int64_t>(j) * stride - (k - 1) + i;
            if (src < 0) continue; // zero left padding
            matvec_add(out, kernel.data.data() + i * c_out * c_in, x.row_ptr(src), c_out, c_in);
        }
    }
    return y;
}

// ─── RoPE ───────────────────────────────────────────────────────────────────

void rope_rotate_inplace(float* x, int d_head, int64_t position, float base) {
    if (d_head % 2 != 0) throw ShapeError("rope: head dimension must be even");
    for (int i = 0; i < d_head; i += 2) {
        const float freq = std::pow(base, -static_cast<float>(i) / static_cast<float>(d_head));
        const float angle = static_cast<float>(position) * freq;
        const float c = std::cos(angle);
        const float s = std::sin(angle);
        const float x0 = x[i];
        const float x1 = x[i + 1];
        x[i] = x0 * c - x1 * s;
        x[i + 1] = x0 * s + x1 * c;
    }
}

Tensor rope_rotate(const Tensor& x, const std::vector<int64_t>& positions, float base) {
    if (positions.size() != static_cast<size_t>(x.rows())) throw ShapeError("rope: one position per row required");
    Tensor y = x;
    for (int64_t r = 0; r < y.rows(); ++r)
        rope_rotate_inplace(y.row_ptr(r), static_cast<int>(y.cols()), positions[static_cast<size_t>(r)], base);
    return y;
}

// ─── Feed-forward ───────────────────────────────────────────────────────────

Tensor swiglu_ffn(const Tensor& x, const Tensor& w_gate, const Tensor& w_up, const Tensor& w_down) {
    if (!w_gate.same_shape(w_up) || w_down.dim(1) != w_gate.dim(0) || w_gate.dim(1) != x.cols())
        throw ShapeError("swiglu_ffn: weight shapes inconsistent with input");
    const int64_t hidden = w_gate.dim(0);
    Tensor y({x.rows(), w_down.dim(0)});
    std::vector<float> g(static_cast<size_t>(hidden)), u(static_cast<size_t>(hidden));
    for (int64_t r = 0; r < x.rows(); ++r) {
        matvec(g.data(), w_gate.data.data(), x.row_ptr(r), hidden, x.cols());
        matvec(u.data(), w_up.data.data(), x.row_ptr(r), hidden, x.cols());
        for (int64_t i = 0; i < hidden; ++i)
            g[static_cast<size_t>(i)] = apply_activation(Activation::silu, g[static_cast<size_t>(i)]) * u[static_cast<size_t>(i)];
        matvec(y.row_ptr(r), w_down.data.data(), g.data(), w_down.dim(0), hidden);
    }
    return y;
}

Tensor plain_ffn(const Tensor& x, const Tensor& w1, const Tensor& w2, Activation act) {
    if (w1.dim(1) != x.cols() || w2.dim(1) != w1.dim(0))
        throw ShapeError("plain_ffn: weight shapes inconsistent with input");
    const int64_t hidden = w1.dim(0);
    Tensor y({x.rows(), w2.dim(0)});
    std::vector<float> h(static_cast<size_t>(hidden));
    for (int64_t r = 0; r < x.rows(); ++r) {
        matvec(h.data(), w1.data.data(), x.row_ptr(r), hidden, x.cols());
        for (int64_t i = 0; i < hidden; ++i) h[static_cast<size_t>(i)] = apply_activation(act, h[static_cast<size_t>(i)]);
        matvec(y.row_ptr(r), w2.data.data(), h.data(), w2.dim(0), hidden);
    }
    return y;
}

} // namespace msv2::ops
