#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "msv2/config.hpp"
#include "msv2/encoder.hpp"
#include "msv2/ops.hpp"
#include "msv2/tensor.hpp"
#include "msv2/weights.hpp"

namespace testutil {

inline msv2::Tensor rand_tensor(std::vector<int64_t> shape, uint64_t seed, float scale = 1.0f) {
    msv2::Tensor t(std::move(shape));
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0f, scale);
    for (float& v : t.data) v = dist(rng);
    return t;
}

inline msv2::Tensor rand_features(int64_t t, int64_t d, uint64_t seed, float scale = 1.0f) {
    return rand_tensor({t, d}, seed, scale);
}

// Largest |a-b| over the largest |b|, guarded for all-zero references.
inline double rel_err_max(const msv2::Tensor& a, const msv2::Tensor& b) {
    if (a.shape != b.shape) return 1e30;
    double max_diff = 0, max_ref = 1e-30;
    for (size_t i = 0; i < a.data.size(); ++i) {
        max_diff = std::max(max_diff, static_cast<double>(std::fabs(a.data[i] - b.data[i])));
        max_ref = std::max(max_ref, static_cast<double>(std::fabs(b.data[i])));
    }
    return max_diff / max_ref;
}

inline bool bitwise_equal(const msv2::Tensor& a, const msv2::Tensor& b) {
    return a.shape == b.shape && a.data == b.data;
}

// Small encoder-decoder config for fast tests. Widths stay valid against the
// head rules (dec width = heads * head_dim).
inline msv2::ModelConfig small_config(int enc_dim = 64, int dec_dim = 64, int enc_layers = 6, int dec_layers = 2,
                                      int head_dim = 16, int vocab = 96) {
    msv2::ModelConfig cfg;
    cfg.enc_dim = enc_dim;
    cfg.dec_dim = dec_dim;
    cfg.enc_layers = enc_layers;
    cfg.dec_layers = dec_layers;
    cfg.head_dim = head_dim;
    cfg.num_heads_enc = dec_dim / head_dim;
    cfg.num_heads_dec = dec_dim / head_dim;
    cfg.vocab_size = vocab;
    cfg.window_schedule = enc_layers >= 4 ? msv2::standard_window_schedule(enc_layers)
                                          : std::vector<msv2::AttentionWindow>(static_cast<size_t>(enc_layers),
                                                                               msv2::AttentionWindow{16, 4});
    cfg.max_positions = 4096;
    cfg.validate();
    return cfg;
}

inline msv2::ModelConfig small_config_with_schedule(std::vector<msv2::AttentionWindow> schedule, int enc_dim = 64,
                                                    int head_dim = 16) {
    msv2::ModelConfig cfg = small_config(enc_dim, enc_dim, static_cast<int>(schedule.size()), 2, head_dim);
    cfg.window_schedule = std::move(schedule);
    cfg.validate();
    return cfg;
}

// Independent full-sequence banded encoder: batched matrices and an additive
// -1e9 band mask in dense attention. Shares no control flow with the
// incremental path it checks.
inline msv2::Tensor encode_banded_oracle(const msv2::Tensor& features, const msv2::WeightStore& w) {
    const msv2::ModelConfig& cfg = w.cfg;
    msv2::Tensor x = features;
    for (int l = 0; l < cfg.enc_layers; ++l) {
        const std::string p = "enc.layer" + std::to_string(l) + ".";
        msv2::Tensor nx = msv2::ops::layer_norm(x, w.get(p + "norm1.gain"), cfg.norm_eps);
        msv2::Tensor q = msv2::ops::linear(nx, w.get(p + "attn.q"));
        msv2::Tensor k = msv2::ops::linear(nx, w.get(p + "attn.k"));
        msv2::Tensor v = msv2::ops::linear(nx, w.get(p + "attn.v"));
        msv2::Tensor mixed =
            msv2::ops::dense_attention(q, k, v, cfg.num_heads_enc, cfg.window_schedule[static_cast<size_t>(l)]);
        msv2::Tensor proj = msv2::ops::linear(mixed, w.get(p + "attn.o"));
        for (int64_t i = 0; i < x.numel(); ++i) x.data[static_cast<size_t>(i)] += proj.data[static_cast<size_t>(i)];

        msv2::Tensor nx2 = msv2::ops::layer_norm(x, w.get(p + "norm2.gain"), cfg.norm_eps);
        msv2::Tensor f = msv2::ops::plain_ffn(nx2, w.get(p + "ffn.w1"), w.get(p + "ffn.w2"), msv2::ops::Activation::gelu);
        for (int64_t i = 0; i < x.numel(); ++i) x.data[static_cast<size_t>(i)] += f.data[static_cast<size_t>(i)];
    }
    return x;
}

// Random slicing of [0, total) into contiguous chunks (sizes >= 0 allowed).
inline std::vector<int64_t> random_chunks(int64_t total, uint64_t seed, int64_t max_chunk) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int64_t> dist(0, max_chunk);
    std::vector<int64_t> chunks;
    int64_t used = 0;
    while (used < total) {
        int64_t c = std::min(dist(rng), total - used);
        chunks.push_back(c);
        used += c;
    }
    return chunks;
}

inline std::string temp_path(const std::string& stem) {
    static std::mt19937_64 rng(std::random_device{}());
    return (std::filesystem::temp_directory_path() / (stem + "-" + std::to_string(rng()))).string();
}

// Least-squares slope of y against x.
inline double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double num = 0, den = 0;
    for (size_t i = 0; i < n; ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    return num / den;
}

// R^2 of a quadratic least-squares fit y ~ a + b x + c x^2.
inline double quadratic_fit_r2(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double s[5] = {0, 0, 0, 0, 0};
    double t[3] = {0, 0, 0};
    for (size_t i = 0; i < n; ++i) {
        double p = 1;
        for (int k = 0; k < 5; ++k) {
            s[k] += p;
            if (k < 3) t[k] += p * y[i];
            p *= x[i];
        }
    }
    double m[3][4] = {{s[0], s[1], s[2], t[0]}, {s[1], s[2], s[3], t[1]}, {s[2], s[3], s[4], t[2]}};
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
        std::swap(m[col], m[pivot]);
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (int c2 = col; c2 < 4; ++c2) m[r][c2] -= f * m[col][c2];
        }
    }
    const double a = m[0][3] / m[0][0], b = m[1][3] / m[1][1], c = m[2][3] / m[2][2];
    double my = 0;
    for (size_t i = 0; i < n; ++i) my += y[i];
    my /= static_cast<double>(n);
    double ss_res = 0, ss_tot = 0;
    for (size_t i = 0; i < n; ++i) {
        const double fit = a + b * x[i] + c * x[i] * x[i];
        ss_res += (y[i] - fit) * (y[i] - fit);
        ss_tot += (y[i] - my) * (y[i] - my);
    }
    return ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
}

} // namespace testutil
