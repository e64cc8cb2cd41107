#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msv2/errors.hpp"

namespace msv2 {

// Self-attention band: position t may see [t - left, t + right], clipped to
// the sequence bounds.
struct AttentionWindow {
    int left = 0;
    int right = 0;

    bool operator==(const AttentionWindow&) const = default;
};

enum class ModelSize { tiny, small, medium };

const char* model_size_name(ModelSize size);
ModelSize model_size_from_name(const std::string& name); // throws ConfigError

// ─── Model configuration ────────────────────────────────────────────────────
//
// Attention uses head_dim-sized heads everywhere. The encoder projects
// enc_dim -> num_heads_enc*head_dim for q/k/v and back for the output, so the
// attention width is decoupled from the residual width. Encoder feed-forward
// is a plain two-matrix block; the decoder feed-forward is SwiGLU. Neither
// carries biases, and norms are gain-only.
struct ModelConfig {
    int enc_dim = 320;
    int dec_dim = 320;
    int enc_layers = 6;
    int dec_layers = 6;
    int num_heads_enc = 5;
    int num_heads_dec = 5;
    int head_dim = 64;
    int ffn_mult = 4;
    int vocab_size = 32768;
    std::vector<AttentionWindow> window_schedule; // one entry per encoder layer

    double feature_rate_hz = 50.0;
    int sample_rate_hz = 16000;

    // Frontend: per-frame 80 -> enc_dim embedding, then two causal stride-2
    // convolutions enc_dim -> enc_dim with this kernel size.
    int frontend_kernel = 10;

    // Adapter positional table length (frames). Bounds a decodable segment.
    int max_positions = 4096;

    int bos_id = 1;
    int eos_id = 2;

    float norm_eps = 1e-5f;
    float rope_base = 10000.0f;
    bool rope_in_cross_attention = false;

    int enc_attn_dim() const { return num_heads_enc * head_dim; }
    int dec_attn_dim() const { return num_heads_dec * head_dim; }
    int enc_ffn_dim() const { return ffn_mult * enc_dim; }
    int dec_ffn_dim() const { return ffn_mult * dec_dim; }

    // Samples per 50 Hz feature frame (80 * 2 * 2).
    int samples_per_feature() const { return 80 * 2 * 2; }

    void validate() const; // throws ConfigError
};

// The standard window schedule: (16,4) on the first two and last two layers,
// (16,0) on every intermediate layer.
std::vector<AttentionWindow> standard_window_schedule(int enc_layers);

ModelConfig preset_config(ModelSize size);
ModelConfig preset_config(const std::string& name);

// ─── Parameter counting ─────────────────────────────────────────────────────

struct ParamBreakdown {
    int64_t pre = 0;
    int64_t enc = 0;
    int64_t adap = 0;
    int64_t dec = 0;
    int64_t total = 0;
};

ParamBreakdown count_params(const ModelConfig& cfg);

// ─── JSON round-trip (standalone config files and weight-file manifests) ───

std::string config_to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const std::string& json_text); // throws ConfigError
ModelConfig load_config_file(const std::string& path);      // throws ConfigError

} // namespace msv2
