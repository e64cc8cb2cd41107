#include "msv2/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace msv2 {

using nlohmann::json;

const char* model_size_name(ModelSize size) {
    switch (size) {
        case ModelSize::tiny: return "tiny";
        case ModelSize::small: return "small";
        case ModelSize::medium: return "medium";
    }
    throw ConfigError("unknown model size enum value");
}

ModelSize model_size_from_name(const std::string& name) {
    if (name == "tiny") return ModelSize::tiny;
    if (name == "small") return ModelSize::small;
    if (name == "medium") return ModelSize::medium;
    throw ConfigError("unknown model size '" + name + "' (expected tiny, small, or medium)");
}

std::vector<AttentionWindow> standard_window_schedule(int enc_layers) {
    if (enc_layers < 4) throw ConfigError("standard window schedule needs at least 4 encoder layers");
    std::vector<AttentionWindow> sched(static_cast<size_t>(enc_layers), AttentionWindow{16, 0});
    sched[0] = sched[1] = AttentionWindow{16, 4};
    sched[static_cast<size_t>(enc_layers) - 2] = AttentionWindow{16, 4};
    sched[static_cast<size_t>(enc_layers) - 1] = AttentionWindow{16, 4};
    return sched;
}

ModelConfig preset_config(ModelSize size) {
    ModelConfig cfg;
    switch (size) {
        case ModelSize::tiny:
            cfg.enc_dim = 320;
            cfg.dec_dim = 320;
            cfg.enc_layers = 6;
            cfg.dec_layers = 6;
            break;
        case ModelSize::small:
            cfg.enc_dim = 620;
            cfg.dec_dim = 512;
            cfg.enc_layers = 10;
            cfg.dec_layers = 10;
            break;
        case ModelSize::medium:
            cfg.enc_dim = 768;
            cfg.dec_dim = 640;
            cfg.enc_layers = 14;
            cfg.dec_layers = 14;
            break;
    }
    // 64-wide heads; the attention width tracks the decoder width for both
    // stacks, which is what the per-block parameter budgets pin down.
    cfg.num_heads_enc = cfg.dec_dim / cfg.head_dim;
    cfg.num_heads_dec = cfg.dec_dim / cfg.head_dim;
    cfg.window_schedule = standard_window_schedule(cfg.enc_layers);
    cfg.validate();
    return cfg;
}

ModelConfig preset_config(const std::string& name) { return preset_config(model_size_from_name(name)); }

void ModelConfig::validate() const {
    auto positive = [](int v, const char* what) {
        if (v <= 0) throw ConfigError(std::string(what) + " must be positive");
    };
    positive(enc_dim, "enc_dim");
    positive(dec_dim, "dec_dim");
    positive(enc_layers, "enc_layers");
    positive(dec_layers, "dec_layers");
    positive(num_heads_enc, "num_heads_enc");
    positive(num_heads_dec, "num_heads_dec");
    positive(head_dim, "head_dim");
    positive(ffn_mult, "ffn_mult");
    positive(vocab_size, "vocab_size");
    positive(sample_rate_hz, "sample_rate_hz");
    positive(frontend_kernel, "frontend_kernel");
    positive(max_positions, "max_positions");
    if (head_dim % 2 != 0) throw ConfigError("head_dim must be even (RoPE rotates pairs)");
    if (window_schedule.size() != static_cast<size_t>(enc_layers))
        throw ConfigError("window_schedule length must equal enc_layers");
    for (const auto& w : window_schedule)
        if (w.left < 0 || w.right < 0) throw ConfigError("attention windows must be non-negative");
    if (dec_attn_dim() != dec_dim)
        throw ConfigError("decoder attention width (num_heads_dec * head_dim) must equal dec_dim");
    double expect_rate = static_cast<double>(sample_rate_hz) / (80.0 * 2.0 * 2.0);
    if (feature_rate_hz != expect_rate)
        throw ConfigError("feature_rate_hz must be sample_rate_hz / 320");
    if (vocab_size <= eos_id || vocab_size <= bos_id || bos_id == eos_id || bos_id < 0 || eos_id < 0)
        throw ConfigError("bos/eos ids must be distinct and inside the vocabulary");
}

ParamBreakdown count_params(const ModelConfig& cfg) {
    cfg.validate();
    const int64_t e = cfg.enc_dim;
    const int64_t d = cfg.dec_dim;
    const int64_t a = cfg.enc_attn_dim();
    const int64_t k = cfg.frontend_kernel;

    ParamBreakdown p;
    // Frontend: embed 80->e plus two k-tap convs e->e.
    p.pre = 80 * e + 2 * k * e * e;
    // Encoder layer: q/k/v e->a, o a->e, two norm gains, plain FFN e->mult*e->e.
    int64_t enc_layer = 4 * e * a + 2 * e * cfg.enc_ffn_dim() + 2 * e;
    p.enc = cfg.enc_layers * enc_layer + e; // final norm
    // Adapter: positional table plus projection when widths differ.
    p.adap = static_cast<int64_t>(cfg.max_positions) * e + (e == d ? 0 : e * d);
    // Decoder layer: self + cross attention (square), SwiGLU FFN, three norms.
    int64_t dec_layer = 8 * d * d + 3 * d * cfg.dec_ffn_dim() + 3 * d;
    p.dec = static_cast<int64_t>(cfg.vocab_size) * d + cfg.dec_layers * dec_layer + d;
    p.total = p.pre + p.enc + p.adap + p.dec;
    return p;
}

// ─── JSON ───────────────────────────────────────────────────────────────────

static json window_schedule_to_json(const std::vector<AttentionWindow>& sched) {
    json arr = json::array();
    for (const auto& w : sched) arr.push_back(json::array({w.left, w.right}));
    return arr;
}

std::string config_to_json(const ModelConfig& cfg) {
    json j;
    j["enc_dim"] = cfg.enc_dim;
    j["dec_dim"] = cfg.dec_dim;
    j["enc_layers"] = cfg.enc_layers;
    j["dec_layers"] = cfg.dec_layers;
    j["num_heads_enc"] = cfg.num_heads_enc;
    j["num_heads_dec"] = cfg.num_heads_dec;
    j["head_dim"] = cfg.head_dim;
    j["ffn_mult"] = cfg.ffn_mult;
    j["vocab_size"] = cfg.vocab_size;
    j["window_schedule"] = window_schedule_to_json(cfg.window_schedule);
    j["feature_rate_hz"] = cfg.feature_rate_hz;
    j["sample_rate_hz"] = cfg.sample_rate_hz;
    j["frontend_kernel"] = cfg.frontend_kernel;
    j["max_positions"] = cfg.max_positions;
    j["bos_id"] = cfg.bos_id;
    j["eos_id"] = cfg.eos_id;
    j["norm_eps"] = cfg.norm_eps;
    j["rope_base"] = cfg.rope_base;
    j["rope_in_cross_attention"] = cfg.rope_in_cross_attention;
    return j.dump(2);
}

ModelConfig config_from_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config JSON parse error: ") + e.what());
    }
    ModelConfig cfg;
    try {
        j.at("enc_dim").get_to(cfg.enc_dim);
        j.at("dec_dim").get_to(cfg.dec_dim);
        j.at("enc_layers").get_to(cfg.enc_layers);
        j.at("dec_layers").get_to(cfg.dec_layers);
        j.at("num_heads_enc").get_to(cfg.num_heads_enc);
        j.at("num_heads_dec").get_to(cfg.num_heads_dec);
        cfg.head_dim = j.value("head_dim", cfg.head_dim);
        cfg.ffn_mult = j.value("ffn_mult", cfg.ffn_mult);
        j.at("vocab_size").get_to(cfg.vocab_size);
        cfg.window_schedule.clear();
        for (const auto& w : j.at("window_schedule"))
            cfg.window_schedule.push_back(AttentionWindow{w.at(0).get<int>(), w.at(1).get<int>()});
        cfg.feature_rate_hz = j.value("feature_rate_hz", cfg.feature_rate_hz);
        cfg.sample_rate_hz = j.value("sample_rate_hz", cfg.sample_rate_hz);
        cfg.frontend_kernel = j.value("frontend_kernel", cfg.frontend_kernel);
        cfg.max_positions = j.value("max_positions", cfg.max_positions);
        cfg.bos_id = j.value("bos_id", cfg.bos_id);
        cfg.eos_id = j.value("eos_id", cfg.eos_id);
        cfg.norm_eps = j.value("norm_eps", cfg.norm_eps);
        cfg.rope_base = j.value("rope_base", cfg.rope_base);
        cfg.rope_in_cross_attention = j.value("rope_in_cross_attention", cfg.rope_in_cross_attention);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config JSON missing or malformed field: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ModelConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return config_from_json(ss.str());
}

} // namespace msv2
