#include "msv2/decoder.hpp"

#include <cmath>
#include <cstring>

#include "msv2/errors.hpp"
#include "msv2/ops.hpp"

namespace msv2 {

int argmax(const float* x, int64_t n) {
    int best = 0;
    for (int64_t i = 1; i < n; ++i)
        if (x[i] > x[best]) best = static_cast<int>(i);
    return best;
}

// ─── Cross cache ────────────────────────────────────────────────────────────

CrossCache prepare_cross(const Tensor& adapter_out, const WeightStore& w) {
    CrossCache cache;
    cache.k.resize(static_cast<size_t>(w.cfg.dec_layers));
    cache.v.resize(static_cast<size_t>(w.cfg.dec_layers));
    extend_cross(cache, adapter_out, w);
    return cache;
}

void extend_cross(CrossCache& cache, const Tensor& new_rows, const WeightStore& w) {
    const ModelConfig& cfg = w.cfg;
    if (cache.k.empty()) {
        cache.k.resize(static_cast<size_t>(cfg.dec_layers));
        cache.v.resize(static_cast<size_t>(cfg.dec_layers));
    }
    if (new_rows.rows() > 0 && new_rows.cols() != cfg.dec_dim)
        throw ShapeError("cross cache: adapter rows must be dec_dim wide");
    const int64_t d = cfg.dec_dim;
    for (int l = 0; l < cfg.dec_layers; ++l) {
        const std::string p = "dec.layer" + std::to_string(l) + ".";
        const Tensor& wk = w.get(p + "cross.k");
        const Tensor& wv = w.get(p + "cross.v");
        auto& kl = cache.k[static_cast<size_t>(l)];
        auto& vl = cache.v[static_cast<size_t>(l)];
        for (int64_t r = 0; r < new_rows.rows(); ++r) {
            const size_t off = kl.size();
            kl.resize(off + static_cast<size_t>(d));
            vl.resize(off + static_cast<size_t>(d));
            ops::matvec(kl.data() + off, wk.data.data(), new_rows.row_ptr(r), d, d);
            ops::matvec(vl.data() + off, wv.data.data(), new_rows.row_ptr(r), d, d);
        }
    }
    cache.frames += new_rows.rows();
}

void truncate_cross(CrossCache& cache, int64_t frames, const WeightStore& w) {
    if (frames < 0 || frames > cache.frames) throw SessionError("truncate_cross: bad frame count");
    const size_t keep = static_cast<size_t>(frames) * static_cast<size_t>(w.cfg.dec_dim);
    for (auto& kl : cache.k) kl.resize(keep);
    for (auto& vl : cache.v) vl.resize(keep);
    cache.frames = frames;
}

// ─── Incremental path ───────────────────────────────────────────────────────

DecodeState new_decode_state(const ModelConfig& cfg) {
    DecodeState state;
    state.tokens.push_back(cfg.bos_id);
    state.self_k.resize(static_cast<size_t>(cfg.dec_layers));
    state.self_v.resize(static_cast<size_t>(cfg.dec_layers));
    return state;
}

namespace {

void rope_heads(float* vec, const ModelConfig& cfg, int64_t position) {
    for (int h = 0; h < cfg.num_heads_dec; ++h)
        ops::rope_rotate_inplace(vec + static_cast<int64_t>(h) * cfg.head_dim, cfg.head_dim, position, cfg.rope_base);
}

} // namespace

StepResult decode_step(DecodeState& state, const CrossCache& cross, const WeightStore& w, int64_t cross_from) {
    const ModelConfig& cfg = w.cfg;
    if (cross.frames == 0) throw SessionError("decode_step: cross-attention features are empty");
    if (cross_from < 0 || cross_from >= cross.frames) throw SessionError("decode_step: cross_from out of range");
    if (state.tokens.empty() || state.tokens.front() != cfg.bos_id)
        throw SessionError("decode_step: token sequence must begin with BOS");
    if (state.processed >= static_cast<int64_t>(state.tokens.size()))
        throw SessionError("decode_step: cache/token desync (nothing pending)");
    const int64_t d = cfg.dec_dim;

    std::vector<float> x(static_cast<size_t>(d)), scratch(static_cast<size_t>(d)), mix(static_cast<size_t>(d));
    const Tensor& embed = w.get("dec.embed");
    Tensor logits({cfg.vocab_size});

    while (state.processed < static_cast<int64_t>(state.tokens.size())) {
        const int64_t pos = state.processed;
        const int tok = state.tokens[static_cast<size_t>(pos)];
        if (tok < 0 || tok >= cfg.vocab_size) throw SessionError("decode_step: token id out of vocabulary");
        std::memcpy(x.data(), embed.row_ptr(tok), sizeof(float) * static_cast<size_t>(d));

        for (int l = 0; l < cfg.dec_layers; ++l) {
            const std::string p = "dec.layer" + std::to_string(l) + ".";
            auto& kl = state.self_k[static_cast<size_t>(l)];
            auto& vl = state.self_v[static_cast<size_t>(l)];

            // Self-attention over the cached prefix plus this token.
            ops::layer_norm_row(scratch.data(), x.data(), w.get(p + "norm1.gain").data.data(), d, cfg.norm_eps);
            std::vector<float> q(static_cast<size_t>(d));
            ops::matvec(q.data(), w.get(p + "self.q").data.data(), scratch.data(), d, d);
            rope_heads(q.data(), cfg, pos);
            const size_t off = kl.size();
            kl.resize(off + static_cast<size_t>(d));
            vl.resize(off + static_cast<size_t>(d));
            ops::matvec(kl.data() + off, w.get(p + "self.k").data.data(), scratch.data(), d, d);
            rope_heads(kl.data() + off, cfg, pos);
            ops::matvec(vl.data() + off, w.get(p + "self.v").data.data(), scratch.data(), d, d);
            ops::attention_row(mix.data(), q.data(), kl.data(), vl.data(), 0, 0, pos, cfg.num_heads_dec, cfg.head_dim);
            ops::matvec_add(x.data(), w.get(p + "self.o").data.data(), mix.data(), d, d);

            // Cross-attention over every available adapter frame.
            ops::layer_norm_row(scratch.data(), x.data(), w.get(p + "norm2.gain").data.data(), d, cfg.norm_eps);
            ops::matvec(q.data(), w.get(p + "cross.q").data.data(), scratch.data(), d, d);
            if (cfg.rope_in_cross_attention) rope_heads(q.data(), cfg, pos);
            ops::attention_row(mix.data(), q.data(), cross.k[static_cast<size_t>(l)].data(),
                               cross.v[static_cast<size_t>(l)].data(), 0, cross_from, cross.frames - 1,
                               cfg.num_heads_dec, cfg.head_dim);
            ops::matvec_add(x.data(), w.get(p + "cross.o").data.data(), mix.data(), d, d);

            // SwiGLU feed-forward.
            ops::layer_norm_row(scratch.data(), x.data(), w.get(p + "norm3.gain").data.data(), d, cfg.norm_eps);
            Tensor row({1, d});
            std::memcpy(row.data.data(), scratch.data(), sizeof(float) * static_cast<size_t>(d));
            Tensor f = ops::swiglu_ffn(row, w.get(p + "ffn.gate"), w.get(p + "ffn.up"), w.get(p + "ffn.down"));
            for (int64_t i = 0; i < d; ++i) x[static_cast<size_t>(i)] += f.data[static_cast<size_t>(i)];
        }

        ops::layer_norm_row(scratch.data(), x.data(), w.get("dec.norm.gain").data.data(), d, cfg.norm_eps);
        ops::matvec(logits.data.data(), embed.data.data(), scratch.data(), cfg.vocab_size, d);
        ++state.processed;
    }

    StepResult result;
    result.logits = std::move(logits);
    result.next_token = argmax(result.logits.data.data(), cfg.vocab_size);
    state.tokens.push_back(result.next_token);
    return result;
}

std::vector<int> decode_greedy(const CrossCache& cross, const WeightStore& w, int max_tokens, int64_t cross_from) {
    if (max_tokens < 1) throw SessionError("decode_greedy: max_tokens must be >= 1");
    DecodeState state = new_decode_state(w.cfg);
    std::vector<int> emitted;
    for (int i = 0; i < max_tokens; ++i) {
        StepResult step = decode_step(state, cross, w, cross_from);
        emitted.push_back(step.next_token);
        if (step.next_token == w.cfg.eos_id) break;
    }
    return emitted;
}

std::vector<int> decode_greedy(const Tensor& adapter_out, const WeightStore& w, int max_tokens) {
    return decode_greedy(prepare_cross(adapter_out, w), w, max_tokens);
}

// ─── Batch reference ────────────────────────────────────────────────────────

Tensor decode_logits_batch(const std::vector<int>& tokens, const Tensor& adapter_out, const WeightStore& w) {
    const ModelConfig& cfg = w.cfg;
    if (tokens.empty()) throw SessionError("decode_logits_batch: empty token sequence");
    if (adapter_out.rows() == 0) throw SessionError("decode_logits_batch: cross-attention features are empty");
    const int64_t n = static_cast<int64_t>(tokens.size());
    const int64_t d = cfg.dec_dim;

    const Tensor& embed = w.get("dec.embed");
    Tensor x({n, d});
    for (int64_t t = 0; t < n; ++t) {
        const int tok = tokens[static_cast<size_t>(t)];
        if (tok < 0 || tok >= cfg.vocab_size) throw SessionError("decode_logits_batch: token id out of vocabulary");
        std::memcpy(x.row_ptr(t), embed.row_ptr(tok), sizeof(float) * static_cast<size_t>(d));
    }

    std::vector<int64_t> positions(static_cast<size_t>(n));
    for (int64_t t = 0; t < n; ++t) positions[static_cast<size_t>(t)] = t;

    for (int l = 0; l < cfg.dec_layers; ++l) {
        const std::string p = "dec.layer" + std::to_string(l) + ".";

        Tensor nx = ops::layer_norm(x, w.get(p + "norm1.gain"), cfg.norm_eps);
        Tensor q = ops::linear(nx, w.get(p + "self.q"));
        Tensor k = ops::linear(nx, w.get(p + "self.k"));
        Tensor v = ops::linear(nx, w.get(p + "self.v"));
        for (int64_t t = 0; t < n; ++t) {
            rope_heads(q.row_ptr(t), cfg, t);
            rope_heads(k.row_ptr(t), cfg, t);
        }
        // Causal mask via the dense path: unlimited left context, no right.
        Tensor mixed = ops::dense_attention(q, k, v, cfg.num_heads_dec,
                                            AttentionWindow{static_cast<int>(n), 0});
        Tensor proj = ops::linear(mixed, w.get(p + "self.o"));
        for (int64_t i = 0; i < x.numel(); ++i) x.data[static_cast<size_t>(i)] += proj.data[static_cast<size_t>(i)];

        Tensor nx2 = ops::layer_norm(x, w.get(p + "norm2.gain"), cfg.norm_eps);
        Tensor qc = ops::linear(nx2, w.get(p + "cross.q"));
        if (cfg.rope_in_cross_attention)
            for (int64_t t = 0; t < n; ++t) rope_heads(qc.row_ptr(t), cfg, t);
        Tensor kc = ops::linear(adapter_out, w.get(p + "cross.k"));
        Tensor vc = ops::linear(adapter_out, w.get(p + "cross.v"));
        Tensor mixed2 = ops::dense_cross_attention(qc, kc, vc, cfg.num_heads_dec);
        Tensor proj2 = ops::linear(mixed2, w.get(p + "cross.o"));
        for (int64_t i = 0; i < x.numel(); ++i) x.data[static_cast<size_t>(i)] += proj2.data[static_cast<size_t>(i)];

        Tensor nx3 = ops::layer_norm(x, w.get(p + "norm3.gain"), cfg.norm_eps);
        Tensor f = ops::swiglu_ffn(nx3, w.get(p + "ffn.gate"), w.get(p + "ffn.up"), w.get(p + "ffn.down"));
        for (int64_t i = 0; i < x.numel(); ++i) x.data[static_cast<size_t>(i)] += f.data[static_cast<size_t>(i)];
    }

    Tensor nf = ops::layer_norm(x, w.get("dec.norm.gain"), cfg.norm_eps);
    return ops::linear(nf, embed);
}

} // namespace msv2
