#include "msv2/encoder.hpp"

#include <cmath>
#include <cstring>

#include "msv2/errors.hpp"
#include "msv2/ops.hpp"

namespace msv2 {

ReceptiveField receptive_field(const ModelConfig& cfg) {
    ReceptiveField rf;
    for (const auto& w : cfg.window_schedule) {
        rf.left += w.left;
        rf.right += w.right;
    }
    return rf;
}

EncoderStream::EncoderStream(const WeightStore& w) : w_(&w), cfg_(w.cfg) {
    cfg_.validate();
    layers_.resize(static_cast<size_t>(cfg_.enc_layers));
    for (int i = 0; i < cfg_.enc_layers; ++i) {
        Layer& L = layers_[static_cast<size_t>(i)];
        const std::string p = "enc.layer" + std::to_string(i) + ".";
        L.win = cfg_.window_schedule[static_cast<size_t>(i)];
        L.norm1 = &w.get(p + "norm1.gain");
        L.wq = &w.get(p + "attn.q");
        L.wk = &w.get(p + "attn.k");
        L.wv = &w.get(p + "attn.v");
        L.wo = &w.get(p + "attn.o");
        L.norm2 = &w.get(p + "norm2.gain");
        L.w1 = &w.get(p + "ffn.w1");
        L.w2 = &w.get(p + "ffn.w2");
    }
}

void EncoderStream::append_settled(Layer& L, const float* row) {
    const int64_t e = cfg_.enc_dim;
    const int64_t a = cfg_.enc_attn_dim();
    L.x.insert(L.x.end(), row, row + e);
    const size_t nx_off = L.nx.size();
    L.nx.resize(nx_off + static_cast<size_t>(e));
    ops::layer_norm_row(L.nx.data() + nx_off, row, L.norm1->data.data(), e, cfg_.norm_eps);
    const size_t kv_off = L.k.size();
    L.k.resize(kv_off + static_cast<size_t>(a));
    L.v.resize(kv_off + static_cast<size_t>(a));
    ops::matvec(L.k.data() + kv_off, L.wk->data.data(), L.nx.data() + nx_off, a, e);
    ops::matvec(L.v.data() + kv_off, L.wv->data.data(), L.nx.data() + nx_off, a, e);
    ++L.n_in;
}

void EncoderStream::evict(Layer& L) {
    // Rows below n_out - left can never sit in a future band.
    const int64_t keep_from = std::max<int64_t>(0, L.n_out - L.win.left);
    if (keep_from <= L.base) return;
    const int64_t drop = keep_from - L.base;
    const int64_t e = cfg_.enc_dim;
    const int64_t a = cfg_.enc_attn_dim();
    L.x.erase(L.x.begin(), L.x.begin() + drop * e);
    L.nx.erase(L.nx.begin(), L.nx.begin() + drop * e);
    L.k.erase(L.k.begin(), L.k.begin() + drop * a);
    L.v.erase(L.v.begin(), L.v.begin() + drop * a);
    L.base = keep_from;
}

void EncoderStream::output_row(const Layer& L, int64_t t, int64_t end, const float* kv, const float* vv,
                               int64_t kv_base, const float* nx_row, const float* x_row, float* out) const {
    const int64_t e = cfg_.enc_dim;
    const int64_t a = cfg_.enc_attn_dim();
    const int64_t lo = std::max<int64_t>(0, t - L.win.left);
    const int64_t hi = std::min<int64_t>(end - 1, t + L.win.right);

    std::vector<float> q(static_cast<size_t>(a)), mix(static_cast<size_t>(a));
    ops::matvec(q.data(), L.wq->data.data(), nx_row, a, e);
    ops::attention_row(mix.data(), q.data(), kv, vv, kv_base, lo, hi, cfg_.num_heads_enc, cfg_.head_dim);

    // y = x + Wo · mix ; out = y + FFN(norm2(y))
    std::vector<float> y(x_row, x_row + e);
    ops::matvec_add(y.data(), L.wo->data.data(), mix.data(), e, a);

    std::vector<float> ny(static_cast<size_t>(e));
    ops::layer_norm_row(ny.data(), y.data(), L.norm2->data.data(), e, cfg_.norm_eps);
    const int64_t hidden = cfg_.enc_ffn_dim();
    std::vector<float> h(static_cast<size_t>(hidden));
    ops::matvec(h.data(), L.w1->data.data(), ny.data(), hidden, e);
    for (auto& vh : h) vh = ops::apply_activation(ops::Activation::gelu, vh);
    std::memcpy(out, y.data(), sizeof(float) * static_cast<size_t>(e));
    ops::matvec_add(out, L.w2->data.data(), h.data(), e, hidden);
}

void EncoderStream::settled_output_row(const Layer& L, int64_t t, float* out) const {
    const int64_t e = cfg_.enc_dim;
    // Settled rows never clip on the right: t + right < n_in by construction.
    output_row(L, t, L.n_in, L.k.data(), L.v.data(), L.base, L.nx.data() + (t - L.base) * e,
               L.x.data() + (t - L.base) * e, out);
}

EncoderStream::PushResult EncoderStream::push(const Tensor& new_features) {
    if (flushed_) throw SessionError("encoder stream already flushed");
    if (new_features.rows() > 0 && new_features.cols() != cfg_.enc_dim)
        throw ShapeError("encoder: feature width " + std::to_string(new_features.cols()) + " != enc_dim");

    const int64_t e = cfg_.enc_dim;
    PushResult result;
    result.finalized_start = finalized_;
    std::vector<float> final_rows;

    std::vector<float> cur(static_cast<size_t>(e)), next(static_cast<size_t>(e));
    for (int64_t r = 0; r < new_features.rows(); ++r) {
        std::memcpy(cur.data(), new_features.row_ptr(r), sizeof(float) * static_cast<size_t>(e));
        ++frames_in_;
        bool alive = true;
        for (size_t li = 0; li < layers_.size() && alive; ++li) {
            Layer& L = layers_[li];
            append_settled(L, cur.data());
            // One input row unlocks at most one new settled output.
            if (L.n_out + L.win.right < L.n_in) {
                settled_output_row(L, L.n_out, next.data());
                ++L.n_out;
                evict(L);
                std::swap(cur, next);
            } else {
                alive = false;
            }
        }
        if (alive) {
            final_rows.insert(final_rows.end(), cur.begin(), cur.end());
            ++finalized_;
        }
    }

    result.finalized = Tensor({static_cast<int64_t>(final_rows.size()) / e, e});
    result.finalized.data = std::move(final_rows);
    return result;
}

ProvisionalOutput EncoderStream::provisional() {
    if (flushed_) throw SessionError("encoder stream already flushed");
    const int64_t e = cfg_.enc_dim;
    const int64_t a = cfg_.enc_attn_dim();
    const int64_t total = frames_in_;

    // Provisional inputs to the bottom layer: none (features are settled on
    // arrival); each layer then contributes its unsettled suffix.
    std::vector<float> prov_x; // rows [L.n_in, total) of the current layer's input
    for (Layer& L : layers_) {
        const int64_t tail_start = std::max<int64_t>(0, std::max(L.base, L.n_out - L.win.left));
        const int64_t n_settled = L.n_in - tail_start;
        const int64_t n_prov = total - L.n_in;
        const int64_t n_rows = n_settled + n_prov;

        // Assemble contiguous x/nx/k/v for [tail_start, total).
        std::vector<float> nx(static_cast<size_t>(n_rows * e));
        std::vector<float> kv(static_cast<size_t>(n_rows * a)), vv(static_cast<size_t>(n_rows * a));
        std::memcpy(nx.data(), L.nx.data() + (tail_start - L.base) * e, sizeof(float) * static_cast<size_t>(n_settled * e));
        std::memcpy(kv.data(), L.k.data() + (tail_start - L.base) * a, sizeof(float) * static_cast<size_t>(n_settled * a));
        std::memcpy(vv.data(), L.v.data() + (tail_start - L.base) * a, sizeof(float) * static_cast<size_t>(n_settled * a));
        for (int64_t i = 0; i < n_prov; ++i) {
            const float* row = prov_x.data() + i * e;
            float* nrow = nx.data() + (n_settled + i) * e;
            ops::layer_norm_row(nrow, row, L.norm1->data.data(), e, cfg_.norm_eps);
            ops::matvec(kv.data() + (n_settled + i) * a, L.wk->data.data(), nrow, a, e);
            ops::matvec(vv.data() + (n_settled + i) * a, L.wv->data.data(), nrow, a, e);
        }

        // Outputs [n_out, total) with the band right-clipped at the current
        // end of input; these are this layer's provisional rows.
        const int64_t out_start = L.n_out;
        std::vector<float> out(static_cast<size_t>((total - out_start) * e));
        for (int64_t t = out_start; t < total; ++t) {
            const float* x_row = t < L.n_in ? L.x.data() + (t - L.base) * e : prov_x.data() + (t - L.n_in) * e;
            output_row(L, t, total, kv.data(), vv.data(), tail_start, nx.data() + (t - tail_start) * e, x_row,
                       out.data() + (t - out_start) * e);
        }
        prov_x = std::move(out);
    }

    ProvisionalOutput result;
    result.start = finalized_;
    result.rows = Tensor({total - finalized_, e});
    result.rows.data = std::move(prov_x);
    return result;
}

Tensor EncoderStream::flush() {
    if (flushed_) throw SessionError("encoder stream already flushed");
    flushed_ = true;
    const int64_t e = cfg_.enc_dim;
    const int64_t total = frames_in_;

    std::vector<float> incoming; // settled rows cascading from below
    for (Layer& L : layers_) {
        const int64_t n_new = static_cast<int64_t>(incoming.size()) / e;
        for (int64_t i = 0; i < n_new; ++i) append_settled(L, incoming.data() + i * e);
        // Everything left finalizes now, with bands clipped at the true end.
        std::vector<float> out(static_cast<size_t>((L.n_in - L.n_out) * e));
        int64_t idx = 0;
        for (int64_t t = L.n_out; t < L.n_in; ++t, ++idx)
            output_row(L, t, L.n_in, L.k.data(), L.v.data(), L.base, L.nx.data() + (t - L.base) * e,
                       L.x.data() + (t - L.base) * e, out.data() + idx * e);
        L.n_out = L.n_in;
        incoming = std::move(out);
    }

    Tensor tail({total - finalized_, e});
    tail.data = std::move(incoming);
    finalized_ = total;
    return tail;
}

Tensor encode_full(const Tensor& features, const WeightStore& w) {
    if (features.rows() < 1) throw ShapeError("encode_full: need at least one feature frame");
    EncoderStream stream(w);
    auto settled = stream.push(features);
    Tensor tail = stream.flush();

    Tensor out({features.rows(), features.cols()});
    std::memcpy(out.data.data(), settled.finalized.data.data(), settled.finalized.data.size() * sizeof(float));
    std::memcpy(out.data.data() + settled.finalized.data.size(), tail.data.data(), tail.data.size() * sizeof(float));
    return out;
}

} // namespace msv2
