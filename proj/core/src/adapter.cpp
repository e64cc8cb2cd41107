#include "msv2/adapter.hpp"

#include "msv2/errors.hpp"
#include "msv2/ops.hpp"

namespace msv2 {

Tensor adapt(const Tensor& enc_out, int64_t start_pos, const WeightStore& w) {
    const ModelConfig& cfg = w.cfg;
    if (enc_out.rows() > 0 && enc_out.cols() != cfg.enc_dim)
        throw ShapeError("adapter: input width does not match enc_dim");
    if (start_pos < 0 || start_pos + enc_out.rows() > cfg.max_positions)
        throw PositionOverflowError("adapter: positions " + std::to_string(start_pos) + ".." +
                                    std::to_string(start_pos + enc_out.rows()) + " exceed the positional table (" +
                                    std::to_string(cfg.max_positions) + ")");

    const Tensor& pos = w.get("adapter.pos");
    Tensor shifted = enc_out;
    for (int64_t r = 0; r < shifted.rows(); ++r) {
        const float* p = pos.row_ptr(start_pos + r);
        float* row = shifted.row_ptr(r);
        for (int64_t c = 0; c < shifted.cols(); ++c) row[c] += p[c];
    }
    if (cfg.enc_dim == cfg.dec_dim) return shifted;
    return ops::linear(shifted, w.get("adapter.proj"));
}

} // namespace msv2
