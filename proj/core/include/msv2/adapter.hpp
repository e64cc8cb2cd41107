#pragma once

#include <cstdint>

#include "msv2/tensor.hpp"
#include "msv2/weights.hpp"

namespace msv2 {

// Bridges the position-free encoder to the position-aware decoder: adds the
// learned positional row for each absolute frame index, then projects
// enc_dim -> dec_dim (the projection does not exist when the widths match).
// start_pos + rows must stay within cfg.max_positions; past that the
// positional table is exhausted and the call throws PositionOverflowError.
Tensor adapt(const Tensor& enc_out, int64_t start_pos, const WeightStore& w);

} // namespace msv2
