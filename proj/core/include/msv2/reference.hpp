#pragma once

#include <string>
#include <vector>

#include "msv2/tensor.hpp"
#include "msv2/wav.hpp"
#include "msv2/weights.hpp"

namespace msv2 {

// Full-sequence dense-attention encoder: the same weights as the banded
// encoder with no window anywhere. Numerically this is the oracle the banded
// path is checked against (with maximal windows the two must agree); for
// latency it is the encode-the-whole-utterance baseline, with attention cost
// growing as T^2.
Tensor encode_full_attention(const Tensor& features, const WeightStore& w);

struct FullPipelineResult {
    std::vector<int> tokens;
    std::string text;
    double frontend_ms = 0;
    double encode_ms = 0;
    double ttft_ms = 0;  // audio complete -> first decoded token (>= encode time)
    double total_ms = 0; // audio complete -> full transcript
};

// Offline pipeline: frontend -> dense encode -> adapter -> greedy decode.
// Nothing starts until the whole utterance is available.
FullPipelineResult pipeline_full(const AudioBuffer& audio, const WeightStore& w, int max_tokens = 224);

} // namespace msv2
