#pragma once

#include <string>
#include <vector>

#include "msv2/config.hpp"

namespace msv2 {

// Byte-level fallback detokenizer for demo output: ids below 3 are control
// tokens and render as nothing; otherwise (id - 3) mod 256 is a byte, kept
// when printable ASCII and shown as '.' when not. Real tokenizers are out of
// scope; token ids are otherwise opaque.
std::string detokenize_bytes(const std::vector<int>& tokens);

} // namespace msv2
