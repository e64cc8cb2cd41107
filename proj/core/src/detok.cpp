#include "msv2/detok.hpp"

namespace msv2 {

std::string detokenize_bytes(const std::vector<int>& tokens) {
    std::string out;
    out.reserve(tokens.size());
    for (int t : tokens) {
        if (t < 3) continue;
        const unsigned char b = static_cast<unsigned char>((t - 3) & 0xFF);
        out.push_back(b >= 32 && b <= 126 ? static_cast<char>(b) : '.');
    }
    return out;
}

} // namespace msv2
