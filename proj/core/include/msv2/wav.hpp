#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace msv2 {

struct AudioBuffer {
    std::vector<float> samples; // mono, nominally in [-1, 1]
    int sample_rate_hz = 16000;

    double seconds() const {
        return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
    }
};

// Strict reader: 16 kHz mono 16-bit PCM little-endian only; anything else is
// an AudioError with a reason. Samples come back as int16/32768.
AudioBuffer read_wav(const std::string& path);

// PCM16 writer for tools and tests.
void write_wav(const std::string& path, const AudioBuffer& audio);

} // namespace msv2
