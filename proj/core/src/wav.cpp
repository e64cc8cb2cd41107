#include "msv2/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "msv2/errors.hpp"

namespace msv2 {

namespace {

uint32_t read_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) | (static_cast<uint32_t>(p[2]) << 16) |
           (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const unsigned char* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

} // namespace

AudioBuffer read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw AudioError("cannot open audio file: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw AudioError("not a RIFF/WAVE file: " + path);

    bool have_fmt = false;
    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    size_t data_pos = 0, data_len = 0;

    size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const uint32_t len = read_u32(bytes.data() + pos + 4);
        const size_t body = pos + 8;
        if (body + len > bytes.size()) throw AudioError("truncated WAV chunk in " + path);
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (len < 16) throw AudioError("malformed fmt chunk in " + path);
            format = read_u16(bytes.data() + body);
            channels = read_u16(bytes.data() + body + 2);
            rate = read_u32(bytes.data() + body + 4);
            bits = read_u16(bytes.data() + body + 14);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            data_pos = body;
            data_len = len;
        }
        pos = body + len + (len & 1); // chunks are word-aligned
    }

    if (!have_fmt || data_pos == 0) throw AudioError("WAV file missing fmt or data chunk: " + path);
    if (format != 1) throw AudioError("unsupported WAV codec (want PCM): " + path);
    if (channels != 1) throw AudioError("unsupported channel count " + std::to_string(channels) + " (want mono): " + path);
    if (rate != 16000) throw AudioError("unsupported sample rate " + std::to_string(rate) + " Hz (want 16000): " + path);
    if (bits != 16) throw AudioError("unsupported bit depth " + std::to_string(bits) + " (want 16): " + path);

    AudioBuffer audio;
    audio.sample_rate_hz = 16000;
    const size_t n = data_len / 2;
    audio.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
        int16_t v;
        std::memcpy(&v, bytes.data() + data_pos + 2 * i, 2);
        audio.samples[i] = static_cast<float>(v) / 32768.0f;
    }
    return audio;
}

void write_wav(const std::string& path, const AudioBuffer& audio) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw AudioError("cannot open audio file for writing: " + path);

    const uint32_t n = static_cast<uint32_t>(audio.samples.size());
    const uint32_t rate = static_cast<uint32_t>(audio.sample_rate_hz);
    const uint32_t data_len = n * 2;
    const uint32_t riff_len = 36 + data_len;

    auto put_u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };

    out.write("RIFF", 4);
    put_u32(riff_len);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(16);
    put_u16(1); // PCM
    put_u16(1); // mono
    put_u32(rate);
    put_u32(rate * 2);
    put_u16(2);
    put_u16(16);
    out.write("data", 4);
    put_u32(data_len);
    for (float s : audio.samples) {
        const float c = std::clamp(s, -1.0f, 1.0f);
        const int16_t v = static_cast<int16_t>(std::lround(c * 32767.0f));
        put_u16(static_cast<uint16_t>(v));
    }
}

} // namespace msv2
