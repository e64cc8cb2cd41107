#include "msv2/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include <json.hpp>

#include "msv2/adapter.hpp"
#include "msv2/decoder.hpp"
#include "msv2/encoder.hpp"
#include "msv2/errors.hpp"
#include "msv2/frontend.hpp"
#include "msv2/encoder.hpp"

namespace msv2 {

AudioBuffer make_speech_audio(double seconds, uint64_t seed, int sample_rate_hz) {
    AudioBuffer audio;
    audio.sample_rate_hz = sample_rate_hz;
    const int64_t n = static_cast<int64_t>(std::llround(seconds * sample_rate_hz));
    audio.samples.resize(static_cast<size_t>(n));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> noise(-1.0f, 1.0f);
    std::uniform_real_distribution<double> freq_dist(2.0, 8.0);
    std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * M_PI);
    const double freq = freq_dist(rng);
    const double phase = phase_dist(rng);

    for (int64_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sample_rate_hz;
        const double envelope = 0.3 + 0.7 * (0.5 + 0.5 * std::sin(2.0 * M_PI * freq * t + phase));
        audio.samples[static_cast<size_t>(i)] = 0.5f * noise(rng) * static_cast<float>(envelope);
    }
    return audio;
}

void append_silence(AudioBuffer& audio, double seconds) {
    const int64_t n = static_cast<int64_t>(std::llround(seconds * audio.sample_rate_hz));
    audio.samples.insert(audio.samples.end(), static_cast<size_t>(n), 0.0f);
}

// ─── TTFT bench ─────────────────────────────────────────────────────────────

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double streaming_ttft_once(const WeightStore& w, const AudioBuffer& audio) {
    FrontendStream frontend(w);
    EncoderStream encoder(w);
    CrossCache cross;
    int64_t adapted = 0;

    // Capture phase (not part of TTFT): process chunk by chunk as the audio
    // "arrives", keeping adapter and cross-attention state current.
    const int64_t chunk = audio.sample_rate_hz / 4;
    for (int64_t off = 0; off < static_cast<int64_t>(audio.samples.size()); off += chunk) {
        const int64_t take = std::min<int64_t>(chunk, static_cast<int64_t>(audio.samples.size()) - off);
        Tensor rows = frontend.push(audio.samples.data() + off, take);
        auto pushed = encoder.push(rows);
        if (pushed.finalized.rows() > 0) {
            extend_cross(cross, adapt(pushed.finalized, adapted, w), w);
            adapted += pushed.finalized.rows();
        }
    }

    const double t0 = now_ms();
    Tensor tail = encoder.flush();
    if (tail.rows() > 0) extend_cross(cross, adapt(tail, adapted, w), w);
    DecodeState state = new_decode_state(w.cfg);
    decode_step(state, cross, w);
    return now_ms() - t0;
}

double full_ttft_once(const WeightStore& w, const AudioBuffer& audio) {
    const double t0 = now_ms();
    FrontendBatchResult fe = preprocess_batch(audio, w);
    Tensor enc = encode_full(fe.features.frames, w);
    CrossCache cross = prepare_cross(adapt(enc, 0, w), w);
    DecodeState state = new_decode_state(w.cfg);
    decode_step(state, cross, w);
    return now_ms() - t0;
}

} // namespace

std::vector<TtftRow> bench_ttft(const WeightStore& w, const std::vector<double>& durations_s, uint64_t seed,
                                int repetitions) {
    if (durations_s.empty()) throw ConfigError("bench_ttft: need at least one duration");
    if (repetitions < 1) throw ConfigError("bench_ttft: repetitions must be >= 1");
    for (double d : durations_s)
        if (d < 1.0) throw ConfigError("bench_ttft: durations must be >= 1 s");

    // Warm caches once so the first measured duration is not penalized.
    {
        AudioBuffer warm = make_speech_audio(1.0, seed);
        streaming_ttft_once(w, warm);
        full_ttft_once(w, warm);
    }

    std::vector<TtftRow> rows;
    for (double duration : durations_s) {
        AudioBuffer audio = make_speech_audio(duration, seed + static_cast<uint64_t>(duration * 1000));
        std::vector<double> streaming, full;
        for (int r = 0; r < repetitions; ++r) {
            streaming.push_back(streaming_ttft_once(w, audio));
            full.push_back(full_ttft_once(w, audio));
        }
        rows.push_back(TtftRow{duration, median(streaming), median(full)});
    }
    return rows;
}

std::string ttft_rows_csv(const std::vector<TtftRow>& rows) {
    std::string csv = "duration_s,streaming_ttft_ms,full_ttft_ms\n";
    char buf[96];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g\n", row.duration_s, row.streaming_ttft_ms, row.full_ttft_ms);
        csv += buf;
    }
    return csv;
}

// ─── Response latency bench ─────────────────────────────────────────────────

std::string BenchLatencyResult::to_json() const {
    nlohmann::json j;
    j["latency_ms"] = latency_ms;
    j["compute_load_pct"] = compute_load_pct;
    j["ttft_ms"] = ttft_ms;
    j["audio_s"] = audio_s;
    return j.dump();
}

BenchLatencyResult bench_latency(const WeightStore& w, const AudioBuffer& audio, int chunk_ms) {
    if (chunk_ms < 1) throw ConfigError("bench_latency: chunk_ms must be >= 1");
    SessionConfig cfg;
    cfg.enable_vad_segmentation = true;
    StreamingSession session(w, cfg);

    const int64_t chunk = static_cast<int64_t>(w.cfg.sample_rate_hz) * chunk_ms / 1000;
    for (int64_t off = 0; off < static_cast<int64_t>(audio.samples.size()); off += chunk) {
        const int64_t take = std::min<int64_t>(chunk, static_cast<int64_t>(audio.samples.size()) - off);
        session.feed_audio(audio.samples.data() + off, take);
        if (!session.completed_segments().empty()) break; // first segment is the measurement
    }

    const SegmentResult* seg = nullptr;
    SessionResult result;
    if (!session.completed_segments().empty()) {
        seg = &session.completed_segments().front();
    } else {
        result = session.end_of_speech();
        for (const auto& s : result.segments)
            if (!s.tokens.empty()) {
                seg = &s;
                break;
            }
    }
    if (!seg || seg->tokens.empty()) throw AudioError("bench_latency: no speech detected in the audio");

    BenchLatencyResult out;
    out.latency_ms = seg->report.response_latency_ms;
    out.compute_load_pct = seg->report.compute_load_pct;
    out.ttft_ms = seg->report.ttft_ms;
    out.audio_s = seg->report.audio_s;
    return out;
}

} // namespace msv2
