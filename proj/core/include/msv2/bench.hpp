#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "msv2/session.hpp"
#include "msv2/wav.hpp"
#include "msv2/weights.hpp"

namespace msv2 {

// Reproducible speech-like audio: seeded white noise under a 2-8 Hz
// amplitude envelope. Loud enough that the default VAD holds through the
// envelope dips.
AudioBuffer make_speech_audio(double seconds, uint64_t seed, int sample_rate_hz = 16000);
void append_silence(AudioBuffer& audio, double seconds);

// ─── First-token latency ────────────────────────────────────────────────────
//
// streaming_ttft_ms: work remaining after the last chunk has arrived — flush
// the encoder's lookahead tail, extend the adapter/cross state, one decoder
// step. The incremental pipeline has already processed everything else
// during capture, so this is roughly constant in utterance length.
// full_ttft_ms: the offline baseline has all of its work left at that point
// (frontend, dense encode, adapter, first step), so it grows with length.

struct TtftRow {
    double duration_s = 0;
    double streaming_ttft_ms = 0;
    double full_ttft_ms = 0;
};

std::vector<TtftRow> bench_ttft(const WeightStore& w, const std::vector<double>& durations_s, uint64_t seed,
                                int repetitions);
std::string ttft_rows_csv(const std::vector<TtftRow>& rows); // header: duration_s,streaming_ttft_ms,full_ttft_ms

// ─── Response latency / compute load ────────────────────────────────────────

struct BenchLatencyResult {
    double latency_ms = 0;       // VAD end of speech -> final transcript ready
    double compute_load_pct = 0; // processing time as % of audio duration
    double ttft_ms = 0;
    double audio_s = 0;

    std::string to_json() const;
};

// Streams the audio through a live session (VAD segmentation on) and reports
// the first speech segment's numbers. Throws AudioError when the audio
// contains no VAD-detectable speech.
BenchLatencyResult bench_latency(const WeightStore& w, const AudioBuffer& audio, int chunk_ms = 250);

} // namespace msv2
