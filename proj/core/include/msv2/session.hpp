#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "msv2/decoder.hpp"
#include "msv2/encoder.hpp"
#include "msv2/frontend.hpp"
#include "msv2/wav.hpp"
#include "msv2/weights.hpp"

namespace msv2 {

// ─── Voice activity detection ───────────────────────────────────────────────
//
// Deterministic hysteresis gate over per-20ms RMS energy: enter speech when
// the level reaches on_threshold, leave once it has stayed below
// off_threshold for hangover_ms.

struct VadParams {
    float on_threshold = 0.02f;
    float off_threshold = 0.01f;
    double hangover_ms = 300.0;

    void validate() const; // throws ConfigError (needs on >= off >= 0)
};

struct VadEvent {
    enum class Kind { speech_start, speech_end };
    Kind kind;
    int64_t frame; // 20 ms frames; speech_end fires at quiet_start + hangover
};

class Vad {
  public:
    explicit Vad(VadParams params, double frame_rate_hz = 50.0);

    std::optional<VadEvent> push(float rms);
    bool in_speech() const { return in_speech_; }
    int64_t frames_seen() const { return frame_; }
    void reset();

  private:
    VadParams params_;
    int64_t hangover_frames_;
    bool in_speech_ = false;
    int64_t frame_ = 0;
    int64_t quiet_start_ = 0;
    int64_t quiet_run_ = 0;
};

// Batch convenience over a whole energy series.
std::vector<VadEvent> vad_detect(const std::vector<float>& rms_series, VadParams params, double frame_rate_hz = 50.0);

// ─── Session types ──────────────────────────────────────────────────────────

struct CaptionEvent {
    enum class Kind { provisional, final_ };
    Kind kind;
    std::string text;
    std::vector<int> tokens;
    double audio_time_ms = 0; // stream position when emitted
    double wall_time_ms = 0;  // session-clock time when emitted
};

std::string caption_to_json(const CaptionEvent& event); // one ndjson line, no newline

struct LatencyReport {
    double ttft_ms = 0;             // segment start -> first emitted token (0 when no tokens)
    double response_latency_ms = 0; // end-of-speech -> final transcript ready
    double compute_load_pct = 0;    // processing_ms / audio duration * 100
    double processing_ms = 0;
    double audio_s = 0;

    std::string to_json() const;
};

struct SegmentResult {
    std::string text;
    std::vector<int> tokens;
    LatencyReport report;
};

struct SessionResult {
    std::string transcript; // segment texts joined with a space
    std::vector<int> tokens;
    std::vector<SegmentResult> segments;
    LatencyReport stream; // whole-stream accounting
    std::vector<CaptionEvent> final_events;
};

struct SessionConfig {
    int provisional_cadence_frames = 16;  // decode every 16 ingested feature frames (320 ms)
    int provisional_window_frames = 512;  // trailing adapter frames a provisional decode may see
    int provisional_max_tokens = 48;
    int final_max_tokens = 224;
    VadParams vad;
    bool enable_vad_segmentation = true; // close a segment when the VAD reports end of speech
    bool always_decode_on_close = false; // decode segments even if the VAD never saw speech
};

// Monotonic seconds. Injectable so tests control every timestamp.
using SessionClock = std::function<double()>;
SessionClock steady_session_clock();

// ─── Streaming session ──────────────────────────────────────────────────────
//
// Audio in, caption events out. The pipeline runs sample-synchronously:
// feature rows, VAD decisions, segment cuts, and decode cadences all key off
// absolute sample positions, so any chunking of the same audio produces the
// same events and the same transcript. A VAD speech_end (when segmentation
// is on) finalizes the segment right where it fires; the finalized prefix of
// the transcript never changes afterwards.
class StreamingSession {
  public:
    explicit StreamingSession(const WeightStore& w, SessionConfig cfg = {}, SessionClock clock = {});

    std::vector<CaptionEvent> feed_audio(const float* samples, int64_t n);
    std::vector<CaptionEvent> feed_audio(const AudioBuffer& chunk);

    // Flush the open segment (provisional states become final), decode, and
    // close the session. Throws SessionError when nothing was ever ingested.
    SessionResult end_of_speech();

    bool closed() const { return closed_; }
    int64_t frames_ingested() const;
    const std::vector<SegmentResult>& completed_segments() const { return segments_; }

  private:
    void open_segment();
    void ingest_feature_rows(const Tensor& rows);
    void process_vad_block(std::vector<CaptionEvent>& events);
    void maybe_provisional_decode(std::vector<CaptionEvent>& events);
    void close_segment(std::vector<CaptionEvent>& events);
    void record_first_token(const std::vector<int>& tokens);

    const WeightStore* w_;
    SessionConfig cfg_;
    SessionClock clock_;
    double feed_t0_ = 0; // start of the unattributed processing span

    FrontendStream frontend_;
    std::optional<EncoderStream> encoder_;
    CrossCache cross_;
    Vad vad_;

    // Per-segment state.
    int64_t adapted_rows_ = 0;
    int64_t segment_samples_ = 0;
    int64_t frames_since_decode_ = 0;
    bool speech_seen_ = false;
    bool ttft_recorded_ = false;
    double ttft_ms_ = 0;
    double segment_wall_start_ = 0;
    double segment_processing_s_ = 0;

    // Stream state.
    int64_t stream_samples_ = 0;
    int64_t block_fill_ = 0;
    double block_energy_ = 0;
    double stream_processing_s_ = 0;
    bool closed_ = false;
    std::vector<SegmentResult> segments_;
};

} // namespace msv2
