#include "msv2/session.hpp"

#include <chrono>
#include <cmath>

#include <json.hpp>

#include "msv2/adapter.hpp"
#include "msv2/detok.hpp"
#include "msv2/errors.hpp"

namespace msv2 {

using nlohmann::json;

// ─── VAD ────────────────────────────────────────────────────────────────────

void VadParams::validate() const {
    if (off_threshold < 0 || on_threshold < off_threshold)
        throw ConfigError("vad: need on_threshold >= off_threshold >= 0");
    if (hangover_ms < 0) throw ConfigError("vad: hangover must be non-negative");
}

Vad::Vad(VadParams params, double frame_rate_hz) : params_(params) {
    params_.validate();
    if (frame_rate_hz <= 0) throw ConfigError("vad: frame rate must be positive");
    hangover_frames_ = std::max<int64_t>(1, std::llround(params.hangover_ms * frame_rate_hz / 1000.0));
}

void Vad::reset() {
    in_speech_ = false;
    frame_ = 0;
    quiet_start_ = 0;
    quiet_run_ = 0;
}

std::optional<VadEvent> Vad::push(float rms) {
    std::optional<VadEvent> event;
    if (!in_speech_) {
        if (rms >= params_.on_threshold) {
            in_speech_ = true;
            quiet_run_ = 0;
            event = VadEvent{VadEvent::Kind::speech_start, frame_};
        }
    } else {
        if (rms < params_.off_threshold) {
            if (quiet_run_ == 0) quiet_start_ = frame_;
            ++quiet_run_;
            if (quiet_run_ >= hangover_frames_) {
                in_speech_ = false;
                quiet_run_ = 0;
                event = VadEvent{VadEvent::Kind::speech_end, quiet_start_ + hangover_frames_};
            }
        } else {
            quiet_run_ = 0;
        }
    }
    ++frame_;
    return event;
}

std::vector<VadEvent> vad_detect(const std::vector<float>& rms_series, VadParams params, double frame_rate_hz) {
    Vad vad(params, frame_rate_hz);
    std::vector<VadEvent> events;
    for (float rms : rms_series)
        if (auto e = vad.push(rms)) events.push_back(*e);
    return events;
}

// ─── JSON ───────────────────────────────────────────────────────────────────

std::string caption_to_json(const CaptionEvent& event) {
    json j;
    j["kind"] = event.kind == CaptionEvent::Kind::final_ ? "final" : "provisional";
    j["text"] = event.text;
    j["audio_time_ms"] = event.audio_time_ms;
    j["wall_time_ms"] = event.wall_time_ms;
    return j.dump();
}

std::string LatencyReport::to_json() const {
    json j;
    j["ttft_ms"] = ttft_ms;
    j["response_latency_ms"] = response_latency_ms;
    j["compute_load_pct"] = compute_load_pct;
    j["processing_ms"] = processing_ms;
    j["audio_s"] = audio_s;
    return j.dump();
}

SessionClock steady_session_clock() {
    return [] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
    };
}

// ─── Session ────────────────────────────────────────────────────────────────

StreamingSession::StreamingSession(const WeightStore& w, SessionConfig cfg, SessionClock clock)
    : w_(&w), cfg_(cfg), clock_(clock ? std::move(clock) : steady_session_clock()), frontend_(w),
      vad_(cfg.vad, w.cfg.feature_rate_hz) {
    if (cfg_.provisional_cadence_frames < 1) throw ConfigError("session: cadence must be >= 1 frame");
    if (cfg_.provisional_window_frames < 1) throw ConfigError("session: provisional window must be >= 1 frame");
    open_segment();
}

void StreamingSession::open_segment() {
    frontend_.reset();
    encoder_.emplace(*w_);
    cross_ = CrossCache{};
    adapted_rows_ = 0;
    segment_samples_ = 0;
    frames_since_decode_ = 0;
    speech_seen_ = false;
    ttft_recorded_ = false;
    ttft_ms_ = 0;
    segment_processing_s_ = 0;
    block_fill_ = 0;
    block_energy_ = 0;
    segment_wall_start_ = clock_();
}

int64_t StreamingSession::frames_ingested() const { return encoder_ ? encoder_->frames_in() : 0; }

void StreamingSession::record_first_token(const std::vector<int>& tokens) {
    if (ttft_recorded_ || tokens.empty()) return;
    ttft_recorded_ = true;
    ttft_ms_ = (clock_() - segment_wall_start_) * 1000.0;
}

void StreamingSession::ingest_feature_rows(const Tensor& rows) {
    if (rows.rows() == 0) return;
    auto pushed = encoder_->push(rows);
    frames_since_decode_ += rows.rows();
    if (pushed.finalized.rows() > 0) {
        Tensor ad = adapt(pushed.finalized, adapted_rows_, *w_);
        extend_cross(cross_, ad, *w_);
        adapted_rows_ += pushed.finalized.rows();
    }
}

void StreamingSession::maybe_provisional_decode(std::vector<CaptionEvent>& events) {
    if (frames_since_decode_ < cfg_.provisional_cadence_frames || !speech_seen_) return;
    frames_since_decode_ = 0;

    ProvisionalOutput prov = encoder_->provisional();
    const int64_t mark = cross_.frames;
    if (prov.rows.rows() > 0) {
        Tensor ad = adapt(prov.rows, prov.start, *w_);
        extend_cross(cross_, ad, *w_);
    }
    if (cross_.frames == 0) return;
    const int64_t from = std::max<int64_t>(0, cross_.frames - cfg_.provisional_window_frames);
    std::vector<int> tokens = decode_greedy(cross_, *w_, cfg_.provisional_max_tokens, from);
    truncate_cross(cross_, mark, *w_);

    record_first_token(tokens);
    if (!tokens.empty()) {
        CaptionEvent event;
        event.kind = CaptionEvent::Kind::provisional;
        event.tokens = tokens;
        event.text = detokenize_bytes(tokens);
        event.audio_time_ms = static_cast<double>(stream_samples_) * 1000.0 / w_->cfg.sample_rate_hz;
        event.wall_time_ms = (clock_() - segment_wall_start_) * 1000.0;
        events.push_back(std::move(event));
    }
}

void StreamingSession::close_segment(std::vector<CaptionEvent>& events) {
    // Attribute the in-progress feed work to the segment being closed.
    const double t_close = clock_();
    segment_processing_s_ += t_close - feed_t0_;
    stream_processing_s_ += t_close - feed_t0_;
    feed_t0_ = t_close;

    SegmentResult seg;
    Tensor tail = encoder_->flush();
    if (tail.rows() > 0) {
        Tensor ad = adapt(tail, adapted_rows_, *w_);
        extend_cross(cross_, ad, *w_);
        adapted_rows_ += tail.rows();
    }

    if ((speech_seen_ || cfg_.always_decode_on_close) && cross_.frames > 0) {
        seg.tokens = decode_greedy(cross_, *w_, cfg_.final_max_tokens, 0);
        seg.text = detokenize_bytes(seg.tokens);
        record_first_token(seg.tokens);
        if (!seg.tokens.empty()) {
            CaptionEvent event;
            event.kind = CaptionEvent::Kind::final_;
            event.tokens = seg.tokens;
            event.text = seg.text;
            event.audio_time_ms = static_cast<double>(stream_samples_) * 1000.0 / w_->cfg.sample_rate_hz;
            event.wall_time_ms = (clock_() - segment_wall_start_) * 1000.0;
            events.push_back(std::move(event));
        }
    }

    const double t_done = clock_();
    segment_processing_s_ += t_done - feed_t0_;
    stream_processing_s_ += t_done - feed_t0_;
    feed_t0_ = t_done;

    seg.report.ttft_ms = ttft_ms_;
    seg.report.response_latency_ms = (t_done - t_close) * 1000.0;
    seg.report.processing_ms = segment_processing_s_ * 1000.0;
    seg.report.audio_s = static_cast<double>(segment_samples_) / w_->cfg.sample_rate_hz;
    seg.report.compute_load_pct = seg.report.audio_s > 0 ? seg.report.processing_ms / (seg.report.audio_s * 1000.0) * 100.0 : 0.0;
    segments_.push_back(std::move(seg));

    open_segment();
}

void StreamingSession::process_vad_block(std::vector<CaptionEvent>& events) {
    const float rms = static_cast<float>(std::sqrt(block_energy_ / 320.0));
    block_energy_ = 0;
    if (auto event = vad_.push(rms)) {
        if (event->kind == VadEvent::Kind::speech_start) {
            speech_seen_ = true;
        } else if (cfg_.enable_vad_segmentation) {
            close_segment(events);
        }
    }
}

std::vector<CaptionEvent> StreamingSession::feed_audio(const float* samples, int64_t n) {
    if (closed_) throw SessionError("feed_audio: session is closed");
    feed_t0_ = clock_();
    std::vector<CaptionEvent> events;

    int64_t off = 0;
    while (off < n) {
        const int64_t take = std::min<int64_t>(320 - block_fill_, n - off);
        Tensor rows = frontend_.push(samples + off, take);
        ingest_feature_rows(rows);
        for (int64_t i = 0; i < take; ++i) {
            const double s = samples[off + i];
            block_energy_ += s * s;
        }
        block_fill_ += take;
        segment_samples_ += take;
        stream_samples_ += take;
        off += take;
        if (block_fill_ == 320) {
            block_fill_ = 0;
            process_vad_block(events);
        }
        maybe_provisional_decode(events);
    }

    const double t1 = clock_();
    segment_processing_s_ += t1 - feed_t0_;
    stream_processing_s_ += t1 - feed_t0_;
    feed_t0_ = t1;
    return events;
}

std::vector<CaptionEvent> StreamingSession::feed_audio(const AudioBuffer& chunk) {
    if (chunk.sample_rate_hz != w_->cfg.sample_rate_hz)
        throw AudioError("feed_audio: sample rate " + std::to_string(chunk.sample_rate_hz) + " Hz does not match model");
    return feed_audio(chunk.samples.data(), static_cast<int64_t>(chunk.samples.size()));
}

SessionResult StreamingSession::end_of_speech() {
    if (closed_) throw SessionError("end_of_speech: session is closed");
    if (frames_ingested() == 0 && segments_.empty()) throw SessionError("end_of_speech: empty session");
    feed_t0_ = clock_();

    SessionResult result;
    if (frames_ingested() > 0) close_segment(result.final_events);
    closed_ = true;

    result.segments = segments_;
    for (const auto& seg : segments_) {
        if (!seg.text.empty()) {
            if (!result.transcript.empty()) result.transcript += ' ';
            result.transcript += seg.text;
        }
        result.tokens.insert(result.tokens.end(), seg.tokens.begin(), seg.tokens.end());
    }
    result.stream.processing_ms = stream_processing_s_ * 1000.0;
    result.stream.audio_s = static_cast<double>(stream_samples_) / w_->cfg.sample_rate_hz;
    result.stream.compute_load_pct =
        result.stream.audio_s > 0 ? result.stream.processing_ms / (result.stream.audio_s * 1000.0) * 100.0 : 0.0;
    if (!segments_.empty()) {
        result.stream.ttft_ms = segments_.front().report.ttft_ms;
        result.stream.response_latency_ms = segments_.back().report.response_latency_ms;
    }
    return result;
}

} // namespace msv2
