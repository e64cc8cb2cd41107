// msv2 command-line front end: transcription, live-style streaming from a
// file, first-token and response-latency benchmarks, parameter counting, and
// the analytic latency model.
//
// Exit codes: 0 success, 2 bad arguments, 3 bad audio, 4 bad weights.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "msv2/bench.hpp"
#include "msv2/config.hpp"
#include "msv2/costmodel.hpp"
#include "msv2/detok.hpp"
#include "msv2/errors.hpp"
#include "msv2/reference.hpp"
#include "msv2/runtime.hpp"
#include "msv2/session.hpp"
#include "msv2/wav.hpp"
#include "msv2/weights.hpp"

using nlohmann::json;

namespace {

struct WeightArgs {
    std::string weights_path;
    std::string size = "tiny";
    uint64_t random_seed = 0;
};

void add_weight_flags(CLI::App* cmd, WeightArgs& args) {
    cmd->add_option("--weights", args.weights_path, "MSV2 weight file (default: random weights)");
    cmd->add_option("--size", args.size, "preset when using random weights: tiny, small, medium");
    cmd->add_option("--random-seed", args.random_seed, "seed for random weights");
}

msv2::WeightStore resolve_weights(const WeightArgs& args) {
    if (!args.weights_path.empty()) return msv2::load_weights(args.weights_path);
    msv2::ModelConfig cfg = msv2::preset_config(args.size); // throws ConfigError on a bad name
    return msv2::init_weights(cfg, args.random_seed);
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw msv2::Error("cannot open output file: " + out_path);
    out << text;
}

json report_json(const msv2::LatencyReport& report) {
    return json::parse(report.to_json());
}

int run_transcribe(const WeightArgs& wargs, const std::string& wav_path, const std::string& mode, int chunk_ms,
                   int max_tokens, const std::string& captions_path, const std::string& out_path) {
    msv2::WeightStore w = resolve_weights(wargs);
    msv2::AudioBuffer audio = msv2::read_wav(wav_path);

    json out;
    out["mode"] = mode;
    out["audio_s"] = audio.seconds();

    if (mode == "full") {
        msv2::FullPipelineResult full = msv2::pipeline_full(audio, w, max_tokens);
        out["transcript"] = full.text;
        out["tokens"] = full.tokens;
        msv2::LatencyReport report;
        report.ttft_ms = full.ttft_ms;
        report.response_latency_ms = full.total_ms;
        report.processing_ms = full.total_ms;
        report.audio_s = audio.seconds();
        report.compute_load_pct = report.audio_s > 0 ? full.total_ms / (report.audio_s * 1000.0) * 100.0 : 0.0;
        out["report"] = report_json(report);
    } else {
        msv2::SessionConfig scfg;
        scfg.enable_vad_segmentation = false; // one utterance per file
        scfg.always_decode_on_close = true;
        scfg.final_max_tokens = max_tokens;
        scfg.provisional_max_tokens = std::min(max_tokens, scfg.provisional_max_tokens);
        msv2::StreamingSession session(w, scfg);

        std::ofstream captions;
        if (!captions_path.empty()) {
            captions.open(captions_path, std::ios::trunc);
            if (!captions) throw msv2::Error("cannot open captions file: " + captions_path);
        }
        auto emit = [&](const std::vector<msv2::CaptionEvent>& events) {
            if (!captions.is_open()) return;
            for (const auto& e : events) captions << msv2::caption_to_json(e) << '\n';
        };

        const int64_t chunk = static_cast<int64_t>(w.cfg.sample_rate_hz) * chunk_ms / 1000;
        for (int64_t off = 0; off < static_cast<int64_t>(audio.samples.size()); off += chunk) {
            const int64_t take = std::min<int64_t>(chunk, static_cast<int64_t>(audio.samples.size()) - off);
            emit(session.feed_audio(audio.samples.data() + off, take));
        }
        msv2::SessionResult result = session.end_of_speech();
        emit(result.final_events);

        out["transcript"] = result.transcript;
        out["tokens"] = result.tokens;
        out["report"] = report_json(result.segments.empty() ? result.stream : result.segments.back().report);
        out["stream_report"] = report_json(result.stream);
    }

    write_output(out.dump(2), out_path);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"msv2 - streaming speech recognition engine with a sliding-window encoder"};
    app.require_subcommand(1);
    msv2::max_threads(); // honor MSV2_THREADS early

    // transcribe
    auto* transcribe = app.add_subcommand("transcribe", "Transcribe a 16 kHz mono PCM16 WAV file");
    WeightArgs tr_weights;
    std::string tr_wav, tr_mode = "streaming", tr_captions, tr_out;
    int tr_chunk_ms = 250, tr_max_tokens = 224;
    transcribe->add_option("wav", tr_wav, "input WAV path")->required();
    add_weight_flags(transcribe, tr_weights);
    transcribe->add_option("--mode", tr_mode, "streaming (incremental) or full (offline reference)")
        ->check(CLI::IsMember({"streaming", "full"}));
    transcribe->add_option("--chunk-ms", tr_chunk_ms, "feed size for streaming mode")->check(CLI::PositiveNumber);
    transcribe->add_option("--max-tokens", tr_max_tokens, "decoder token budget")->check(CLI::PositiveNumber);
    transcribe->add_option("--captions", tr_captions, "write caption events (ndjson) to this file");
    transcribe->add_option("--out", tr_out, "write the JSON result here instead of stdout");

    // bench-ttft
    auto* bench_ttft_cmd = app.add_subcommand("bench-ttft", "First-token latency: streaming vs offline encoder");
    WeightArgs bt_weights;
    std::vector<double> bt_durations = {1, 2, 5, 10};
    uint64_t bt_seed = 0;
    int bt_reps = 3;
    std::string bt_out;
    add_weight_flags(bench_ttft_cmd, bt_weights);
    bench_ttft_cmd->add_option("--durations", bt_durations, "audio lengths in seconds")->delimiter(',');
    bench_ttft_cmd->add_option("--seed", bt_seed, "audio synthesis seed");
    bench_ttft_cmd->add_option("--repetitions", bt_reps, "repetitions per duration (median reported)")
        ->check(CLI::PositiveNumber);
    bench_ttft_cmd->add_option("--out", bt_out, "write CSV here instead of stdout");

    // bench-latency
    auto* bench_lat = app.add_subcommand("bench-latency", "Response latency and compute load on a live stream");
    WeightArgs bl_weights;
    std::string bl_wav, bl_out;
    double bl_synthetic = 0;
    uint64_t bl_seed = 0;
    int bl_chunk_ms = 250;
    add_weight_flags(bench_lat, bl_weights);
    bench_lat->add_option("--wav", bl_wav, "input WAV (speech followed by silence)");
    bench_lat->add_option("--synthetic", bl_synthetic, "generate this many seconds of speech-like audio instead");
    bench_lat->add_option("--seed", bl_seed, "synthesis seed");
    bench_lat->add_option("--chunk-ms", bl_chunk_ms, "feed size")->check(CLI::PositiveNumber);
    bench_lat->add_option("--out", bl_out, "write JSON here instead of stdout");

    // param-count
    auto* params_cmd = app.add_subcommand("param-count", "Per-block parameter counts for a config");
    std::string pc_size, pc_config, pc_out;
    params_cmd->add_option("--size", pc_size, "preset name: tiny, small, medium");
    params_cmd->add_option("--config", pc_config, "standalone config JSON file");
    params_cmd->add_option("--out", pc_out, "write JSON here instead of stdout");

    // cost-model
    auto* cost_cmd = app.add_subcommand("cost-model", "Analytic TTFT curves as CSV");
    msv2::CostModelParams cm;
    std::vector<double> cm_tops = {0.1, 0.5, 1.0};
    double cm_nmax = 10.0, cm_nstep = 0.1;
    std::string cm_out;
    cost_cmd->add_option("--p", cm.param_count, "encoder parameter count");
    cost_cmd->add_option("--d", cm.width, "model width");
    cost_cmd->add_option("--l", cm.layers, "layer count");
    cost_cmd->add_option("--w", cm.window_frames, "attention window, frames");
    cost_cmd->add_option("--feature-rate", cm.feature_rate_hz, "feature frames per second");
    cost_cmd->add_option("--tops", cm_tops, "throughput budgets (TOPS)")->delimiter(',');
    cost_cmd->add_option("--threshold", cm.threshold_ms, "delay limit in ms");
    cost_cmd->add_option("--n-max", cm_nmax, "grid end, seconds")->check(CLI::PositiveNumber);
    cost_cmd->add_option("--n-step", cm_nstep, "grid step, seconds")->check(CLI::PositiveNumber);
    cost_cmd->add_option("--out", cm_out, "write CSV here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*transcribe) return run_transcribe(tr_weights, tr_wav, tr_mode, tr_chunk_ms, tr_max_tokens, tr_captions, tr_out);

        if (*bench_ttft_cmd) {
            msv2::WeightStore w = resolve_weights(bt_weights);
            write_output(msv2::ttft_rows_csv(msv2::bench_ttft(w, bt_durations, bt_seed, bt_reps)), bt_out);
            return 0;
        }

        if (*bench_lat) {
            if (bl_wav.empty() && bl_synthetic <= 0)
                throw msv2::ConfigError("bench-latency: provide --wav or --synthetic SECONDS");
            msv2::WeightStore w = resolve_weights(bl_weights);
            msv2::AudioBuffer audio;
            if (!bl_wav.empty()) {
                audio = msv2::read_wav(bl_wav);
            } else {
                audio = msv2::make_speech_audio(bl_synthetic, bl_seed);
                msv2::append_silence(audio, 0.8); // let the VAD close the segment
            }
            write_output(msv2::bench_latency(w, audio, bl_chunk_ms).to_json(), bl_out);
            return 0;
        }

        if (*params_cmd) {
            if (pc_size.empty() == pc_config.empty())
                throw msv2::ConfigError("param-count: provide exactly one of --size or --config");
            msv2::ModelConfig cfg = pc_size.empty() ? msv2::load_config_file(pc_config) : msv2::preset_config(pc_size);
            msv2::ParamBreakdown p = msv2::count_params(cfg);
            json out;
            if (!pc_size.empty()) out["size"] = pc_size;
            out["params"] = {{"pre", p.pre}, {"enc", p.enc}, {"adap", p.adap}, {"dec", p.dec}, {"total", p.total}};
            out["params_m"] = {{"pre", p.pre / 1e6},   {"enc", p.enc / 1e6}, {"adap", p.adap / 1e6},
                               {"dec", p.dec / 1e6},   {"total", p.total / 1e6}};
            out["config"] = json::parse(msv2::config_to_json(cfg));
            write_output(out.dump(2), pc_out);
            return 0;
        }

        if (*cost_cmd) {
            write_output(msv2::fig1_csv(cm, cm_tops, cm_nmax, cm_nstep), cm_out);
            return 0;
        }
    } catch (const msv2::AudioError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const msv2::WeightFormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const msv2::WeightManifestError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const msv2::WeightTruncationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const msv2::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
