// End-to-end stage benchmarks at the tiny preset: frontend rate, incremental
// encode rate, decode steps, and whole-session real-time factor.

#include <benchmark/benchmark.h>

#include "msv2/adapter.hpp"
#include "msv2/bench.hpp"
#include "msv2/decoder.hpp"
#include "msv2/encoder.hpp"
#include "msv2/frontend.hpp"
#include "msv2/session.hpp"
#include "msv2/weights.hpp"

using namespace msv2;

namespace {

const WeightStore& tiny() {
    static const WeightStore w = init_weights(preset_config(ModelSize::tiny), 0);
    return w;
}

} // namespace

static void BM_FrontendStream(benchmark::State& state) {
    const WeightStore& w = tiny();
    AudioBuffer audio = make_speech_audio(1.0, 1);
    for (auto _ : state) {
        FrontendStream frontend(w);
        Tensor rows = frontend.push(audio.samples);
        benchmark::DoNotOptimize(rows.data.data());
    }
    state.counters["audio_s/s"] = benchmark::Counter(static_cast<double>(state.iterations()), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_FrontendStream);

static void BM_EncoderStreamSecond(benchmark::State& state) {
    const WeightStore& w = tiny();
    AudioBuffer audio = make_speech_audio(1.0, 2);
    FrontendStream frontend(w);
    Tensor features = frontend.push(audio.samples);
    for (auto _ : state) {
        EncoderStream encoder(w);
        auto out = encoder.push(features);
        benchmark::DoNotOptimize(out.finalized.data.data());
    }
    state.counters["audio_s/s"] = benchmark::Counter(static_cast<double>(state.iterations()), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_EncoderStreamSecond);

static void BM_DecodeStep(benchmark::State& state) {
    const WeightStore& w = tiny();
    AudioBuffer audio = make_speech_audio(2.0, 3);
    FrontendStream frontend(w);
    Tensor features = frontend.push(audio.samples);
    Tensor enc = encode_full(features, w);
    CrossCache cross = prepare_cross(adapt(enc, 0, w), w);
    DecodeState decode = new_decode_state(w.cfg);
    for (auto _ : state) {
        StepResult step = decode_step(decode, cross, w);
        benchmark::DoNotOptimize(step.logits.data.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DecodeStep);

static void BM_SessionRealTimeFactor(benchmark::State& state) {
    const WeightStore& w = tiny();
    AudioBuffer audio = make_speech_audio(2.0, 4);
    const int64_t chunk = 4000; // 250 ms
    for (auto _ : state) {
        SessionConfig cfg;
        cfg.enable_vad_segmentation = false;
        cfg.provisional_max_tokens = 16;
        StreamingSession session(w, cfg);
        for (int64_t off = 0; off < static_cast<int64_t>(audio.samples.size()); off += chunk) {
            const int64_t take = std::min<int64_t>(chunk, static_cast<int64_t>(audio.samples.size()) - off);
            session.feed_audio(audio.samples.data() + off, take);
        }
        benchmark::DoNotOptimize(session.frames_ingested());
    }
    state.counters["audio_s/s"] =
        benchmark::Counter(static_cast<double>(state.iterations()) * audio.seconds(), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SessionRealTimeFactor);

BENCHMARK_MAIN();
