#pragma once

#include <string>
#include <vector>

namespace msv2 {

// Analytic first-token latency model. Encoder work for N seconds of audio at
// T = feature_rate * N frames costs 6*P*T + 4*d*L*T^2 ops with full
// attention; with a w-frame sliding window the mixing term drops to
// 4*d*L*T*w. For the windowed encoder only the final window's work remains
// once capture ends, so its time-to-first-token is the constant
// (6*P*w + 4*d*L*w^2) / throughput.
struct CostModelParams {
    double param_count = 1e8;    // P, encoder parameters
    double width = 768;          // d
    double layers = 12;          // L
    double window_frames = 20;   // w (lookback + lookahead)
    double feature_rate_hz = 50; // frames per second of audio
    double throughput_tops = 1;  // peak ops/s in units of 10^12
    double threshold_ms = 250;   // interactive voice delay limit

    void validate() const; // throws ConfigError
};

double ops_full(const CostModelParams& p, double audio_s);
double ops_sliding(const CostModelParams& p, double audio_s);

double ttft_full_ms(const CostModelParams& p, double audio_s);
double ttft_sliding_ms(const CostModelParams& p);

// Audio length (s) at which the full-attention TTFT reaches threshold_ms.
// Closed-form positive root; throws ConfigError when none exists.
double threshold_crossing_s(const CostModelParams& p);

// CSV over an audio-length grid: one ttft column per throughput in
// tops_list, one sliding-window column at tops_list.front(), and the
// threshold. Columns: N_s,ttft_<x>tops,...,ttft_sliding_<x0>tops,threshold.
std::string fig1_csv(const CostModelParams& base, const std::vector<double>& tops_list, double n_max_s,
                     double n_step_s);

} // namespace msv2
