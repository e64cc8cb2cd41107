#include "msv2/costmodel.hpp"

#include <cmath>
#include <cstdio>

#include "msv2/errors.hpp"

namespace msv2 {

void CostModelParams::validate() const {
    if (param_count <= 0 || width <= 0 || layers <= 0 || window_frames <= 0 || feature_rate_hz <= 0 ||
        throughput_tops <= 0)
        throw ConfigError("cost model: all parameters must be positive");
    if (threshold_ms < 0) throw ConfigError("cost model: threshold must be non-negative");
}

static double ops_per_second(const CostModelParams& p) { return p.throughput_tops * 1e12; }

double ops_full(const CostModelParams& p, double audio_s) {
    p.validate();
    if (audio_s <= 0) throw ConfigError("cost model: audio length must be positive");
    const double t = p.feature_rate_hz * audio_s;
    return 6.0 * p.param_count * t + 4.0 * p.width * p.layers * t * t;
}

double ops_sliding(const CostModelParams& p, double audio_s) {
    p.validate();
    if (audio_s <= 0) throw ConfigError("cost model: audio length must be positive");
    const double t = p.feature_rate_hz * audio_s;
    return 6.0 * p.param_count * t + 4.0 * p.width * p.layers * t * p.window_frames;
}

double ttft_full_ms(const CostModelParams& p, double audio_s) { return ops_full(p, audio_s) / ops_per_second(p) * 1e3; }

double ttft_sliding_ms(const CostModelParams& p) {
    p.validate();
    const double w = p.window_frames;
    return (6.0 * p.param_count * w + 4.0 * p.width * p.layers * w * w) / ops_per_second(p) * 1e3;
}

double threshold_crossing_s(const CostModelParams& p) {
    p.validate();
    if (p.threshold_ms == 0) return 0.0;
    const double r = p.feature_rate_hz;
    const double a = 4.0 * p.width * p.layers * r * r / ops_per_second(p); // s^-1 per s^2 of audio
    const double b = 6.0 * p.param_count * r / ops_per_second(p);
    const double c = p.threshold_ms / 1e3;
    if (a <= 0) {
        if (b <= 0) throw ConfigError("cost model: no positive threshold crossing");
        return c / b;
    }
    return (-b + std::sqrt(b * b + 4.0 * a * c)) / (2.0 * a);
}

std::string fig1_csv(const CostModelParams& base, const std::vector<double>& tops_list, double n_max_s,
                     double n_step_s) {
    base.validate();
    if (tops_list.empty()) throw ConfigError("cost model: need at least one throughput");
    if (n_max_s <= 0 || n_step_s <= 0) throw ConfigError("cost model: grid must be positive");

    auto fmt_tops = [](double tops) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", tops);
        return std::string(buf);
    };

    std::string csv = "N_s";
    for (double tops : tops_list) csv += ",ttft_" + fmt_tops(tops) + "tops";
    csv += ",ttft_sliding_" + fmt_tops(tops_list.front()) + "tops,threshold\n";

    char buf[64];
    const int steps = static_cast<int>(std::llround(n_max_s / n_step_s));
    for (int i = 0; i <= steps; ++i) {
        const double n = i * n_step_s;
        std::snprintf(buf, sizeof(buf), "%.10g", n);
        csv += buf;
        for (double tops : tops_list) {
            CostModelParams p = base;
            p.throughput_tops = tops;
            std::snprintf(buf, sizeof(buf), ",%.10g", n > 0 ? ttft_full_ms(p, n) : 0.0);
            csv += buf;
        }
        CostModelParams p = base;
        p.throughput_tops = tops_list.front();
        std::snprintf(buf, sizeof(buf), ",%.10g,%.10g\n", ttft_sliding_ms(p), base.threshold_ms);
        csv += buf;
    }
    return csv;
}

} // namespace msv2
