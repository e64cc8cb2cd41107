#include <doctest.h>

#include <cmath>
#include <sstream>

#include "msv2/costmodel.hpp"
#include "msv2/encoder.hpp"
#include "msv2/errors.hpp"
#include "msv2/ops.hpp"
#include "msv2/reference.hpp"
#include "testutil.hpp"

using namespace msv2;

TEST_SUITE_BEGIN("costmodel");

namespace {

CostModelParams paper_params(double tops) {
    CostModelParams p;
    p.param_count = 1e8;
    p.width = 768;
    p.layers = 12;
    p.window_frames = 20;
    p.throughput_tops = tops;
    return p;
}

// Independent root finder for the threshold crossing.
double bisect_crossing(const CostModelParams& p) {
    double lo = 1e-9, hi = 1e4;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (ttft_full_ms(p, mid) < p.threshold_ms ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

TEST_CASE("ops_full at one second matches the closed form") {
    CostModelParams p = paper_params(1.0);
    // 6 * 1e8 * 50 + 4 * 9216 * 2500 = 3.009216e10 ops -> 30.09216 ms at 1 TOPS.
    CHECK(ops_full(p, 1.0) == doctest::Approx(3.009216e10).epsilon(1e-12));
    CHECK(ttft_full_ms(p, 1.0) == doctest::Approx(30.09216).epsilon(1e-12));
}

TEST_CASE("ops vanish as audio length goes to zero") {
    CostModelParams p = paper_params(1.0);
    CHECK(ops_full(p, 1e-9) < 1e3);
    CHECK_THROWS_AS(ops_full(p, 0.0), ConfigError);
    CHECK_THROWS_AS(ops_full(p, -1.0), ConfigError);
}

TEST_CASE("quadratic term dominates: doubling long audio quadruples the cost") {
    CostModelParams p = paper_params(1.0);
    const double ratio = ops_full(p, 2e7) / ops_full(p, 1e7);
    CHECK(ratio == doctest::Approx(4.0).epsilon(1e-4));
}

TEST_CASE("sliding window TTFT is the plotted constant at 0.1 TOPS, w=20") {
    CostModelParams p = paper_params(0.1);
    const double ttft = ttft_sliding_ms(p);
    CHECK(ttft == doctest::Approx(120.147456).epsilon(1e-12));
    CHECK(std::fabs(ttft - 120.15) <= 0.01);
}

TEST_CASE("sliding TTFT does not depend on audio length by construction") {
    CostModelParams p = paper_params(0.1);
    const double constant = ttft_sliding_ms(p);
    for (double n : {0.5, 3.0, 60.0}) {
        (void)n;
        CHECK(ttft_sliding_ms(p) == constant);
    }
}

TEST_CASE("window covering the whole sequence collapses sliding to full") {
    CostModelParams p = paper_params(0.5);
    const double audio_s = 4.0;
    p.window_frames = p.feature_rate_hz * audio_s; // w = T
    CHECK(ops_sliding(p, audio_s) == doctest::Approx(ops_full(p, audio_s)).epsilon(1e-12));
    CHECK(ops_sliding(p, audio_s / 2) < ops_full(p, audio_s));
}

TEST_CASE("sliding never exceeds full for any window up to T") {
    CostModelParams p = paper_params(0.5);
    for (double w : {1.0, 5.0, 20.0, 100.0}) {
        p.window_frames = w;
        for (double n : {1.0, 2.0, 10.0}) {
            if (w <= p.feature_rate_hz * n) CHECK(ops_sliding(p, n) <= ops_full(p, n));
        }
    }
}

TEST_CASE("threshold crossing at 0.5 TOPS lands at about 4.1 s") {
    CostModelParams p = paper_params(0.5);
    const double crossing = threshold_crossing_s(p);
    CHECK(std::fabs(crossing - 4.1) <= 0.1);
    CHECK(crossing == doctest::Approx(4.114656484).epsilon(1e-8));
    // Root verification plus the independent bisection oracle.
    CHECK(ttft_full_ms(p, crossing) == doctest::Approx(p.threshold_ms).epsilon(1e-9));
    CHECK(crossing == doctest::Approx(bisect_crossing(p)).epsilon(1e-9));
}

TEST_CASE("threshold crossing edge cases") {
    CostModelParams p = paper_params(0.5);
    p.threshold_ms = 0;
    CHECK(threshold_crossing_s(p) == 0.0);

    CostModelParams faster = paper_params(1.0);
    CHECK(threshold_crossing_s(faster) > threshold_crossing_s(paper_params(0.5)));

    CostModelParams bad = paper_params(0.5);
    bad.width = -1;
    CHECK_THROWS_AS(threshold_crossing_s(bad), ConfigError);
}

TEST_CASE("fig1 CSV layout and values") {
    CostModelParams p = paper_params(0.1);
    const std::string csv = fig1_csv(p, {0.1, 0.5, 1.0}, 10.0, 1.0);
    std::istringstream lines(csv);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "N_s,ttft_0.1tops,ttft_0.5tops,ttft_1tops,ttft_sliding_0.1tops,threshold");

    double sliding_seen = -1;
    int rows = 0;
    while (std::getline(lines, line)) {
        std::istringstream cells(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(cells, cell, ',')) row.push_back(std::stod(cell));
        REQUIRE(row.size() == 6);
        const double n = row[0];
        if (n > 0) {
            CostModelParams q = p;
            q.throughput_tops = 0.1;
            CHECK(row[1] == doctest::Approx(ttft_full_ms(q, n)).epsilon(1e-9));
            q.throughput_tops = 0.5;
            CHECK(row[2] == doctest::Approx(ttft_full_ms(q, n)).epsilon(1e-9));
            q.throughput_tops = 1.0;
            CHECK(row[3] == doctest::Approx(ttft_full_ms(q, n)).epsilon(1e-9));
            if (n == 10.0) CHECK(row[1] == doctest::Approx(3092.16).epsilon(1e-9));
        }
        if (sliding_seen < 0) sliding_seen = row[4];
        CHECK(row[4] == sliding_seen); // constant column
        CHECK(row[5] == 250.0);
        ++rows;
    }
    CHECK(rows == 11);
}

TEST_CASE("measured attention counters track the analytic attention terms") {
    // Map the analytic model onto a real toy encoder: width 64 attention,
    // 2 layers, the standard 20-frame band (16 left + 4 right).
    ModelConfig cfg = testutil::small_config_with_schedule({{16, 4}, {16, 4}});
    WeightStore w = init_weights(cfg, 1);
    const double d = cfg.enc_attn_dim();
    const double layers = cfg.enc_layers;

    const int64_t t = 400;
    Tensor features = testutil::rand_features(t, 64, 2);

    ops::reset_counters();
    encode_full(features, w);
    const double banded_measured = static_cast<double>(ops::attn_mix_ops());
    const double banded_predicted = 4.0 * d * layers * static_cast<double>(t) * 20.0;
    CHECK(banded_measured / banded_predicted > 0.5);
    CHECK(banded_measured / banded_predicted < 2.0);

    ops::reset_counters();
    encode_full_attention(features, w);
    const double full_measured = static_cast<double>(ops::attn_mix_ops());
    const double full_predicted = 4.0 * d * layers * static_cast<double>(t) * static_cast<double>(t);
    CHECK(full_measured / full_predicted > 0.5);
    CHECK(full_measured / full_predicted < 2.0);
}

TEST_SUITE_END();
