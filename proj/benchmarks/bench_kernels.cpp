// Microbenchmarks for the numeric kernels. Counters report MAC throughput so
// regressions in the dot kernel or attention row loop show up directly.

#include <benchmark/benchmark.h>

#include <random>

#include "msv2/ops.hpp"

using namespace msv2;

namespace {

Tensor rand_tensor(std::vector<int64_t> shape, uint64_t seed) {
    Tensor t(std::move(shape));
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0f, 1.0f);
    for (float& v : t.data) v = dist(rng);
    return t;
}

} // namespace

static void BM_Matvec(benchmark::State& state) {
    const int64_t dim = state.range(0);
    Tensor w = rand_tensor({dim, dim}, 1);
    std::vector<float> x(static_cast<size_t>(dim), 0.5f), y(static_cast<size_t>(dim));
    for (auto _ : state) {
        ops::matvec(y.data(), w.data.data(), x.data(), dim, dim);
        benchmark::DoNotOptimize(y.data());
    }
    state.counters["MAC/s"] =
        benchmark::Counter(static_cast<double>(state.iterations()) * static_cast<double>(dim * dim),
                           benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Matvec)->Arg(320)->Arg(640)->Arg(1280);

static void BM_BandedAttention(benchmark::State& state) {
    const int64_t t = state.range(0);
    Tensor q = rand_tensor({t, 320}, 2), k = rand_tensor({t, 320}, 3), v = rand_tensor({t, 320}, 4);
    for (auto _ : state) {
        Tensor out = ops::banded_attention(q, k, v, 5, {16, 4});
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * t);
}
BENCHMARK(BM_BandedAttention)->Arg(64)->Arg(256)->Arg(1024);

static void BM_DenseAttention(benchmark::State& state) {
    const int64_t t = state.range(0);
    Tensor q = rand_tensor({t, 320}, 5), k = rand_tensor({t, 320}, 6), v = rand_tensor({t, 320}, 7);
    for (auto _ : state) {
        Tensor out = ops::dense_attention(q, k, v, 5);
        benchmark::DoNotOptimize(out.data.data());
    }
    state.SetItemsProcessed(state.iterations() * t);
}
BENCHMARK(BM_DenseAttention)->Arg(64)->Arg(256);

static void BM_CausalConv(benchmark::State& state) {
    Tensor x = rand_tensor({state.range(0), 320}, 8);
    Tensor kernel = rand_tensor({10, 320, 320}, 9);
    for (auto _ : state) {
        Tensor y = ops::causal_conv1d(x, kernel, 2);
        benchmark::DoNotOptimize(y.data.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CausalConv)->Arg(200)->Arg(1000);

static void BM_LayerNormRow(benchmark::State& state) {
    Tensor x = rand_tensor({1, 768}, 10);
    std::vector<float> gain(768, 1.0f), out(768);
    for (auto _ : state) {
        ops::layer_norm_row(out.data(), x.data.data(), gain.data(), 768, 1e-5f);
        benchmark::DoNotOptimize(out.data());
    }
}
BENCHMARK(BM_LayerNormRow);

static void BM_RopeRotate(benchmark::State& state) {
    Tensor x = rand_tensor({1, 64}, 11);
    std::vector<float> buf(x.data.begin(), x.data.end());
    int64_t pos = 0;
    for (auto _ : state) {
        ops::rope_rotate_inplace(buf.data(), 64, pos++, 10000.0f);
        benchmark::DoNotOptimize(buf.data());
    }
}
BENCHMARK(BM_RopeRotate);

BENCHMARK_MAIN();
