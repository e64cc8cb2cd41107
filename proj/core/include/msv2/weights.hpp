#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "msv2/config.hpp"
#include "msv2/tensor.hpp"

namespace msv2 {

struct TensorSpec {
    std::string name;
    std::vector<int64_t> shape;
};

// The full tensor table implied by a config, in canonical (file) order.
std::vector<TensorSpec> expected_tensors(const ModelConfig& cfg);

// Named dense float32 tensors for one model instance. Immutable by
// convention once built; safe to share across threads.
struct WeightStore {
    ModelConfig cfg;
    uint64_t seed = 0;
    std::map<std::string, Tensor> tensors;

    const Tensor& get(const std::string& name) const;
    bool has(const std::string& name) const { return tensors.count(name) != 0; }
};

bool bitwise_equal(const WeightStore& a, const WeightStore& b);

// Seeded random initialization: every tensor drawn N(0, 1/fan_in) from a
// generator keyed on (seed, tensor name), so the result is independent of
// construction order. Norm gains initialize to 1.
WeightStore init_weights(const ModelConfig& cfg, uint64_t seed);

// ─── Weight file I/O ────────────────────────────────────────────────────────
//
// Layout: "MSV2" magic, u32 format version, u32 manifest length, JSON
// manifest {config, seed, tensors:[{name, shape, offset}]}, then raw
// little-endian float32 data with each tensor 64-byte aligned. Offsets are
// absolute file offsets.

inline constexpr uint32_t kWeightFormatVersion = 1;

void save_weights(const WeightStore& store, const std::string& path);
WeightStore load_weights(const std::string& path);

} // namespace msv2
