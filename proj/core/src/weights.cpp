#include "msv2/weights.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <json.hpp>

#include "msv2/errors.hpp"

static_assert(std::endian::native == std::endian::little, "weight file I/O assumes a little-endian host");

namespace msv2 {

using nlohmann::json;

std::vector<TensorSpec> expected_tensors(const ModelConfig& cfg) {
    cfg.validate();
    const int64_t e = cfg.enc_dim;
    const int64_t d = cfg.dec_dim;
    const int64_t a = cfg.enc_attn_dim();
    const int64_t k = cfg.frontend_kernel;

    std::vector<TensorSpec> specs;
    specs.push_back({"pre.embed", {e, 80}});
    specs.push_back({"pre.conv1", {k, e, e}});
    specs.push_back({"pre.conv2", {k, e, e}});
    for (int i = 0; i < cfg.enc_layers; ++i) {
        const std::string p = "enc.layer" + std::to_string(i) + ".";
        specs.push_back({p + "norm1.gain", {e}});
        specs.push_back({p + "attn.q", {a, e}});
        specs.push_back({p + "attn.k", {a, e}});
        specs.push_back({p + "attn.v", {a, e}});
        specs.push_back({p + "attn.o", {e, a}});
        specs.push_back({p + "norm2.gain", {e}});
        specs.push_back({p + "ffn.w1", {cfg.enc_ffn_dim(), e}});
        specs.push_back({p + "ffn.w2", {e, cfg.enc_ffn_dim()}});
    }
    specs.push_back({"enc.norm.gain", {e}});
    specs.push_back({"adapter.pos", {cfg.max_positions, e}});
    if (e != d) specs.push_back({"adapter.proj", {d, e}});
    specs.push_back({"dec.embed", {cfg.vocab_size, d}});
    for (int i = 0; i < cfg.dec_layers; ++i) {
        const std::string p = "dec.layer" + std::to_string(i) + ".";
        specs.push_back({p + "norm1.gain", {d}});
        specs.push_back({p + "self.q", {d, d}});
        specs.push_back({p + "self.k", {d, d}});
        specs.push_back({p + "self.v", {d, d}});
        specs.push_back({p + "self.o", {d, d}});
        specs.push_back({p + "norm2.gain", {d}});
        specs.push_back({p + "cross.q", {d, d}});
        specs.push_back({p + "cross.k", {d, d}});
        specs.push_back({p + "cross.v", {d, d}});
        specs.push_back({p + "cross.o", {d, d}});
        specs.push_back({p + "norm3.gain", {d}});
        specs.push_back({p + "ffn.gate", {cfg.dec_ffn_dim(), d}});
        specs.push_back({p + "ffn.up", {cfg.dec_ffn_dim(), d}});
        specs.push_back({p + "ffn.down", {d, cfg.dec_ffn_dim()}});
    }
    specs.push_back({"dec.norm.gain", {d}});
    return specs;
}

const Tensor& WeightStore::get(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw ConfigError("weight store has no tensor named '" + name + "'");
    return it->second;
}

bool bitwise_equal(const WeightStore& a, const WeightStore& b) {
    if (a.seed != b.seed || a.tensors.size() != b.tensors.size()) return false;
    for (const auto& [name, t] : a.tensors) {
        auto it = b.tensors.find(name);
        if (it == b.tensors.end() || it->second.shape != t.shape) return false;
        if (std::memcmp(it->second.data.data(), t.data.data(), t.data.size() * sizeof(float)) != 0) return false;
    }
    return true;
}

// ─── Initialization ─────────────────────────────────────────────────────────

static uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

static bool is_gain(const std::string& name) {
    return name.size() >= 5 && name.compare(name.size() - 5, 5, ".gain") == 0;
}

static int64_t fan_in_of(const TensorSpec& spec) {
    // Matrices are [out, in]; convs are [k, out, in]; embedding-like tables
    // ([rows, width]) scale by their width.
    if (spec.shape.size() == 3) return spec.shape[0] * spec.shape[2];
    return spec.shape.back();
}

WeightStore init_weights(const ModelConfig& cfg, uint64_t seed) {
    WeightStore store;
    store.cfg = cfg;
    store.seed = seed;
    for (const auto& spec : expected_tensors(cfg)) {
        Tensor t(spec.shape);
        if (is_gain(spec.name)) {
            std::fill(t.data.begin(), t.data.end(), 1.0f);
        } else {
            const float scale = 1.0f / std::sqrt(static_cast<float>(fan_in_of(spec)));
            std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ull ^ fnv1a64(spec.name));
            std::normal_distribution<float> dist(0.0f, scale);
            for (float& v : t.data) v = dist(rng);
        }
        store.tensors.emplace(spec.name, std::move(t));
    }
    return store;
}

// ─── File I/O ───────────────────────────────────────────────────────────────

static constexpr char kMagic[4] = {'M', 'S', 'V', '2'};
static constexpr uint64_t kAlign = 64;

static uint64_t align_up(uint64_t v) { return (v + kAlign - 1) / kAlign * kAlign; }

void save_weights(const WeightStore& store, const std::string& path) {
    const auto specs = expected_tensors(store.cfg);

    // Lay tensors out in canonical order; offsets are known once we know the
    // manifest length, so build the manifest with placeholder offsets first.
    json manifest;
    manifest["config"] = json::parse(config_to_json(store.cfg));
    manifest["seed"] = store.seed;
    manifest["tensors"] = json::array();
    for (const auto& spec : specs) {
        json entry;
        entry["name"] = spec.name;
        entry["shape"] = spec.shape;
        entry["offset"] = 0;
        manifest["tensors"].push_back(entry);
    }

    // Offsets depend on the manifest text length, which depends on the
    // offset digits; pad the manifest with trailing spaces to a fixed point.
    std::string text = manifest.dump();
    for (int iter = 0; iter < 8; ++iter) {
        uint64_t pos = 12 + text.size();
        size_t idx = 0;
        for (const auto& spec : specs) {
            pos = align_up(pos);
            manifest["tensors"][idx]["offset"] = pos;
            pos += Tensor::numel_of(spec.shape) * sizeof(float);
            ++idx;
        }
        std::string next = manifest.dump();
        if (next.size() == text.size()) {
            text = next;
            break;
        }
        text = next;
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw WeightFormatError("cannot open weight file for writing: " + path);
    out.write(kMagic, 4);
    uint32_t version = kWeightFormatVersion;
    uint32_t mlen = static_cast<uint32_t>(text.size());
    out.write(reinterpret_cast<const char*>(&version), 4);
    out.write(reinterpret_cast<const char*>(&mlen), 4);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));

    uint64_t pos = 12 + text.size();
    for (const auto& spec : specs) {
        const uint64_t target = align_up(pos);
        static const char zeros[kAlign] = {};
        out.write(zeros, static_cast<std::streamsize>(target - pos));
        const Tensor& t = store.get(spec.name);
        if (t.shape != spec.shape)
            throw WeightManifestError("tensor '" + spec.name + "' has shape " + t.shape_str() + " but config implies another");
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(float)));
        pos = target + t.data.size() * sizeof(float);
    }
    if (!out) throw WeightFormatError("write failed: " + path);
}

WeightStore load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw WeightFormatError("cannot open weight file: " + path);
    in.seekg(0, std::ios::end);
    const uint64_t file_size = static_cast<uint64_t>(in.tellg());
    in.seekg(0);

    char magic[4];
    uint32_t version = 0, mlen = 0;
    if (file_size < 12) throw WeightTruncationError("weight file shorter than its header");
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&version), 4);
    in.read(reinterpret_cast<char*>(&mlen), 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw WeightFormatError("bad magic bytes (not an MSV2 weight file)");
    if (version != kWeightFormatVersion)
        throw WeightFormatError("unsupported weight format version " + std::to_string(version));
    if (12 + static_cast<uint64_t>(mlen) > file_size) throw WeightTruncationError("manifest extends past end of file");

    std::string text(mlen, '\0');
    in.read(text.data(), mlen);

    json manifest;
    try {
        manifest = json::parse(text);
    } catch (const json::exception& e) {
        throw WeightFormatError(std::string("manifest is not valid JSON: ") + e.what());
    }

    WeightStore store;
    try {
        store.cfg = config_from_json(manifest.at("config").dump());
        store.seed = manifest.value("seed", 0ull);
    } catch (const json::exception& e) {
        throw WeightFormatError(std::string("manifest missing config: ") + e.what());
    } catch (const ConfigError& e) {
        throw WeightFormatError(std::string("manifest config invalid: ") + e.what());
    }

    const auto specs = expected_tensors(store.cfg);
    const auto& entries = manifest.at("tensors");
    if (entries.size() != specs.size())
        throw WeightManifestError("manifest lists " + std::to_string(entries.size()) + " tensors but config requires " +
                                  std::to_string(specs.size()));

    std::map<std::string, std::pair<std::vector<int64_t>, uint64_t>> listed;
    for (const auto& entry : entries) {
        try {
            listed[entry.at("name").get<std::string>()] = {entry.at("shape").get<std::vector<int64_t>>(),
                                                           entry.at("offset").get<uint64_t>()};
        } catch (const json::exception& e) {
            throw WeightFormatError(std::string("malformed tensor entry: ") + e.what());
        }
    }

    for (const auto& spec : specs) {
        auto it = listed.find(spec.name);
        if (it == listed.end()) throw WeightManifestError("manifest is missing required tensor '" + spec.name + "'");
        const auto& [shape, offset] = it->second;
        if (shape != spec.shape) {
            Tensor probe(spec.shape);
            throw WeightManifestError("tensor '" + spec.name + "' shape mismatch: manifest vs config " + probe.shape_str());
        }
        if (offset % kAlign != 0) throw WeightFormatError("tensor '" + spec.name + "' is not 64-byte aligned");
        const uint64_t bytes = static_cast<uint64_t>(Tensor::numel_of(shape)) * sizeof(float);
        if (offset + bytes > file_size)
            throw WeightTruncationError("tensor '" + spec.name + "' data extends past end of file");
        Tensor t(shape);
        in.seekg(static_cast<std::streamoff>(offset));
        in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(bytes));
        if (!in) throw WeightTruncationError("read failed inside tensor '" + spec.name + "'");
        store.tensors.emplace(spec.name, std::move(t));
    }
    return store;
}

} // namespace msv2
