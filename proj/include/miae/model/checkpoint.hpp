#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "miae/core/errors.hpp"
#include "miae/core/tensor.hpp"
#include "miae/model/network.hpp"
#include "miae/model/params.hpp"

// Checkpoint container: 8-byte magic, little-endian u64 header length, JSON
// header (format version, model config, step, tensor index), then the raw
// float64 payload in index order. Bytes are exact, so a reloaded model
// reproduces its source bit for bit.
namespace miae::model {

inline constexpr char kCheckpointMagic[9] = "MIAECP01";

struct CheckpointData {
    ModelConfig cfg;
    std::uint64_t step = 0;
    std::map<std::string, Tensor> tensors;
};

inline void save_checkpoint(const std::string& path, const ModelConfig& cfg, std::uint64_t step,
                            const std::map<std::string, Tensor>& tensors) {
    nlohmann::json index = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : tensors) {
        index.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
        offset += t.size() * sizeof(double);
    }
    const nlohmann::json header{
        {"format", 1}, {"config", to_json(cfg)}, {"step", step}, {"tensors", index}};
    const std::string head = header.dump();

    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open checkpoint for writing: " + path);
    f.write(kCheckpointMagic, 8);
    const std::uint64_t head_len = head.size();
    f.write(reinterpret_cast<const char*>(&head_len), 8);
    f.write(head.data(), static_cast<std::streamsize>(head.size()));
    for (const auto& [name, t] : tensors)
        f.write(reinterpret_cast<const char*>(t.data()),
                static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!f) throw Error("checkpoint write failed: " + path);
}

inline CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open checkpoint: " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw ParseError("not a checkpoint file: " + path);
    std::uint64_t head_len = 0;
    f.read(reinterpret_cast<char*>(&head_len), 8);
    std::string head(head_len, '\0');
    f.read(head.data(), static_cast<std::streamsize>(head_len));
    if (!f) throw ParseError("truncated checkpoint header: " + path);

    nlohmann::json header = nlohmann::json::parse(head, nullptr, false);
    if (header.is_discarded()) throw ParseError("corrupt checkpoint header: " + path);

    CheckpointData out;
    out.cfg = config_from_json(header.at("config"));
    out.step = header.at("step").get<std::uint64_t>();
    for (const auto& entry : header.at("tensors")) {
        const auto name = entry.at("name").get<std::string>();
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        Tensor t(shape);
        f.read(reinterpret_cast<char*>(t.data()),
               static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!f) throw ParseError("truncated checkpoint payload: " + path);
        out.tensors.emplace(name, std::move(t));
    }
    return out;
}

// Rebuilds a live model, validating shape agreement and finiteness. Extra
// tensors (optimizer slots prefixed "opt.") are ignored here.
inline Model model_from_checkpoint(const CheckpointData& data) {
    validate(data.cfg);
    Model m;
    m.cfg = data.cfg;
    for (const auto& [name, shape] : parameter_shapes(data.cfg)) {
        const auto it = data.tensors.find(name);
        if (it == data.tensors.end()) throw ConfigError("checkpoint missing parameter: " + name);
        if (it->second.shape() != shape)
            throw ConfigError("checkpoint parameter shape mismatch: " + name);
        if (!it->second.all_finite())
            throw ConfigError("checkpoint parameter not finite: " + name);
        m.params.map.emplace(name, ag::leaf(it->second));
    }
    return m;
}

inline void save_model(const std::string& path, const Model& m, std::uint64_t step,
                       const std::map<std::string, Tensor>* extra = nullptr) {
    std::map<std::string, Tensor> tensors = m.params.snapshot();
    if (extra)
        for (const auto& [name, t] : *extra) tensors.emplace("opt." + name, t);
    save_checkpoint(path, m.cfg, step, tensors);
}

} // namespace miae::model
