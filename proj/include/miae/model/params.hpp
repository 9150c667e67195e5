#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "miae/core/autograd.hpp"
#include "miae/core/rng.hpp"
#include "miae/core/tensor.hpp"
#include "miae/io/backbone.hpp"
#include "miae/model/config.hpp"

namespace miae::model {

using ShapeList = std::vector<std::pair<std::string, std::vector<std::size_t>>>;

// Every learnable tensor, by name and shape, in deterministic (sorted-name
// iteration friendly) declaration order. Allocation-free, so parameter
// counts for large presets cost nothing.
inline ShapeList parameter_shapes(const ModelConfig& c) {
    validate(c);
    ShapeList out;
    const std::size_t d = c.hidden_dim;
    const std::size_t h3 = 3 * c.attention_heads; // stacked 3-vector heads
    const std::size_t dd = c.decoder_dim;

    auto block = [&out](const std::string& prefix, std::size_t dim) {
        out.emplace_back(prefix + ".ln1.gamma", std::vector<std::size_t>{dim});
        out.emplace_back(prefix + ".ln1.beta", std::vector<std::size_t>{dim});
        out.emplace_back(prefix + ".attn.wq", std::vector<std::size_t>{dim, dim});
        out.emplace_back(prefix + ".attn.bq", std::vector<std::size_t>{dim});
        out.emplace_back(prefix + ".attn.wk", std::vector<std::size_t>{dim, dim});
        out.emplace_back(prefix + ".attn.bk", std::vector<std::size_t>{dim});
        out.emplace_back(prefix + ".attn.wv", std::vector<std::size_t>{dim, dim});
        out.emplace_back(prefix + ".attn.bv", std::vector<std::size_t>{dim});
        out.emplace_back(prefix + ".attn.wo", std::vector<std::size_t>{dim, dim});
        out.emplace_back(prefix + ".attn.bo", std::vector<std::size_t>{dim});
        out.emplace_back(prefix + ".ln2.gamma", std::vector<std::size_t>{dim});
        out.emplace_back(prefix + ".ln2.beta", std::vector<std::size_t>{dim});
        out.emplace_back(prefix + ".ffn.w1", std::vector<std::size_t>{dim, 4 * dim});
        out.emplace_back(prefix + ".ffn.b1", std::vector<std::size_t>{4 * dim});
        out.emplace_back(prefix + ".ffn.w2", std::vector<std::size_t>{4 * dim, dim});
        out.emplace_back(prefix + ".ffn.b2", std::vector<std::size_t>{dim});
    };

    out.emplace_back("enc.init_embed", std::vector<std::size_t>{d});
    if (c.use_sequence)
        out.emplace_back("enc.aa_embed", std::vector<std::size_t>{io::kUnknownAA + 1, d});
    out.emplace_back("enc.cls_token", std::vector<std::size_t>{d});

    for (std::size_t i = 0; i < c.geometric_blocks; ++i) {
        const std::string p = "enc.geo." + std::to_string(i);
        out.emplace_back(p + ".ln1.gamma", std::vector<std::size_t>{d});
        out.emplace_back(p + ".ln1.beta", std::vector<std::size_t>{d});
        out.emplace_back(p + ".attn.wqr", std::vector<std::size_t>{d, h3});
        out.emplace_back(p + ".attn.wkr", std::vector<std::size_t>{d, h3});
        out.emplace_back(p + ".attn.wqd", std::vector<std::size_t>{d, h3});
        out.emplace_back(p + ".attn.wkd", std::vector<std::size_t>{d, h3});
        out.emplace_back(p + ".attn.wv", std::vector<std::size_t>{d, h3});
        out.emplace_back(p + ".attn.gate_r", std::vector<std::size_t>{c.attention_heads});
        out.emplace_back(p + ".attn.gate_d", std::vector<std::size_t>{c.attention_heads});
        out.emplace_back(p + ".attn.wo", std::vector<std::size_t>{h3, d});
        out.emplace_back(p + ".attn.bo", std::vector<std::size_t>{d});
        out.emplace_back(p + ".ln2.gamma", std::vector<std::size_t>{d});
        out.emplace_back(p + ".ln2.beta", std::vector<std::size_t>{d});
        out.emplace_back(p + ".ffn.w1", std::vector<std::size_t>{d, 4 * d});
        out.emplace_back(p + ".ffn.b1", std::vector<std::size_t>{4 * d});
        out.emplace_back(p + ".ffn.w2", std::vector<std::size_t>{4 * d, d});
        out.emplace_back(p + ".ffn.b2", std::vector<std::size_t>{d});
    }

    for (std::size_t i = 0; i < c.encoder_depth; ++i) block("enc.blk." + std::to_string(i), d);
    out.emplace_back("enc.final_ln.gamma", std::vector<std::size_t>{d});
    out.emplace_back("enc.final_ln.beta", std::vector<std::size_t>{d});

    out.emplace_back("dec.proj.w", std::vector<std::size_t>{d, dd});
    out.emplace_back("dec.proj.b", std::vector<std::size_t>{dd});
    out.emplace_back("dec.mask_token", std::vector<std::size_t>{dd});
    for (std::size_t i = 0; i < c.decoder_depth; ++i) block("dec.blk." + std::to_string(i), dd);
    out.emplace_back("dec.final_ln.gamma", std::vector<std::size_t>{dd});
    out.emplace_back("dec.final_ln.beta", std::vector<std::size_t>{dd});

    out.emplace_back("head.coords.w", std::vector<std::size_t>{dd, 9});
    out.emplace_back("head.coords.b", std::vector<std::size_t>{9});
    out.emplace_back("head.pair.wa", std::vector<std::size_t>{dd, c.pair_dim});
    out.emplace_back("head.pair.wb", std::vector<std::size_t>{dd, c.pair_dim});
    out.emplace_back("head.pair.bias", std::vector<std::size_t>{c.pair_dim});
    out.emplace_back("head.pair.dist.w", std::vector<std::size_t>{c.pair_dim, 64});
    out.emplace_back("head.pair.dist.b", std::vector<std::size_t>{64});
    out.emplace_back("head.pair.dir.w", std::vector<std::size_t>{c.pair_dim, 144});
    out.emplace_back("head.pair.dir.b", std::vector<std::size_t>{144});
    if (c.use_inverse_folding_loss) {
        out.emplace_back("head.aa.w", std::vector<std::size_t>{dd, 20});
        out.emplace_back("head.aa.b", std::vector<std::size_t>{20});
    }
    return out;
}

inline std::size_t parameter_count(const ModelConfig& c) {
    std::size_t total = 0;
    for (const auto& [name, shape] : parameter_shapes(c)) {
        std::size_t n = 1;
        for (auto s : shape) n *= s;
        total += n;
    }
    return total;
}

// Learnable state: the leaf Vars live for the model's lifetime so gradient
// accumulation across a batch lands in one place.
struct ParamStore {
    std::map<std::string, ag::Var> map;

    ag::Var& at(const std::string& name) {
        auto it = map.find(name);
        if (it == map.end()) throw ConfigError("unknown parameter: " + name);
        return it->second;
    }
    const ag::Var& at(const std::string& name) const {
        auto it = map.find(name);
        if (it == map.end()) throw ConfigError("unknown parameter: " + name);
        return it->second;
    }
    bool has(const std::string& name) const { return map.count(name) != 0; }

    void zero_grad() {
        for (auto& [name, var] : map) {
            Tensor& g = var.node()->grad;
            if (g.size()) g.fill(0.0);
        }
    }

    std::map<std::string, Tensor> snapshot() const {
        std::map<std::string, Tensor> out;
        for (const auto& [name, var] : map) out.emplace(name, var.value());
        return out;
    }
};

// Weights ~ N(0, 1/fan_in), biases and shifts zero, scales one. The two
// attention gates start at softplus(x) = 1. Layer-norm pairs are detected by
// name so every module above initializes consistently.
inline ParamStore init_parameters(const ModelConfig& c, std::uint64_t seed) {
    ParamStore store;
    Rng rng(seed);
    const double gate_init = std::log(std::exp(1.0) - 1.0); // softplus(x) = 1
    for (const auto& [name, shape] : parameter_shapes(c)) {
        Tensor t(shape);
        const bool is_matrix = shape.size() == 2;
        const auto ends_with = [&name](const char* suffix) {
            const std::string s(suffix);
            return name.size() >= s.size() && name.compare(name.size() - s.size(), s.size(), s) == 0;
        };
        if (ends_with(".bias") || ends_with(".bq") || ends_with(".bk") || ends_with(".bv") ||
            ends_with(".bo") || ends_with(".b") || ends_with(".b1") || ends_with(".b2") ||
            ends_with(".beta")) {
            t.fill(0.0);
        } else if (ends_with(".gamma")) {
            t.fill(1.0);
        } else if (ends_with("gate_r") || ends_with("gate_d")) {
            t.fill(gate_init);
        } else {
            const double fan_in = is_matrix ? static_cast<double>(shape[0])
                                            : static_cast<double>(shape.back());
            const double std_dev = 1.0 / std::sqrt(std::max(1.0, fan_in));
            for (std::size_t i = 0; i < t.size(); ++i) t[i] = std_dev * rng.normal();
        }
        store.map.emplace(name, ag::leaf(std::move(t)));
    }
    return store;
}

} // namespace miae::model
