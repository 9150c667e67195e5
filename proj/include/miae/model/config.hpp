#pragma once

#include <cstddef>
#include <string>

#include <json.hpp>

#include "miae/core/errors.hpp"

namespace miae::model {

struct ModelConfig {
    std::size_t encoder_depth = 6;     // standard transformer blocks after the geometric stack
    std::size_t geometric_blocks = 2;
    std::size_t hidden_dim = 512;
    std::size_t attention_heads = 8;
    std::size_t decoder_depth = 2;
    std::size_t decoder_dim = 512;
    std::size_t decoder_heads = 8;
    std::size_t pair_dim = 64; // width of the pairwise representation
    bool use_sequence = false;
    bool use_inverse_folding_loss = false;
    std::size_t max_length = 512;

    bool operator==(const ModelConfig&) const = default;
};

inline void validate(const ModelConfig& c) {
    if (c.encoder_depth == 0 || c.geometric_blocks == 0 || c.hidden_dim == 0 ||
        c.attention_heads == 0 || c.decoder_depth == 0 || c.decoder_dim == 0 ||
        c.decoder_heads == 0 || c.pair_dim == 0 || c.max_length == 0)
        throw ConfigError("model config: all dimensions must be positive");
    if (c.hidden_dim % c.attention_heads != 0)
        throw ConfigError("model config: hidden_dim must divide by attention_heads");
    if (c.decoder_dim % c.decoder_heads != 0)
        throw ConfigError("model config: decoder_dim must divide by decoder_heads");
    if ((c.decoder_dim / c.decoder_heads) % 2 != 0)
        throw ConfigError("model config: decoder head width must be even for rotary encoding");
}

inline ModelConfig miae_s() {
    ModelConfig c;
    c.encoder_depth = 6;
    c.hidden_dim = 512;
    c.attention_heads = 8;
    return c;
}

inline ModelConfig miae_b() {
    ModelConfig c;
    c.encoder_depth = 12;
    c.hidden_dim = 768;
    c.attention_heads = 12;
    return c;
}

inline ModelConfig miae_l() {
    ModelConfig c;
    c.encoder_depth = 24;
    c.hidden_dim = 1024;
    c.attention_heads = 16;
    return c;
}

inline ModelConfig preset(const std::string& name) {
    if (name == "miae-s") return miae_s();
    if (name == "miae-b") return miae_b();
    if (name == "miae-l") return miae_l();
    throw ConfigError("unknown model preset: " + name);
}

inline nlohmann::json to_json(const ModelConfig& c) {
    return nlohmann::json{{"encoder_depth", c.encoder_depth},
                          {"geometric_blocks", c.geometric_blocks},
                          {"hidden_dim", c.hidden_dim},
                          {"attention_heads", c.attention_heads},
                          {"decoder_depth", c.decoder_depth},
                          {"decoder_dim", c.decoder_dim},
                          {"decoder_heads", c.decoder_heads},
                          {"pair_dim", c.pair_dim},
                          {"use_sequence", c.use_sequence},
                          {"use_inverse_folding_loss", c.use_inverse_folding_loss},
                          {"max_length", c.max_length}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.encoder_depth = j.at("encoder_depth").get<std::size_t>();
    c.geometric_blocks = j.at("geometric_blocks").get<std::size_t>();
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.attention_heads = j.at("attention_heads").get<std::size_t>();
    c.decoder_depth = j.at("decoder_depth").get<std::size_t>();
    c.decoder_dim = j.at("decoder_dim").get<std::size_t>();
    c.decoder_heads = j.at("decoder_heads").get<std::size_t>();
    c.pair_dim = j.at("pair_dim").get<std::size_t>();
    c.use_sequence = j.at("use_sequence").get<bool>();
    c.use_inverse_folding_loss = j.at("use_inverse_folding_loss").get<bool>();
    c.max_length = j.at("max_length").get<std::size_t>();
    validate(c);
    return c;
}

} // namespace miae::model
