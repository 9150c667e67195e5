#pragma once

#include <cstdint>
#include <string>

#include "miae/core/errors.hpp"
#include "miae/masking/mask.hpp"

namespace miae::train {

enum class TrainMode { pretrain, scratch, finetune };

inline std::string to_string(TrainMode m) {
    switch (m) {
        case TrainMode::pretrain: return "pretrain";
        case TrainMode::scratch: return "scratch";
        case TrainMode::finetune: return "finetune";
    }
    throw ConfigError("unknown train mode");
}

struct TrainConfig {
    TrainMode mode = TrainMode::pretrain;
    double base_lr = 0.0024;
    double weight_decay = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double adam_eps = 1e-8;
    std::size_t batch_size = 4096;
    std::size_t warmup_steps = 5000;
    std::size_t total_steps = 100000;
    double layer_decay = 0.8; // finetune only
    double noise_std = 0.2;   // Angstrom, Gaussian augmentation
    double mask_ratio = 0.9;
    masking::Strategy mask_strategy = masking::Strategy::random;
    std::uint64_t seed = 0;

    bool operator==(const TrainConfig&) const = default;
};

inline TrainConfig default_train_config(TrainMode mode) {
    TrainConfig c;
    c.mode = mode;
    switch (mode) {
        case TrainMode::pretrain:
            break; // member initializers are the pretraining recipe
        case TrainMode::scratch:
            c.base_lr = 0.0016;
            c.weight_decay = 0.1;
            c.batch_size = 4096;
            c.warmup_steps = 1830;
            c.total_steps = 18300;
            break;
        case TrainMode::finetune:
            c.base_lr = 0.0016;
            c.weight_decay = 0.1;
            c.batch_size = 1024;
            c.warmup_steps = 1830;
            c.total_steps = 18300;
            break;
    }
    return c;
}

inline void validate(const TrainConfig& c) {
    if (c.warmup_steps > c.total_steps)
        throw ConfigError("train config: warmup_steps must not exceed total_steps");
    if (c.total_steps == 0) throw ConfigError("train config: total_steps must be positive");
    if (c.base_lr <= 0.0) throw ConfigError("train config: base_lr must be positive");
    if (c.weight_decay < 0.0) throw ConfigError("train config: weight_decay must not be negative");
    if (c.beta1 < 0.0 || c.beta1 >= 1.0 || c.beta2 < 0.0 || c.beta2 >= 1.0)
        throw ConfigError("train config: betas must lie in [0, 1)");
    if (c.batch_size == 0) throw ConfigError("train config: batch_size must be positive");
    if (c.mask_ratio < 0.0 || c.mask_ratio >= 1.0)
        throw ConfigError("train config: mask_ratio must lie in [0, 1)");
    if (c.noise_std < 0.0) throw ConfigError("train config: noise_std must not be negative");
    if (c.layer_decay <= 0.0 || c.layer_decay > 1.0)
        throw ConfigError("train config: layer_decay must lie in (0, 1]");
}

} // namespace miae::train
