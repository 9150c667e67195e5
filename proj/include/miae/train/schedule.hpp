#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>

#include "miae/core/errors.hpp"
#include "miae/train/config.hpp"

namespace miae::train {

// Linear warmup from 0 to base_lr, then cosine decay to 0 at total_steps.
// Continuous at the junction: both branches give base_lr at step == warmup.
inline double cosine_lr(std::size_t step, double base_lr, std::size_t warmup_steps,
                        std::size_t total_steps) {
    if (step > total_steps) throw DomainError("cosine_lr: step beyond total_steps");
    if (step < warmup_steps)
        return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
    const std::size_t span = total_steps - warmup_steps;
    const double p = span == 0
                         ? 1.0
                         : static_cast<double>(step - warmup_steps) / static_cast<double>(span);
    return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * p));
}

inline double cosine_lr(std::size_t step, const TrainConfig& cfg) {
    return cosine_lr(step, cfg.base_lr, cfg.warmup_steps, cfg.total_steps);
}

// Layer-wise learning-rate decay for fine-tuning: the classification head
// (layer_index == n_layers) trains at full rate and each layer below it is
// scaled down by another factor of decay.
inline double layerwise_scale(std::size_t layer_index, std::size_t n_layers, double decay) {
    if (layer_index > n_layers) throw DomainError("layerwise_scale: layer_index beyond head");
    return std::pow(decay, static_cast<double>(n_layers - layer_index));
}

} // namespace miae::train
