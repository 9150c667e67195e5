#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <vector>

#include "miae/core/errors.hpp"
#include "miae/core/rng.hpp"

namespace miae::masking {

enum class Strategy { random, span };

struct MaskPlan {
    std::size_t n = 0;
    std::vector<std::size_t> visible; // sorted
    std::vector<std::size_t> masked;  // sorted
    double ratio = 0.0;
    Strategy strategy = Strategy::random;
    std::uint64_t seed = 0;
};

inline std::size_t visible_count(std::size_t n, double ratio) {
    const auto v = static_cast<std::size_t>(std::llround((1.0 - ratio) * static_cast<double>(n)));
    return std::max<std::size_t>(1, v);
}

inline constexpr std::size_t kSpanLength = 5;

// Deterministic mask plan. Random strategy: masked indices drawn uniformly
// without replacement. Span strategy: non-overlapping length-5 runs placed
// uniformly among the still-free starts, then uniform singleton top-ups for
// the remainder (or once no full run fits anywhere).
inline MaskPlan sample_mask(std::size_t n, double ratio, Strategy strategy, std::uint64_t seed) {
    if (n == 0) throw InvalidMaskError("sample_mask: empty input");
    if (ratio < 0.0 || ratio >= 1.0) throw InvalidMaskError("sample_mask: ratio must be in [0,1)");

    const std::size_t keep = visible_count(n, ratio);
    const std::size_t target = n - keep;
    std::vector<bool> is_masked(n, false);
    Rng rng(seed);

    if (strategy == Strategy::random) {
        // partial Fisher-Yates over the index set
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < target; ++i) {
            const std::size_t j = i + rng.uniform_int(n - i);
            std::swap(idx[i], idx[j]);
            is_masked[idx[i]] = true;
        }
    } else {
        std::size_t remaining = target;
        while (remaining >= kSpanLength) {
            std::vector<std::size_t> starts;
            for (std::size_t s = 0; s + kSpanLength <= n; ++s) {
                bool free = true;
                for (std::size_t k = 0; k < kSpanLength; ++k)
                    if (is_masked[s + k]) {
                        free = false;
                        break;
                    }
                if (free) starts.push_back(s);
            }
            if (starts.empty()) break; // placement space exhausted
            const std::size_t s = starts[rng.uniform_int(starts.size())];
            for (std::size_t k = 0; k < kSpanLength; ++k) is_masked[s + k] = true;
            remaining -= kSpanLength;
        }
        while (remaining > 0) {
            std::vector<std::size_t> free;
            for (std::size_t i = 0; i < n; ++i)
                if (!is_masked[i]) free.push_back(i);
            const std::size_t i = free[rng.uniform_int(free.size())];
            is_masked[i] = true;
            --remaining;
        }
    }

    MaskPlan plan;
    plan.n = n;
    plan.ratio = ratio;
    plan.strategy = strategy;
    plan.seed = seed;
    for (std::size_t i = 0; i < n; ++i)
        (is_masked[i] ? plan.masked : plan.visible).push_back(i);
    return plan;
}

} // namespace miae::masking
