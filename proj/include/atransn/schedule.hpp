#pragma once

#include <cmath>

#include "atransn/errors.hpp"

namespace atransn {

// Cyclical cosine annealing: within each of `cycles` equal slices of
// total_steps, the weight climbs 0 -> w_max along (1 - cos(pi*tau))/2
// and snaps back to 0 at the next cycle start. step is 0-based.
inline double anneal_weight(int64_t step, int64_t total_steps, double w_max, int cycles) {
    if (total_steps <= 0 || cycles < 1) throw ConfigError("anneal_weight: bad schedule shape");
    if (w_max == 0.0) return 0.0;
    const double cycle_len = static_cast<double>(total_steps) / static_cast<double>(cycles);
    const double tau = std::fmod(static_cast<double>(step), cycle_len) / cycle_len;
    return w_max * (1.0 - std::cos(3.14159265358979323846 * tau)) / 2.0;
}

// Linear learning-rate warmup over the first ceil(fraction * total)
// update steps; step counts updates and is 1-based (step 0 -> 0).
inline double warmup_lr(int64_t step, int64_t total_steps, double base_lr, double fraction) {
    if (fraction < 0.0 || fraction >= 1.0) throw ConfigError("warmup_lr: fraction outside [0,1)");
    const auto warm = static_cast<int64_t>(
        std::ceil(fraction * static_cast<double>(total_steps)));
    if (warm <= 0 || step >= warm) return base_lr;
    return base_lr * static_cast<double>(step) / static_cast<double>(warm);
}

}  // namespace atransn
