#pragma once

#include <algorithm>
#include <cmath>

namespace atransn {

// log(1 + e^x) without overflow on either tail.
inline double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// -log(sigmoid(x)) = softplus(-x); d/dx = sigmoid(x) - 1.
inline double neg_log_sigmoid(double x) { return softplus(-x); }

// Probability clamp used inside the adversarial log terms. Gradients
// are zeroed on the clamped region, matching the flat loss there.
constexpr double kProbClamp = 1e-7;

inline double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

inline bool prob_clamped(double p) { return p <= kProbClamp || p >= 1.0 - kProbClamp; }

}  // namespace atransn
