#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace atransn {

// Deterministic RNG stream. All randomness in the project flows through
// this wrapper: the distributions are hand-rolled on top of mt19937_64
// (which the standard pins bit-exactly) so runs reproduce across
// compilers and standard libraries. Streams are forked per purpose
// (negatives, noise, shuffle, ...) so adding a consumer in one phase
// never shifts the draws of another.
class RngStream {
public:
    explicit RngStream(uint64_t seed) : seed_(seed), engine_(mix_(seed)) {}

    // Child stream with an independent, tag-derived seed.
    RngStream fork(std::string_view tag) const {
        uint64_t h = 1469598103934665603ull;  // FNV-1a
        for (char c : tag) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        return RngStream(mix_(seed_ ^ h));
    }

    uint64_t next_u64() { return engine_(); }

    // Unbiased integer in [0, n) by rejection.
    uint64_t uniform_below(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    int32_t uniform_index(int32_t n) { return static_cast<int32_t>(uniform_below(static_cast<uint64_t>(n))); }

    // Double in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    bool coin() { return (engine_() & 1ull) != 0; }

    // Box-Muller; avoids std::normal_distribution, whose stream is
    // implementation defined.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 1e-300) u1 = uniform01();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double ang = 2.0 * 3.14159265358979323846 * u2;
        spare_ = mag * std::sin(ang);
        have_spare_ = true;
        return mag * std::cos(ang);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = uniform_below(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static uint64_t mix_(uint64_t x) {
        // splitmix64 finalizer
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    uint64_t seed_ = 0;
    std::mt19937_64 engine_;

    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace atransn
