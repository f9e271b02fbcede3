#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace icut {

/// Stream purposes. Every random quantity in the library is drawn from a
/// stream keyed by (seed, purpose, index), so results never depend on the
/// order in which workers visit indices.
enum class StreamTag : std::uint64_t {
    features = 1,
    noise = 2,
    group_action = 3,
    shuffle = 4,
    init = 5,
    random_select = 6,
    perturb = 7,
    monte_carlo = 8,
    invariance = 9,
    sample_pick = 10,
};

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// SplitMix64: a Weyl counter passed through a bijective mixer. Satisfies
/// UniformRandomBitGenerator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t state) : state_(state) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

private:
    std::uint64_t state_;
};

constexpr SplitMix64 make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0) {
    std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    h = mix64(h ^ (static_cast<std::uint64_t>(tag) * 0x9e3779b97f4a7c15ULL));
    h = mix64(h ^ index);
    return SplitMix64(h);
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(SplitMix64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(SplitMix64& g, double lo, double hi) {
    return lo + (hi - lo) * uniform01(g);
}

constexpr std::uint64_t max_multiple(std::uint64_t n) {
    return std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
}

/// Uniform integer in [0, n) by rejection (no modulo bias).
inline std::uint64_t uniform_below(SplitMix64& g, std::uint64_t n) {
    const std::uint64_t limit = max_multiple(n);
    std::uint64_t r = g();
    while (r >= limit) r = g();
    return r % n;
}

/// Standard normal via Box-Muller (one variate per call, no cached state).
inline double standard_normal(SplitMix64& g) {
    double u1 = uniform01(g);
    while (u1 <= 0.0) u1 = uniform01(g);
    const double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace icut
