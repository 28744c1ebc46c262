#pragma once

#include <cstdint>
#include <random>

namespace wsnbed {

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Stream tags keep one node's jitter, ambient walk and ADC noise independent.
enum class Stream : std::uint64_t { Jitter = 1, Ambient = 2, AdcNoise = 3 };

inline std::uint64_t derive_seed(std::uint64_t seed, int node_id, Stream stream) {
    return mix64(mix64(seed) ^ mix64(static_cast<std::uint64_t>(node_id) << 8 |
                                     static_cast<std::uint64_t>(stream)));
}

/// mt19937_64 with distribution code written out so results do not depend on the standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [lo, hi].
    int uniform_int(int lo, int hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(engine_() % span);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace wsnbed
