#pragma once

#include <cstdint>
#include <random>

namespace fecplan {

// All randomness in this library comes from std::mt19937_64 (the standard
// 64-bit Mersenne Twister, bit-identical on every conforming platform).
// Uniform doubles are produced by the explicit (x >> 11) * 2^-53 mapping so
// that results do not depend on the platform's distribution implementation.
// Independent substreams are derived from a base seed with splitmix64,
// which is also the mixer recommended for seeding xoshiro-family generators.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for substream `stream` of a run keyed by `seed`.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return next_double() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace fecplan
