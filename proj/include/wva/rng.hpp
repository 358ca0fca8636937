#pragma once

#include <cstdint>

// Counter-free splittable RNG.  SplitMix64 passes standard statistical test
// batteries, has a one-word state, and lets independent streams be derived
// by hashing (seed, stream-index) pairs — exactly what deterministic sharded
// sampling needs.  Bit-for-bit reproducible across platforms, unlike the
// distributions in <random>.

namespace wva {

class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on (0, 1]: 53-bit mantissa, never exactly zero (safe under log).
    double uniform_pos() {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

  private:
    std::uint64_t state_;
};

// Seed for an independent stream: one extra mixing round over the pair.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    SplitMix64 mix(seed ^ (0x94d049bb133111ebULL * (stream + 1)));
    return mix.next();
}

}  // namespace wva
