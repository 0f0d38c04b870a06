#pragma once

#include <cstdint>

namespace chernbox {

// SplitMix64: state advances by the golden-ratio constant, output is the
// Stafford mix13 finalizer. The finalizer is a bijection on 64-bit words.
inline constexpr std::uint64_t kGolden64 = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t splitmix_finalize(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += kGolden64;
        return splitmix_finalize(state_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

  private:
    std::uint64_t state_;
};

// Substream seed for one disorder realization. master + kGolden64*(i+1) is
// injective in i mod 2^64 (odd multiplier), and the finalizer is a bijection,
// so distinct realization indices under one master seed never collide.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t realization_index) {
    return splitmix_finalize(master_seed + kGolden64 * (realization_index + 1));
}

} // namespace chernbox
