#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace sdpmtd {

/// Seeded 64-bit Mersenne Twister with a portable byte and bounded-integer
/// layer. Byte output takes one engine word per 8 bytes, little-endian, so
/// streams are reproducible across standard libraries.
class DeterministicRng {
public:
    explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    void fill(std::span<std::uint8_t> out);

    /// Uniform integer in [0, bound) by rejection sampling. bound must be > 0.
    std::uint64_t uniform(std::uint64_t bound);

private:
    std::mt19937_64 engine_;
};

} // namespace sdpmtd
