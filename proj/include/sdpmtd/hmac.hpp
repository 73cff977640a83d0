#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace sdpmtd {

using Sha256Digest = std::array<std::uint8_t, 32>;

Sha256Digest hmac_sha256(std::span<const std::uint8_t> key, std::span<const std::uint8_t> message);

/// Constant-time comparison of two digests.
bool digest_equal(const Sha256Digest& a, const Sha256Digest& b);

} // namespace sdpmtd
