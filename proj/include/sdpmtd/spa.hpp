#pragma once

// Single Packet Authorization: wire format, credentials, HMAC signing and
// one-time verification.
//
// Wire layout (big-endian integers, 89 bytes total):
//
//   offset  size  field
//   0       1     version (0x01)
//   1       16    client_id
//   17      8     timestamp_ms
//   25      16    nonce
//   41      16    requested_service_id
//   57      32    mac = HMAC-SHA-256(key, bytes[0..57))

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>

#include "sdpmtd/hmac.hpp"
#include "sdpmtd/net.hpp"
#include "sdpmtd/rng.hpp"

namespace sdpmtd {

inline constexpr std::uint8_t kSpaVersion = 0x01;
inline constexpr std::size_t kSpaPacketSize = 89;
inline constexpr std::size_t kSpaSignedSize = 57;
inline constexpr std::size_t kHmacKeySize = 32;
inline constexpr std::uint64_t kDefaultFreshnessMs = 5000;

using HmacKey = std::array<std::uint8_t, kHmacKeySize>;
using SpaNonce = std::array<std::uint8_t, 16>;
using SpaBytes = std::array<std::uint8_t, kSpaPacketSize>;

struct Credential {
    HostId host_id;
    HmacKey hmac_key{};
    std::uint64_t created_at_ms = 0;
};

struct SpaPacket {
    std::uint8_t version = kSpaVersion;
    HostId client_id;
    std::uint64_t timestamp_ms = 0;
    SpaNonce nonce{};
    HostId requested_service_id;
    Sha256Digest mac{};

    bool operator==(const SpaPacket&) const = default;

    SpaBytes serialize() const;
    std::array<std::uint8_t, kSpaSignedSize> signed_bytes() const;

    /// nullopt unless `bytes` is exactly 89 bytes with the expected version.
    static std::optional<SpaPacket> deserialize(std::span<const std::uint8_t> bytes);
};

enum class SpaReject { Malformed, UnknownClient, BadMac, Stale, Replay };

std::string_view to_string(SpaReject reason);
std::optional<SpaReject> parse_spa_reject(std::string_view text);

class VerifyResult {
public:
    static VerifyResult accept() { return VerifyResult{}; }
    static VerifyResult reject(SpaReject reason) { return VerifyResult{reason}; }

    bool accepted() const { return !reason_.has_value(); }
    explicit operator bool() const { return accepted(); }
    /// Only meaningful when !accepted().
    SpaReject reason() const { return *reason_; }

    bool operator==(const VerifyResult&) const = default;

private:
    VerifyResult() = default;
    explicit VerifyResult(SpaReject reason) : reason_(reason) {}

    std::optional<SpaReject> reason_;
};

/// Credential database: at most one active credential per host.
class CredentialStore {
public:
    /// Draws 32 key bytes from `rng`. Throws DuplicateCredential if the host
    /// already holds an active credential.
    const Credential& generate(const HostId& host_id, DeterministicRng& rng, std::uint64_t now_ms = 0);

    /// Pre-provisioned key material. Throws DuplicateCredential.
    const Credential& insert(const Credential& credential);

    /// Returns false when no active credential existed.
    bool revoke(const HostId& host_id);

    const Credential* find(const HostId& host_id) const;
    std::size_t size() const { return active_.size(); }

private:
    std::map<HostId, Credential> active_;
};

/// Remembers accepted (client_id, nonce) pairs. An entry is evicted only once
/// its packet timestamp has left the freshness window, so eviction can never
/// re-enable a nonce that would still pass the freshness check.
class ReplayWindow {
public:
    explicit ReplayWindow(std::uint64_t horizon_ms = kDefaultFreshnessMs) : horizon_ms_(horizon_ms) {}

    std::uint64_t horizon_ms() const { return horizon_ms_; }

    bool seen(const HostId& client, const SpaNonce& nonce) const;
    void record(const HostId& client, const SpaNonce& nonce, std::uint64_t timestamp_ms, std::uint64_t now_ms);
    std::size_t evict(std::uint64_t now_ms);
    std::size_t size() const { return seen_.size(); }

private:
    struct Entry {
        std::uint64_t inserted_at_ms;
        std::uint64_t timestamp_ms;
    };

    std::uint64_t horizon_ms_;
    std::map<std::pair<HostId, SpaNonce>, Entry> seen_;
};

SpaPacket build_spa(const Credential& credential, const HostId& requested_service_id, std::uint64_t now_ms,
                    DeterministicRng& rng);

/// Stateless checks (known client, MAC, freshness). Used by gateways before
/// escalating to the controller.
VerifyResult check_spa(const SpaPacket& packet, const CredentialStore& credentials, std::uint64_t horizon_ms,
                       std::uint64_t now_ms);

/// Full one-time verification. On Accept the nonce is recorded in `window`.
VerifyResult verify_spa(const SpaPacket& packet, const CredentialStore& credentials, ReplayWindow& window,
                        std::uint64_t now_ms);

VerifyResult verify_spa(std::span<const std::uint8_t> bytes, const CredentialStore& credentials,
                        ReplayWindow& window, std::uint64_t now_ms);

} // namespace sdpmtd
