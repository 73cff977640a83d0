#include "sdpmtd/spa.hpp"

#include <algorithm>

#include "sdpmtd/error.hpp"

namespace sdpmtd {

namespace {

constexpr std::size_t kClientOffset = 1;
constexpr std::size_t kTimestampOffset = 17;
constexpr std::size_t kNonceOffset = 25;
constexpr std::size_t kServiceOffset = 41;
constexpr std::size_t kMacOffset = 57;

void put_u64_be(std::uint8_t* out, std::uint64_t v) {
    for (int i = 7; i >= 0; --i) {
        out[i] = static_cast<std::uint8_t>(v & 0xff);
        v >>= 8;
    }
}

std::uint64_t get_u64_be(const std::uint8_t* in) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v = (v << 8) | in[i];
    }
    return v;
}

std::uint64_t abs_diff(std::uint64_t a, std::uint64_t b) {
    return a > b ? a - b : b - a;
}

} // namespace

std::array<std::uint8_t, kSpaSignedSize> SpaPacket::signed_bytes() const {
    std::array<std::uint8_t, kSpaSignedSize> out{};
    out[0] = version;
    std::copy(client_id.bytes.begin(), client_id.bytes.end(), out.begin() + kClientOffset);
    put_u64_be(out.data() + kTimestampOffset, timestamp_ms);
    std::copy(nonce.begin(), nonce.end(), out.begin() + kNonceOffset);
    std::copy(requested_service_id.bytes.begin(), requested_service_id.bytes.end(), out.begin() + kServiceOffset);
    return out;
}

SpaBytes SpaPacket::serialize() const {
    SpaBytes out{};
    auto head = signed_bytes();
    std::copy(head.begin(), head.end(), out.begin());
    std::copy(mac.begin(), mac.end(), out.begin() + kMacOffset);
    return out;
}

std::optional<SpaPacket> SpaPacket::deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() != kSpaPacketSize || bytes[0] != kSpaVersion) {
        return std::nullopt;
    }
    SpaPacket p;
    p.version = bytes[0];
    std::copy_n(bytes.begin() + kClientOffset, 16, p.client_id.bytes.begin());
    p.timestamp_ms = get_u64_be(bytes.data() + kTimestampOffset);
    std::copy_n(bytes.begin() + kNonceOffset, 16, p.nonce.begin());
    std::copy_n(bytes.begin() + kServiceOffset, 16, p.requested_service_id.bytes.begin());
    std::copy_n(bytes.begin() + kMacOffset, 32, p.mac.begin());
    return p;
}

std::string_view to_string(SpaReject reason) {
    switch (reason) {
    case SpaReject::Malformed: return "malformed";
    case SpaReject::UnknownClient: return "unknown_client";
    case SpaReject::BadMac: return "bad_mac";
    case SpaReject::Stale: return "stale";
    case SpaReject::Replay: return "replay";
    }
    return "unknown";
}

std::optional<SpaReject> parse_spa_reject(std::string_view text) {
    for (auto r : {SpaReject::Malformed, SpaReject::UnknownClient, SpaReject::BadMac, SpaReject::Stale,
                   SpaReject::Replay}) {
        if (to_string(r) == text) {
            return r;
        }
    }
    return std::nullopt;
}

const Credential& CredentialStore::generate(const HostId& host_id, DeterministicRng& rng, std::uint64_t now_ms) {
    if (active_.contains(host_id)) {
        throw Error(Errc::DuplicateCredential, host_id.name());
    }
    Credential c;
    c.host_id = host_id;
    c.created_at_ms = now_ms;
    rng.fill(c.hmac_key);
    return active_.emplace(host_id, c).first->second;
}

const Credential& CredentialStore::insert(const Credential& credential) {
    auto [it, inserted] = active_.emplace(credential.host_id, credential);
    if (!inserted) {
        throw Error(Errc::DuplicateCredential, credential.host_id.name());
    }
    return it->second;
}

bool CredentialStore::revoke(const HostId& host_id) {
    return active_.erase(host_id) > 0;
}

const Credential* CredentialStore::find(const HostId& host_id) const {
    auto it = active_.find(host_id);
    return it == active_.end() ? nullptr : &it->second;
}

bool ReplayWindow::seen(const HostId& client, const SpaNonce& nonce) const {
    return seen_.contains({client, nonce});
}

void ReplayWindow::record(const HostId& client, const SpaNonce& nonce, std::uint64_t timestamp_ms,
                          std::uint64_t now_ms) {
    seen_.insert_or_assign({client, nonce}, Entry{now_ms, timestamp_ms});
}

std::size_t ReplayWindow::evict(std::uint64_t now_ms) {
    return std::erase_if(seen_, [&](const auto& kv) {
        return now_ms > kv.second.timestamp_ms && now_ms - kv.second.timestamp_ms > horizon_ms_;
    });
}

SpaPacket build_spa(const Credential& credential, const HostId& requested_service_id, std::uint64_t now_ms,
                    DeterministicRng& rng) {
    SpaPacket p;
    p.client_id = credential.host_id;
    p.timestamp_ms = now_ms;
    rng.fill(p.nonce);
    p.requested_service_id = requested_service_id;
    auto head = p.signed_bytes();
    p.mac = hmac_sha256(credential.hmac_key, head);
    return p;
}

VerifyResult check_spa(const SpaPacket& packet, const CredentialStore& credentials, std::uint64_t horizon_ms,
                       std::uint64_t now_ms) {
    if (packet.version != kSpaVersion) {
        return VerifyResult::reject(SpaReject::Malformed);
    }
    const Credential* credential = credentials.find(packet.client_id);
    if (credential == nullptr) {
        return VerifyResult::reject(SpaReject::UnknownClient);
    }
    auto head = packet.signed_bytes();
    if (!digest_equal(hmac_sha256(credential->hmac_key, head), packet.mac)) {
        return VerifyResult::reject(SpaReject::BadMac);
    }
    if (abs_diff(now_ms, packet.timestamp_ms) > horizon_ms) {
        return VerifyResult::reject(SpaReject::Stale);
    }
    return VerifyResult::accept();
}

VerifyResult verify_spa(const SpaPacket& packet, const CredentialStore& credentials, ReplayWindow& window,
                        std::uint64_t now_ms) {
    auto result = check_spa(packet, credentials, window.horizon_ms(), now_ms);
    if (!result) {
        return result;
    }
    window.evict(now_ms);
    if (window.seen(packet.client_id, packet.nonce)) {
        return VerifyResult::reject(SpaReject::Replay);
    }
    window.record(packet.client_id, packet.nonce, packet.timestamp_ms, now_ms);
    return VerifyResult::accept();
}

VerifyResult verify_spa(std::span<const std::uint8_t> bytes, const CredentialStore& credentials,
                        ReplayWindow& window, std::uint64_t now_ms) {
    auto packet = SpaPacket::deserialize(bytes);
    if (!packet) {
        return VerifyResult::reject(SpaReject::Malformed);
    }
    return verify_spa(*packet, credentials, window, now_ms);
}

} // namespace sdpmtd
