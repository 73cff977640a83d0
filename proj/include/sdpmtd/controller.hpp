#pragma once

// SDP controller (policy decision point): host registry, credential database,
// authorization policy and the decision ladder applied to SPA packets that a
// gateway forwards for verification.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "sdpmtd/net.hpp"
#include "sdpmtd/rng.hpp"
#include "sdpmtd/spa.hpp"

namespace sdpmtd {

inline constexpr std::uint64_t kDefaultRuleTtlMs = 30000;

/// How a protected service is exposed: clients reach `service_id` by sending
/// to `gateway_id` on `listen_port`; the gateway forwards to `forward_to`.
struct ServiceBinding {
    HostId service_id;
    HostId gateway_id;
    std::uint16_t listen_port = 0;
    NetAddress forward_to;
};

struct AllowedService {
    HostId service_id;
    std::uint16_t gateway_listen_port = 0;
    NetAddress service_forward_address;

    bool operator==(const AllowedService&) const = default;
};

struct AuthorizationDirective {
    HostId client_id;
    NetAddress client_address;
    std::vector<AllowedService> allowed_services;
    std::uint64_t ttl_ms = 0;
    std::uint64_t issued_at_ms = 0;
};

/// Modeled mutually authenticated channel; no real TLS.
struct SecureChannel {
    std::uint64_t channel_id = 0;
    HostId peer_a;
    HostId peer_b;
    std::uint64_t established_at_ms = 0;
};

using SessionToken = std::array<std::uint8_t, 32>;

struct CredentialUpdate {
    HostId client_id;
    SessionToken session_token{};
    SecureChannel channel;
};

enum class DenyReason { Malformed, UnknownClient, BadMac, Stale, Replay, NotAuthorized };

std::string_view to_string(DenyReason reason);
DenyReason deny_reason_from(SpaReject reject);

struct Grant {
    AuthorizationDirective directive;
    CredentialUpdate credential_update;
    SecureChannel gateway_channel;
};

struct Deny {
    DenyReason reason;
};

using ControllerDecision = std::variant<Grant, Deny>;

struct DecisionRecord {
    std::uint64_t ts_ms = 0;
    bool granted = false;
    HostId client_id;
    std::optional<DenyReason> reason;
    std::vector<HostId> services;

    /// `ts_ms,event,client_id_hex,reason,services` (services `;`-separated names).
    std::string to_line() const;
};

struct ControllerConfig {
    HostId controller_id = *HostId::from_name("controller");
    std::uint64_t rule_ttl_ms = kDefaultRuleTtlMs;
    std::uint64_t freshness_ms = kDefaultFreshnessMs;
};

class Controller {
public:
    Controller(ControllerConfig config, DeterministicRng rng);

    /// Throws DuplicateHost, or DuplicateCredential if the credential's host
    /// is already credentialed.
    void register_host(const HostIdentity& identity, const Credential& credential);

    /// Catalog entry used to build directives. Throws UnknownHost.
    void bind_service(const ServiceBinding& binding);

    /// Replaces the client's policy entry. Throws UnknownHost if the client or
    /// any service is unregistered; on throw the policy is unchanged.
    void set_policy(const HostId& client_id, const std::set<HostId>& services);

    /// Decision ladder: credential, MAC, freshness, replay, policy. Throws
    /// UnknownHost when `gateway_id` is not a registered accepting host.
    ControllerDecision handle_forwarded_spa(const SpaPacket& packet, const HostId& gateway_id,
                                            const NetAddress& client_address, std::uint64_t now_ms);

    /// Deactivates the credential. Live gateway rules are not touched.
    void revoke_host(const HostId& host_id);

    const CredentialStore& credentials() const { return credentials_; }
    const HostIdentity* find_host(const HostId& host_id) const;
    std::size_t registry_size() const { return registry_.size(); }
    const std::set<HostId>* policy_for(const HostId& client_id) const;

    const std::vector<SecureChannel>& channels() const { return channels_; }
    const std::vector<DecisionRecord>& decision_log() const { return log_; }
    const ControllerConfig& config() const { return config_; }

private:
    SecureChannel open_channel(const HostId& a, const HostId& b, std::uint64_t now_ms);
    ControllerDecision deny(std::uint64_t now_ms, const HostId& client, DenyReason reason);

    ControllerConfig config_;
    DeterministicRng rng_;
    std::map<HostId, HostIdentity> registry_;
    CredentialStore credentials_;
    ReplayWindow replay_;
    std::map<HostId, std::set<HostId>> policy_;
    std::vector<ServiceBinding> catalog_;
    std::vector<SecureChannel> channels_;
    std::vector<DecisionRecord> log_;
    std::uint64_t next_channel_id_ = 1;
};

} // namespace sdpmtd
