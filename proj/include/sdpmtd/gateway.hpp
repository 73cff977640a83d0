#pragma once

// SDP gateway (policy enforcement point). Everything is dropped silently
// unless it is a locally valid SPA packet, which is escalated to the
// controller, or it matches a live TTL rule installed from a controller
// directive.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sdpmtd/controller.hpp"
#include "sdpmtd/packet.hpp"
#include "sdpmtd/spa.hpp"

namespace sdpmtd {

struct FirewallRule {
    std::uint64_t rule_id = 0;
    NetAddress client_address;  // matched on IP only
    std::uint16_t listen_port = 0;
    NetAddress forward_to;
    std::uint64_t installed_at_ms = 0;
    std::uint64_t ttl_ms = 0;

    bool live_at(std::uint64_t now_ms) const { return now_ms < installed_at_ms + ttl_ms; }
    bool matches(const NetAddress& src, std::uint16_t dst_port) const {
        return src.ip == client_address.ip && dst_port == listen_port;
    }
};

enum class DropReason {
    NotAddressed,  // destination is not this gateway
    NoRule,
    RuleExpired,
    SpaMalformed,
    SpaUnknownClient,
    SpaBadMac,
    SpaStale,
};

std::string_view to_string(DropReason reason);

struct ForwardTo {
    NetAddress address;
    std::uint64_t rule_id = 0;
};

struct EscalateSpa {
    SpaPacket packet;
};

struct Drop {
    DropReason reason;
};

using GatewayAction = std::variant<ForwardTo, EscalateSpa, Drop>;

struct AuditRecord {
    std::uint64_t ts_ms = 0;
    std::string action;  // forward | escalate | drop | remove
    NetAddress src;
    std::uint16_t dst_port = 0;
    std::optional<std::uint64_t> rule_id;

    /// `ts_ms,action,src,dst_port,rule_id`
    std::string to_line() const;
};

struct GatewayConfig {
    HostId gateway_id;
    Ipv4 listen_ip = 0;
    std::uint64_t freshness_ms = kDefaultFreshnessMs;
};

class Gateway {
public:
    /// `credentials` is the pre-provisioned key view used for local SPA
    /// checks; it must outlive the gateway.
    Gateway(GatewayConfig config, const CredentialStore& credentials);

    GatewayAction process_packet(const SimPacket& packet, std::uint64_t now_ms);

    /// One rule per allowed service; replaces any rule for the same
    /// (client, port). Throws InvalidDirective when no services are listed.
    std::vector<std::uint64_t> install_rule(const AuthorizationDirective& directive, std::uint64_t now_ms);

    std::size_t expire_rules(std::uint64_t now_ms);

    const std::vector<FirewallRule>& rules() const { return rules_; }
    std::size_t live_rule_count(std::uint64_t now_ms) const;
    const std::vector<AuditRecord>& audit_log() const { return audit_; }
    const GatewayConfig& config() const { return config_; }

private:
    GatewayAction drop(std::uint64_t now_ms, const SimPacket& packet, DropReason reason);
    void audit(std::uint64_t now_ms, std::string action, const NetAddress& src, std::uint16_t port,
               std::optional<std::uint64_t> rule_id);

    GatewayConfig config_;
    const CredentialStore* credentials_;
    std::vector<FirewallRule> rules_;
    std::vector<AuditRecord> audit_;
    std::uint64_t next_rule_id_ = 1;
};

} // namespace sdpmtd
