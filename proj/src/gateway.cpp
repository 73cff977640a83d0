#include "sdpmtd/gateway.hpp"

#include <algorithm>

#include "sdpmtd/error.hpp"

namespace sdpmtd {

std::string_view to_string(DropReason reason) {
    switch (reason) {
    case DropReason::NotAddressed: return "not_addressed";
    case DropReason::NoRule: return "no_rule";
    case DropReason::RuleExpired: return "rule_expired";
    case DropReason::SpaMalformed: return "spa_malformed";
    case DropReason::SpaUnknownClient: return "spa_unknown_client";
    case DropReason::SpaBadMac: return "spa_bad_mac";
    case DropReason::SpaStale: return "spa_stale";
    }
    return "unknown";
}

std::string AuditRecord::to_line() const {
    return std::to_string(ts_ms) + ',' + action + ',' + src.to_string() + ',' + std::to_string(dst_port) + ',' +
           (rule_id ? std::to_string(*rule_id) : std::string("-"));
}

namespace {

DropReason spa_drop_reason(SpaReject reject) {
    switch (reject) {
    case SpaReject::UnknownClient: return DropReason::SpaUnknownClient;
    case SpaReject::BadMac: return DropReason::SpaBadMac;
    case SpaReject::Stale: return DropReason::SpaStale;
    case SpaReject::Malformed:
    case SpaReject::Replay: break;
    }
    return DropReason::SpaMalformed;
}

} // namespace

Gateway::Gateway(GatewayConfig config, const CredentialStore& credentials)
    : config_(config), credentials_(&credentials) {}

void Gateway::audit(std::uint64_t now_ms, std::string action, const NetAddress& src, std::uint16_t port,
                    std::optional<std::uint64_t> rule_id) {
    audit_.push_back(AuditRecord{now_ms, std::move(action), src, port, rule_id});
}

GatewayAction Gateway::drop(std::uint64_t now_ms, const SimPacket& packet, DropReason reason) {
    audit(now_ms, "drop", packet.src, packet.dst.port, std::nullopt);
    return Drop{reason};
}

GatewayAction Gateway::process_packet(const SimPacket& packet, std::uint64_t now_ms) {
    if (packet.dst.ip != config_.listen_ip) {
        return drop(now_ms, packet, DropReason::NotAddressed);
    }

    if (packet.kind == PacketKind::Spa) {
        auto spa = SpaPacket::deserialize(packet.spa);
        if (!spa) {
            return drop(now_ms, packet, DropReason::SpaMalformed);
        }
        auto verdict = check_spa(*spa, *credentials_, config_.freshness_ms, now_ms);
        if (!verdict) {
            return drop(now_ms, packet, spa_drop_reason(verdict.reason()));
        }
        audit(now_ms, "escalate", packet.src, packet.dst.port, std::nullopt);
        return EscalateSpa{*spa};
    }

    auto it = std::find_if(rules_.begin(), rules_.end(),
                           [&](const FirewallRule& r) { return r.matches(packet.src, packet.dst.port); });
    if (it == rules_.end()) {
        return drop(now_ms, packet, DropReason::NoRule);
    }
    if (!it->live_at(now_ms)) {
        audit(now_ms, "remove", it->client_address, it->listen_port, it->rule_id);
        rules_.erase(it);
        return drop(now_ms, packet, DropReason::RuleExpired);
    }
    audit(now_ms, "forward", packet.src, packet.dst.port, it->rule_id);
    return ForwardTo{it->forward_to, it->rule_id};
}

std::vector<std::uint64_t> Gateway::install_rule(const AuthorizationDirective& directive, std::uint64_t now_ms) {
    if (directive.allowed_services.empty()) {
        throw Error(Errc::InvalidDirective, "directive for " + directive.client_id.name() + " lists no services");
    }
    if (directive.ttl_ms == 0) {
        throw Error(Errc::InvalidDirective, "directive ttl must be positive");
    }
    std::vector<std::uint64_t> ids;
    for (const auto& service : directive.allowed_services) {
        std::erase_if(rules_, [&](const FirewallRule& r) {
            return r.matches(directive.client_address, service.gateway_listen_port);
        });
        FirewallRule rule;
        rule.rule_id = next_rule_id_++;
        rule.client_address = NetAddress{directive.client_address.ip, 0};
        rule.listen_port = service.gateway_listen_port;
        rule.forward_to = service.service_forward_address;
        rule.installed_at_ms = now_ms;
        rule.ttl_ms = directive.ttl_ms;
        rules_.push_back(rule);
        ids.push_back(rule.rule_id);
    }
    return ids;
}

std::size_t Gateway::expire_rules(std::uint64_t now_ms) {
    std::size_t removed = 0;
    for (auto it = rules_.begin(); it != rules_.end();) {
        if (!it->live_at(now_ms)) {
            audit(now_ms, "remove", it->client_address, it->listen_port, it->rule_id);
            it = rules_.erase(it);
            ++removed;
        } else {
            ++it;
        }
    }
    return removed;
}

std::size_t Gateway::live_rule_count(std::uint64_t now_ms) const {
    return static_cast<std::size_t>(
        std::count_if(rules_.begin(), rules_.end(), [&](const FirewallRule& r) { return r.live_at(now_ms); }));
}

} // namespace sdpmtd
