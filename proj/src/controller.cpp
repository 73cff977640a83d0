#include "sdpmtd/controller.hpp"

#include "sdpmtd/error.hpp"

namespace sdpmtd {

std::string_view to_string(DenyReason reason) {
    switch (reason) {
    case DenyReason::Malformed: return "malformed";
    case DenyReason::UnknownClient: return "unknown_client";
    case DenyReason::BadMac: return "bad_mac";
    case DenyReason::Stale: return "stale";
    case DenyReason::Replay: return "replay";
    case DenyReason::NotAuthorized: return "not_authorized";
    }
    return "unknown";
}

DenyReason deny_reason_from(SpaReject reject) {
    switch (reject) {
    case SpaReject::Malformed: return DenyReason::Malformed;
    case SpaReject::UnknownClient: return DenyReason::UnknownClient;
    case SpaReject::BadMac: return DenyReason::BadMac;
    case SpaReject::Stale: return DenyReason::Stale;
    case SpaReject::Replay: return DenyReason::Replay;
    }
    return DenyReason::Malformed;
}

std::string DecisionRecord::to_line() const {
    std::string line = std::to_string(ts_ms) + (granted ? ",grant," : ",deny,") + client_id.hex() + ',' +
                       (reason ? std::string(to_string(*reason)) : std::string("ok")) + ',';
    for (std::size_t i = 0; i < services.size(); ++i) {
        if (i > 0) {
            line += ';';
        }
        line += services[i].name();
    }
    return line;
}

Controller::Controller(ControllerConfig config, DeterministicRng rng)
    : config_(config), rng_(rng), replay_(config.freshness_ms) {}

void Controller::register_host(const HostIdentity& identity, const Credential& credential) {
    if (registry_.contains(identity.host_id)) {
        throw Error(Errc::DuplicateHost, identity.host_id.name());
    }
    if (credential.host_id != identity.host_id) {
        throw Error(Errc::ValidationError, "credential does not belong to " + identity.host_id.name());
    }
    credentials_.insert(credential);
    registry_.emplace(identity.host_id, identity);
}

void Controller::bind_service(const ServiceBinding& binding) {
    if (!registry_.contains(binding.service_id)) {
        throw Error(Errc::UnknownHost, binding.service_id.name());
    }
    auto gw = registry_.find(binding.gateway_id);
    if (gw == registry_.end() || gw->second.role != HostRole::AcceptingHost) {
        throw Error(Errc::UnknownHost, binding.gateway_id.name());
    }
    catalog_.push_back(binding);
}

void Controller::set_policy(const HostId& client_id, const std::set<HostId>& services) {
    if (!registry_.contains(client_id)) {
        throw Error(Errc::UnknownHost, client_id.name());
    }
    for (const auto& s : services) {
        if (!registry_.contains(s)) {
            throw Error(Errc::UnknownHost, s.name());
        }
    }
    policy_[client_id] = services;
}

const HostIdentity* Controller::find_host(const HostId& host_id) const {
    auto it = registry_.find(host_id);
    return it == registry_.end() ? nullptr : &it->second;
}

const std::set<HostId>* Controller::policy_for(const HostId& client_id) const {
    auto it = policy_.find(client_id);
    return it == policy_.end() ? nullptr : &it->second;
}

SecureChannel Controller::open_channel(const HostId& a, const HostId& b, std::uint64_t now_ms) {
    SecureChannel ch{next_channel_id_++, a, b, now_ms};
    channels_.push_back(ch);
    return ch;
}

ControllerDecision Controller::deny(std::uint64_t now_ms, const HostId& client, DenyReason reason) {
    log_.push_back(DecisionRecord{now_ms, false, client, reason, {}});
    return Deny{reason};
}

ControllerDecision Controller::handle_forwarded_spa(const SpaPacket& packet, const HostId& gateway_id,
                                                    const NetAddress& client_address, std::uint64_t now_ms) {
    const HostIdentity* gateway = find_host(gateway_id);
    if (gateway == nullptr || gateway->role != HostRole::AcceptingHost) {
        throw Error(Errc::UnknownHost, "gateway " + gateway_id.name());
    }

    auto verdict = verify_spa(packet, credentials_, replay_, now_ms);
    if (!verdict) {
        return deny(now_ms, packet.client_id, deny_reason_from(verdict.reason()));
    }

    AuthorizationDirective directive;
    directive.client_id = packet.client_id;
    directive.client_address = client_address;
    directive.ttl_ms = config_.rule_ttl_ms;
    directive.issued_at_ms = now_ms;

    std::vector<HostId> granted;
    if (const auto* allowed = policy_for(packet.client_id)) {
        for (const auto& binding : catalog_) {
            if (binding.gateway_id == gateway_id && allowed->contains(binding.service_id)) {
                directive.allowed_services.push_back(
                    AllowedService{binding.service_id, binding.listen_port, binding.forward_to});
                granted.push_back(binding.service_id);
            }
        }
    }
    if (directive.allowed_services.empty()) {
        return deny(now_ms, packet.client_id, DenyReason::NotAuthorized);
    }

    Grant grant;
    grant.directive = std::move(directive);
    grant.credential_update.client_id = packet.client_id;
    rng_.fill(grant.credential_update.session_token);
    grant.credential_update.channel = open_channel(config_.controller_id, packet.client_id, now_ms);
    grant.gateway_channel = open_channel(config_.controller_id, gateway_id, now_ms);

    log_.push_back(DecisionRecord{now_ms, true, packet.client_id, std::nullopt, std::move(granted)});
    return grant;
}

void Controller::revoke_host(const HostId& host_id) {
    if (!registry_.contains(host_id)) {
        throw Error(Errc::UnknownHost, host_id.name());
    }
    credentials_.revoke(host_id);
}

} // namespace sdpmtd
