#include "sdpmtd/mtd.hpp"

#include <algorithm>
#include <iterator>
#include <stdexcept>

#include "sdpmtd/error.hpp"

namespace sdpmtd {

std::string_view to_string(MtdDenyReason reason) {
    switch (reason) {
    case MtdDenyReason::RealIp: return "real_ip";
    case MtdDenyReason::ExpiredVip: return "expired_vip";
    case MtdDenyReason::Untracked: return "untracked";
    }
    return "unknown";
}

std::string MutationRecord::to_line() const {
    return std::to_string(ts_ms) + ',' + std::to_string(epoch) + ',' + ip_to_string(real) + ',' +
           (old_vip ? ip_to_string(*old_vip) : std::string("-")) + ',' + ip_to_string(new_vip);
}

std::string DenialRecord::to_line() const {
    return std::to_string(ts_ms) + ",deny," + src.to_string() + ',' + dst.to_string() + ',' +
           std::string(to_string(reason));
}

std::vector<Ipv4> scan_hosts(const Topology& topology) {
    std::vector<Ipv4> out;
    for (auto index : topology.protected_set()) {
        const auto& id = topology.node(index).identity;
        if (id.role == HostRole::Service || id.role == HostRole::AcceptingHost) {
            out.push_back(id.real_address.ip);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

MovingTargetDefense::MovingTargetDefense(MtdConfig config, std::vector<Ipv4> protected_reals,
                                         std::vector<Ipv4> real_addresses, DeterministicRng rng)
    : config_(std::move(config)),
      protected_(std::move(protected_reals)),
      reals_(real_addresses.begin(), real_addresses.end()),
      rng_(rng),
      next_nat_port_(config_.nat_port_base) {
    std::sort(protected_.begin(), protected_.end());
    protected_.erase(std::unique(protected_.begin(), protected_.end()), protected_.end());
    for (auto ip : config_.pool) {
        if (reals_.contains(ip)) {
            throw Error(Errc::ValidationError, "vIP pool contains real address " + ip_to_string(ip));
        }
        if (!pool_.insert(ip).second) {
            throw Error(Errc::ValidationError, "vIP pool lists " + ip_to_string(ip) + " twice");
        }
    }
    for (auto ip : protected_) {
        reals_.insert(ip);
    }
    if (config_.gateway_real != 0 &&
        std::find(protected_.begin(), protected_.end(), config_.gateway_real) == protected_.end()) {
        throw Error(Errc::ValidationError, "MT-Gateway host must be protected");
    }
    if (config_.lifespan_ms == 0) {
        throw Error(Errc::ValidationError, "vIP lifespan must be positive");
    }
    available_ = pool_;
}

std::vector<AddressMapping> MovingTargetDefense::mutate(std::uint64_t now_ms) {
    if (available_.size() < protected_.size()) {
        throw Error(Errc::PoolExhausted, std::to_string(available_.size()) + " free vIPs for " +
                                             std::to_string(protected_.size()) + " protected hosts");
    }
    const std::uint64_t next_epoch = epoch_ + 1;
    std::vector<AddressMapping> fresh;
    fresh.reserve(protected_.size());
    for (auto real : protected_) {
        auto it = available_.begin();
        std::advance(it, static_cast<std::ptrdiff_t>(rng_.uniform(available_.size())));
        Ipv4 vip = *it;
        available_.erase(it);
        if (reals_.contains(vip)) {
            throw std::logic_error("vIP pool intersects real addresses");
        }
        fresh.push_back(AddressMapping{real, vip, next_epoch, now_ms, config_.lifespan_ms});
    }

    std::vector<Ipv4> retired;
    for (const auto& m : fresh) {
        std::optional<Ipv4> old;
        if (auto it = r2v_.find(m.real); it != r2v_.end()) {
            old = it->second.virt;
            v2r_.erase(it->second.virt);
            retired.push_back(it->second.virt);
        }
        r2v_[m.real] = m;
        v2r_[m.virt] = m.real;
        ever_issued_.insert(m.virt);
        mutations_.push_back(MutationRecord{now_ms, next_epoch, m.real, old, m.virt});
    }
    epoch_ = next_epoch;
    for (auto vip : retired) {
        if (referenced(vip)) {
            held_.insert(vip);
        } else {
            available_.insert(vip);
        }
    }
    return fresh;
}

std::optional<Ipv4> MovingTargetDefense::current_vip(Ipv4 real) const {
    auto it = r2v_.find(real);
    if (it == r2v_.end()) {
        return std::nullopt;
    }
    return it->second.virt;
}

std::optional<Ipv4> MovingTargetDefense::current_real(Ipv4 vip) const {
    auto it = v2r_.find(vip);
    if (it == v2r_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const ConnectionEntry* MovingTargetDefense::tracked(const SimPacket& packet) const {
    auto it = connections_.find(FlowKey{packet.src, packet.dst});
    if (it == connections_.end() || it->second.state != ConnectionState::Open) {
        return nullptr;
    }
    return &it->second;
}

std::variant<Ipv4, MtdDenyReason> MovingTargetDefense::resolve_inbound(const SimPacket& packet,
                                                                      std::uint64_t now_ms) const {
    const Ipv4 dst = packet.dst.ip;
    if (reals_.contains(dst)) {
        return MtdDenyReason::RealIp;
    }
    if (const auto* entry = tracked(packet)) {
        return entry->service_real_address;
    }
    if (auto it = v2r_.find(dst); it != v2r_.end() && !r2v_.at(it->second).expired_at(now_ms)) {
        return it->second;
    }
    if (ever_issued_.contains(dst)) {
        return MtdDenyReason::ExpiredVip;
    }
    return MtdDenyReason::Untracked;
}

void MovingTargetDefense::deny(std::uint64_t now_ms, const SimPacket& packet, MtdDenyReason reason) {
    denials_.push_back(DenialRecord{now_ms, packet.src, packet.dst, reason});
}

std::uint16_t MovingTargetDefense::allocate_nat_port() {
    for (;;) {
        std::uint16_t port = next_nat_port_;
        next_nat_port_ = next_nat_port_ == 65535 ? config_.nat_port_base : static_cast<std::uint16_t>(next_nat_port_ + 1);
        bool in_use = std::any_of(by_nat_.begin(), by_nat_.end(),
                                  [&](const auto& kv) { return kv.first.port == port; });
        if (!in_use) {
            return port;
        }
    }
}

MtdAction MovingTargetDefense::translate_inbound(const SimPacket& packet, std::uint64_t now_ms) {
    auto resolved = resolve_inbound(packet, now_ms);
    if (auto* reason = std::get_if<MtdDenyReason>(&resolved)) {
        deny(now_ms, packet, *reason);
        return MtdDeny{*reason};
    }
    const Ipv4 real = std::get<Ipv4>(resolved);

    FlowKey key{packet.src, packet.dst};
    auto it = connections_.find(key);
    if (it == connections_.end()) {
        ConnectionEntry entry;
        entry.client_address = packet.src;
        entry.service_real_address = real;
        entry.service_vip_at_open = packet.dst;
        entry.epoch_at_open = epoch_;
        Ipv4 nat_ip = current_vip(config_.gateway_real).value_or(packet.dst.ip);
        entry.nat_address = NetAddress{nat_ip, allocate_nat_port()};
        it = connections_.emplace(key, entry).first;
        by_nat_.emplace(entry.nat_address, key);
    }
    it->second.last_seen_ms = now_ms;

    SimPacket out = packet;
    out.dst = NetAddress{real, packet.dst.port};
    out.src = it->second.nat_address;
    return Rewritten{std::move(out)};
}

SimPacket MovingTargetDefense::translate_outbound(const SimPacket& packet, std::uint64_t now_ms) {
    auto nat = by_nat_.find(packet.dst);
    if (nat == by_nat_.end()) {
        throw Error(Errc::UntrackedFlow, "no tracked flow for " + packet.dst.to_string());
    }
    auto& entry = connections_.at(nat->second);
    if (entry.state != ConnectionState::Open) {
        throw Error(Errc::UntrackedFlow, "flow for " + packet.dst.to_string() + " is closed");
    }
    entry.last_seen_ms = now_ms;
    SimPacket out = packet;
    out.src = entry.service_vip_at_open;
    out.dst = entry.client_address;
    return out;
}

bool MovingTargetDefense::referenced(Ipv4 vip) const {
    return std::any_of(connections_.begin(), connections_.end(), [&](const auto& kv) {
        return kv.second.state == ConnectionState::Open &&
               (kv.second.service_vip_at_open.ip == vip || kv.second.nat_address.ip == vip);
    });
}

void MovingTargetDefense::release_unreferenced() {
    for (auto it = held_.begin(); it != held_.end();) {
        if (!referenced(*it)) {
            available_.insert(*it);
            it = held_.erase(it);
        } else {
            ++it;
        }
    }
}

std::size_t MovingTargetDefense::gc_connections(std::uint64_t now_ms, std::uint64_t idle_timeout_ms) {
    std::size_t closed = 0;
    for (auto it = connections_.begin(); it != connections_.end();) {
        if (now_ms >= it->second.last_seen_ms + idle_timeout_ms) {
            by_nat_.erase(it->second.nat_address);
            it = connections_.erase(it);
            ++closed;
        } else {
            ++it;
        }
    }
    release_unreferenced();
    return closed;
}

bool MovingTargetDefense::close_connection(const NetAddress& client, const NetAddress& vip, std::uint64_t) {
    auto it = connections_.find(FlowKey{client, vip});
    if (it == connections_.end()) {
        return false;
    }
    by_nat_.erase(it->second.nat_address);
    connections_.erase(it);
    release_unreferenced();
    return true;
}

} // namespace sdpmtd
