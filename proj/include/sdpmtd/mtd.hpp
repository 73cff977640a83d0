#pragma once

// Moving target defense by random host mutation. The MT-Controller half keeps
// the vIP pool, the V2R/R2V maps and connection tracking; the MT-Gateway half
// translates traffic and denies anything addressed to a real IP, a stale vIP
// without a tracked flow, or an unknown address.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "sdpmtd/net.hpp"
#include "sdpmtd/packet.hpp"
#include "sdpmtd/rng.hpp"
#include "sdpmtd/topology.hpp"

namespace sdpmtd {

inline constexpr std::uint64_t kDefaultVipLifespanMs = 10000;
inline constexpr std::uint64_t kDefaultIdleTimeoutMs = 60000;

struct AddressMapping {
    Ipv4 real = 0;
    Ipv4 virt = 0;
    std::uint64_t epoch = 0;
    std::uint64_t assigned_at_ms = 0;
    std::uint64_t lifespan_ms = 0;

    bool expired_at(std::uint64_t now_ms) const { return now_ms >= assigned_at_ms + lifespan_ms; }
    bool operator==(const AddressMapping&) const = default;
};

enum class ConnectionState { Open, Closed };

struct ConnectionEntry {
    NetAddress client_address;
    Ipv4 service_real_address = 0;
    NetAddress service_vip_at_open;  // vIP and port the client addressed
    std::uint64_t epoch_at_open = 0;
    NetAddress nat_address;          // MT-Gateway vIP and port used toward the service
    std::uint64_t last_seen_ms = 0;
    ConnectionState state = ConnectionState::Open;
};

enum class MtdDenyReason { RealIp, ExpiredVip, Untracked };

std::string_view to_string(MtdDenyReason reason);

struct Rewritten {
    SimPacket packet;
};

struct MtdDeny {
    MtdDenyReason reason;
};

using MtdAction = std::variant<Rewritten, MtdDeny>;

struct MutationRecord {
    std::uint64_t ts_ms = 0;
    std::uint64_t epoch = 0;
    Ipv4 real = 0;
    std::optional<Ipv4> old_vip;
    Ipv4 new_vip = 0;

    /// `ts_ms,epoch,real,old_vip,new_vip`
    std::string to_line() const;
};

struct DenialRecord {
    std::uint64_t ts_ms = 0;
    NetAddress src;
    NetAddress dst;
    MtdDenyReason reason;

    /// `ts_ms,deny,src,dst,reason`
    std::string to_line() const;
};

/// Service hosts the MT-Controller discovers: protected nodes that are
/// services or accepting hosts.
std::vector<Ipv4> scan_hosts(const Topology& topology);

struct MtdConfig {
    std::vector<Ipv4> pool;
    std::uint64_t lifespan_ms = kDefaultVipLifespanMs;
    std::uint64_t idle_timeout_ms = kDefaultIdleTimeoutMs;
    Ipv4 gateway_real = 0;            // host whose vIP is the NAT source
    std::uint16_t nat_port_base = 20000;
};

class MovingTargetDefense {
public:
    /// Throws ValidationError if the pool overlaps `real_addresses`, contains
    /// duplicates, or `gateway_real` is not protected.
    MovingTargetDefense(MtdConfig config, std::vector<Ipv4> protected_reals, std::vector<Ipv4> real_addresses,
                        DeterministicRng rng);

    /// Assigns every protected host a fresh vIP and advances the epoch. Old
    /// vIPs go back to the pool unless a tracked flow still uses them.
    /// Throws PoolExhausted; state is unchanged on throw.
    std::vector<AddressMapping> mutate(std::uint64_t now_ms);

    /// Read-only admission check; the real destination host on success.
    std::variant<Ipv4, MtdDenyReason> resolve_inbound(const SimPacket& packet, std::uint64_t now_ms) const;

    /// Admission, connection tracking and NAT: destination becomes the real
    /// host, source becomes the MT-Gateway's vIP with a per-flow port.
    MtdAction translate_inbound(const SimPacket& packet, std::uint64_t now_ms);

    /// Reverse NAT for replies on a tracked flow. Throws UntrackedFlow.
    SimPacket translate_outbound(const SimPacket& packet, std::uint64_t now_ms);

    /// Closes flows idle for at least `idle_timeout_ms` and releases vIPs no
    /// longer referenced. Returns the number of flows closed.
    std::size_t gc_connections(std::uint64_t now_ms, std::uint64_t idle_timeout_ms);

    /// Explicit close of a tracked flow; returns false when not found.
    bool close_connection(const NetAddress& client, const NetAddress& vip, std::uint64_t now_ms);

    std::uint64_t epoch() const { return epoch_; }
    std::optional<Ipv4> current_vip(Ipv4 real) const;
    std::optional<Ipv4> current_real(Ipv4 vip) const;
    const std::map<Ipv4, AddressMapping>& current_mappings() const { return r2v_; }
    const std::set<Ipv4>& available() const { return available_; }
    std::size_t held_count() const { return held_.size(); }
    bool owns(Ipv4 ip) const { return pool_.contains(ip); }
    std::size_t open_connections() const { return connections_.size(); }
    const std::vector<MutationRecord>& mutation_log() const { return mutations_; }
    const std::vector<DenialRecord>& denial_log() const { return denials_; }
    const MtdConfig& config() const { return config_; }
    const std::vector<Ipv4>& protected_reals() const { return protected_; }

private:
    using FlowKey = std::pair<NetAddress, NetAddress>;  // (client, vip:port)

    const ConnectionEntry* tracked(const SimPacket& packet) const;
    void deny(std::uint64_t now_ms, const SimPacket& packet, MtdDenyReason reason);
    bool referenced(Ipv4 vip) const;
    void release_unreferenced();
    std::uint16_t allocate_nat_port();

    MtdConfig config_;
    std::vector<Ipv4> protected_;
    std::set<Ipv4> reals_;
    std::set<Ipv4> pool_;
    DeterministicRng rng_;

    std::uint64_t epoch_ = 0;
    std::set<Ipv4> available_;
    std::map<Ipv4, AddressMapping> r2v_;   // real -> current mapping
    std::map<Ipv4, Ipv4> v2r_;             // current vip -> real
    std::set<Ipv4> held_;                  // retired vIPs kept for tracked flows
    std::set<Ipv4> ever_issued_;

    std::map<FlowKey, ConnectionEntry> connections_;
    std::map<NetAddress, FlowKey> by_nat_;
    std::uint16_t next_nat_port_;

    std::vector<MutationRecord> mutations_;
    std::vector<DenialRecord> denials_;
};

} // namespace sdpmtd
