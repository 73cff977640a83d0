#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sdpmtd/net.hpp"

namespace sdpmtd {

enum class PacketKind { Spa, Syn, Data, Reply };

std::string_view to_string(PacketKind kind);

/// Unit of traffic moved by the simulator and inspected by gateways.
/// `dst.port` is the destination port.
struct SimPacket {
    std::uint64_t packet_id = 0;
    NetAddress src;
    NetAddress dst;
    PacketKind kind = PacketKind::Data;
    std::vector<std::uint8_t> spa;   // Spa only
    std::uint64_t flow_id = 0;       // Data / Reply
    std::uint32_t payload_len = 0;   // Data / Reply
    std::uint64_t auth_tag = 0;      // in-band password tag checked by the baseline service
    std::uint64_t created_at_ms = 0;

    bool operator==(const SimPacket&) const = default;

    std::string describe() const;
};

} // namespace sdpmtd
