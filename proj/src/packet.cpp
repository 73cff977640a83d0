#include "sdpmtd/packet.hpp"

namespace sdpmtd {

std::string_view to_string(PacketKind kind) {
    switch (kind) {
    case PacketKind::Spa: return "spa";
    case PacketKind::Syn: return "syn";
    case PacketKind::Data: return "data";
    case PacketKind::Reply: return "reply";
    }
    return "unknown";
}

std::string SimPacket::describe() const {
    std::string out = "#" + std::to_string(packet_id) + ' ' + std::string(to_string(kind)) + ' ' + src.to_string() +
                      "->" + dst.to_string();
    if (kind == PacketKind::Data || kind == PacketKind::Reply) {
        out += " flow=" + std::to_string(flow_id) + " len=" + std::to_string(payload_len);
    }
    return out;
}

} // namespace sdpmtd
