#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sdpmtd {

using Ipv4 = std::uint32_t;

/// Simulation-scoped endpoint: IPv4-style address plus port.
struct NetAddress {
    Ipv4 ip = 0;
    std::uint16_t port = 0;

    auto operator<=>(const NetAddress&) const = default;

    NetAddress with_port(std::uint16_t p) const { return NetAddress{ip, p}; }
    std::string to_string() const;
};

std::string ip_to_string(Ipv4 ip);
std::optional<Ipv4> parse_ip(std::string_view text);

/// Opaque 16-byte host identifier. Built from a short name by zero padding so
/// hex dumps stay readable.
struct HostId {
    std::array<std::uint8_t, 16> bytes{};

    auto operator<=>(const HostId&) const = default;

    static std::optional<HostId> from_name(std::string_view name);
    std::string hex() const;
    std::string name() const;
};

enum class HostRole { InitiatingHost, AcceptingHost, Controller, Service };

std::string_view to_string(HostRole role);
std::optional<HostRole> parse_role(std::string_view text);

struct HostIdentity {
    HostId host_id;
    HostRole role = HostRole::InitiatingHost;
    NetAddress real_address;
};

std::string to_hex(const std::uint8_t* data, std::size_t size);

template <std::size_t N>
std::string to_hex(const std::array<std::uint8_t, N>& bytes) {
    return to_hex(bytes.data(), N);
}

/// Decodes an even-length hex string; nullopt on bad digits or odd length.
std::optional<std::vector<std::uint8_t>> from_hex(std::string_view text);

} // namespace sdpmtd

template <>
struct std::hash<sdpmtd::NetAddress> {
    std::size_t operator()(const sdpmtd::NetAddress& a) const noexcept {
        return std::hash<std::uint64_t>{}((std::uint64_t{a.ip} << 16) | a.port);
    }
};
