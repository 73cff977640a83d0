#include "sdpmtd/net.hpp"

#include <charconv>

namespace sdpmtd {

std::string ip_to_string(Ipv4 ip) {
    return std::to_string((ip >> 24) & 0xff) + '.' + std::to_string((ip >> 16) & 0xff) + '.' +
           std::to_string((ip >> 8) & 0xff) + '.' + std::to_string(ip & 0xff);
}

std::string NetAddress::to_string() const {
    return ip_to_string(ip) + ':' + std::to_string(port);
}

std::optional<Ipv4> parse_ip(std::string_view text) {
    Ipv4 value = 0;
    for (int octet = 0; octet < 4; ++octet) {
        unsigned part = 0;
        auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), part);
        if (ec != std::errc{} || part > 255 || ptr == text.data()) {
            return std::nullopt;
        }
        value = (value << 8) | part;
        text.remove_prefix(static_cast<std::size_t>(ptr - text.data()));
        if (octet < 3) {
            if (text.empty() || text.front() != '.') {
                return std::nullopt;
            }
            text.remove_prefix(1);
        }
    }
    if (!text.empty()) {
        return std::nullopt;
    }
    return value;
}

std::optional<HostId> HostId::from_name(std::string_view name) {
    if (name.empty() || name.size() > 16) {
        return std::nullopt;
    }
    HostId id;
    for (std::size_t i = 0; i < name.size(); ++i) {
        id.bytes[i] = static_cast<std::uint8_t>(name[i]);
    }
    return id;
}

std::string HostId::hex() const {
    return to_hex(bytes);
}

std::string HostId::name() const {
    std::string out;
    for (auto b : bytes) {
        if (b == 0) {
            break;
        }
        out.push_back(static_cast<char>(b));
    }
    return out;
}

std::string_view to_string(HostRole role) {
    switch (role) {
    case HostRole::InitiatingHost: return "initiating";
    case HostRole::AcceptingHost: return "accepting";
    case HostRole::Controller: return "controller";
    case HostRole::Service: return "service";
    }
    return "unknown";
}

std::optional<HostRole> parse_role(std::string_view text) {
    if (text == "initiating") return HostRole::InitiatingHost;
    if (text == "accepting") return HostRole::AcceptingHost;
    if (text == "controller") return HostRole::Controller;
    if (text == "service") return HostRole::Service;
    return std::nullopt;
}

std::string to_hex(const std::uint8_t* data, std::size_t size) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(size * 2);
    for (std::size_t i = 0; i < size; ++i) {
        out.push_back(kDigits[data[i] >> 4]);
        out.push_back(kDigits[data[i] & 0x0f]);
    }
    return out;
}

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

std::optional<std::vector<std::uint8_t>> from_hex(std::string_view text) {
    if (text.size() % 2 != 0) {
        return std::nullopt;
    }
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 2);
    for (std::size_t i = 0; i < text.size(); i += 2) {
        int hi = hex_value(text[i]);
        int lo = hex_value(text[i + 1]);
        if (hi < 0 || lo < 0) {
            return std::nullopt;
        }
        out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
    }
    return out;
}

} // namespace sdpmtd
