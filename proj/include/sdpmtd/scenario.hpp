#pragma once

// Scenario configuration: a line-oriented `section.key = value` text format.
// Blank lines and lines starting with '#' are ignored. See README.md for the
// full key list.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdpmtd/packet.hpp"
#include "sdpmtd/spa.hpp"
#include "sdpmtd/topology.hpp"

namespace sdpmtd {

enum class Mode { Sdp, Baseline };

std::string_view to_string(Mode mode);
std::optional<Mode> parse_mode(std::string_view text);

enum class AttackKind { None, Scan, Dos, Replay, Probe };

std::string_view to_string(AttackKind kind);

struct AttackSpec {
    AttackKind kind = AttackKind::None;
    std::string attacker = "attacker";
    std::string target = "gateway1";
    std::uint64_t start_ms = 0;
    // scan
    std::uint16_t port_lo = 0;
    std::uint16_t port_hi = 999;
    std::uint64_t interval_ms = 1;
    // dos / probe
    std::uint16_t port = 22;
    std::uint64_t rate_pps = 0;
    std::uint64_t duration_ms = 0;
    PacketKind flood_kind = PacketKind::Data;
    std::uint32_t payload = 64;
    // replay
    std::string victim_flow;
    std::uint64_t delay_ms = 0;
    std::optional<std::uint32_t> tamper_bit;
};

struct FlowSpec {
    std::string name;
    std::string client;
    std::string service;
    bool spa = true;
    std::uint64_t start_ms = 0;
    std::uint32_t packets = 0;
    std::uint64_t interval_ms = 1;
    std::uint32_t payload = 1000;
};

/// Clients reach `service` through `gateway:listen_port`; the gateway
/// forwards to the service's real address on `service_port`.
struct ServiceExposure {
    std::string service;
    std::string gateway;
    std::uint16_t listen_port = 0;
    std::uint16_t service_port = 0;
};

enum class CompareOp { Eq, Le, Ge, Lt, Gt };

struct Expectation {
    std::string metric;
    CompareOp op = CompareOp::Eq;
    double value = 0;
    std::string cites;
    std::size_t line = 0;
};

struct MtdSettings {
    bool enabled = false;
    std::uint64_t lifespan_ms = 10000;
    std::uint64_t idle_timeout_ms = 60000;
    std::uint64_t gc_interval_ms = 1000;
    std::vector<Ipv4> pool;
};

struct BaselineSettings {
    std::uint16_t open_port = 22;
    std::string server = "amf_smf";
    std::uint64_t password_tag = 0x5eed;
};

struct ServiceModel {
    std::uint32_t capacity_pps = 1000;
    std::uint32_t queue_len = 1000;

    std::uint64_t service_ms() const { return 1000 / capacity_pps; }
};

struct ScenarioConfig {
    std::string name;
    Mode mode = Mode::Sdp;
    std::optional<std::uint64_t> seed;
    std::uint64_t duration_ms = 10000;

    Topology topology = Topology::fig1();
    std::string topology_source = "fig1";

    std::map<std::string, HmacKey> keys;
    std::map<std::string, std::vector<std::string>> policy;
    std::vector<ServiceExposure> services;

    std::uint64_t t_ms = 30000;
    std::uint64_t freshness_ms = kDefaultFreshnessMs;
    std::uint16_t spa_port = 62201;
    std::string entry_gateway = "gateway1";

    MtdSettings mtd;
    BaselineSettings baseline;
    ServiceModel service_model;
    std::vector<FlowSpec> flows;
    AttackSpec attack;
    std::vector<Expectation> expectations;

    /// Strict validation. Throws ValidationError naming the field.
    void validate() const;
};

/// Throws ParseError (with line number) or ValidationError.
ScenarioConfig parse_scenario(std::string_view text);

/// Throws IoError, ParseError or ValidationError.
ScenarioConfig load_scenario(const std::string& path);

} // namespace sdpmtd
