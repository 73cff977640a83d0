#pragma once

// Deterministic discrete-event simulation of the SDP + MTD stack (or the
// static-perimeter baseline) on a scenario topology. Events run in
// (fire_at_ms, sequence_no) order; nothing reads wall-clock time and all
// randomness comes from streams derived from the scenario seed.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdpmtd/scenario.hpp"

namespace sdpmtd {

struct ScanReport {
    std::uint16_t port_lo = 0;
    std::uint16_t port_hi = 0;
    std::uint64_t window_ms = 0;
    std::vector<std::uint16_t> open_ports;

    std::size_t ports_scanned() const { return static_cast<std::size_t>(port_hi - port_lo) + 1; }
};

enum class ProbeResult { Refused, Accepted };

struct FlowStats {
    std::string name;
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
    std::uint64_t replies = 0;
    std::uint64_t payload_bytes = 0;
    std::vector<std::uint64_t> latency_ms;
    std::optional<std::uint64_t> granted_at_ms;

    double mean_latency_ms() const;
};

struct Metrics {
    // packet accounting for packets originated by clients and attackers
    std::uint64_t packets_injected = 0;
    std::uint64_t delivered_to_service = 0;
    std::uint64_t dropped_at_gateway = 0;
    std::uint64_t dropped_at_mtd = 0;
    std::uint64_t rejected_at_service = 0;
    std::uint64_t queue_overflow = 0;
    std::uint64_t spa_escalated = 0;
    std::uint64_t dropped_unroutable = 0;
    // reached a client or the controller as a non-reply; nothing serves it
    std::uint64_t terminated_at_host = 0;
    std::uint64_t in_flight_at_end = 0;

    std::uint64_t attack_packets_injected = 0;
    std::uint64_t attack_packets_at_service = 0;
    std::uint64_t attack_packets_accepted = 0;

    std::uint64_t grants = 0;
    std::uint64_t denials = 0;
    std::map<std::string, std::uint64_t> denials_by_reason;
    std::map<std::string, std::uint64_t> spa_drops_by_reason;
    std::uint64_t spa_accepts = 0;
    std::uint64_t rules_installed = 0;
    std::uint64_t rules_removed = 0;
    std::uint64_t controller_non_gateway_packets = 0;

    std::uint64_t replies_sent = 0;
    std::uint64_t replies_delivered = 0;
    std::uint64_t replies_dropped = 0;

    std::uint64_t mutations = 0;
    std::uint64_t mtd_epoch = 0;
    std::uint64_t mtd_denials = 0;

    std::vector<FlowStats> flows;
    std::optional<ScanReport> scan;
    std::optional<ProbeResult> probe;

    std::uint64_t sim_duration_ms = 0;

    std::uint64_t legit_sent() const;
    std::uint64_t legit_delivered() const;
    double legit_mean_latency_ms() const;
    /// Legit payload bytes delivered per simulated second.
    double goodput_bytes_per_s() const;
    std::size_t ports_open() const { return scan ? scan->open_ports.size() : 0; }

    /// Conservation: every injected packet accounted exactly once.
    bool conserved() const;

    /// Stable `(metric, value)` rows for CSV output.
    std::vector<std::pair<std::string, std::string>> rows() const;
};

struct TraceLine {
    std::uint64_t seq = 0;
    std::uint64_t ts_ms = 0;
    std::string node;
    std::string action;
    std::string detail;

    /// `seq,ts_ms,node,action,detail`
    std::string to_line() const;
};

struct SimResult {
    Metrics metrics;
    std::vector<TraceLine> trace;
    std::vector<std::string> decision_log;
    std::vector<std::string> gateway_audit;
    std::vector<std::string> mutation_log;
    std::vector<std::string> denial_log;

    std::string trace_text() const;
};

/// Throws InvalidScenario when the config does not validate.
SimResult run_scenario(const ScenarioConfig& scenario, std::uint64_t seed);

/// Uses the scenario's own seed.
SimResult run_scenario(const ScenarioConfig& scenario);

} // namespace sdpmtd
