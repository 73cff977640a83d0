#pragma once

// Scenario runner: wraps run_scenario with the built-in checks, scenario
// expectations and derived comparisons, and writes the CSV report.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdpmtd/scenario.hpp"
#include "sdpmtd/simulator.hpp"

namespace sdpmtd {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    std::string cites;
};

struct Report {
    std::string scenario;
    Mode mode = Mode::Sdp;
    std::uint64_t seed = 0;
    Metrics metrics;
    std::vector<std::pair<std::string, std::string>> derived;
    std::vector<CheckResult> checks;
    std::string trace;

    bool passed() const;
    /// Metric rows followed by derived rows; this is the CSV body order.
    std::vector<std::pair<std::string, std::string>> rows() const;
    /// Numeric lookup over rows(); nullopt for missing or non-numeric values.
    std::optional<double> value(const std::string& metric) const;
};

/// Piecewise-constant arrival stream at a single server.
struct ArrivalSegment {
    double start_ms = 0;
    double end_ms = 0;
    double rate_pps = 0;
};

/// Fluid backlog (packets) at time t for a deterministic server of rate
/// `service_pps` fed by the given segments, starting empty at time 0.
double fluid_backlog(const std::vector<ArrivalSegment>& arrivals, double service_pps, double t_ms);

/// Mean queueing delay (ms) seen by packets arriving at `sample_times_ms`.
double fluid_mean_wait_ms(const std::vector<ArrivalSegment>& arrivals, double service_pps,
                          const std::vector<double>& sample_times_ms);

/// Runs the scenario (and a no-attack twin for DoS scenarios). Throws
/// InvalidScenario.
Report run(const ScenarioConfig& config, std::optional<std::uint64_t> seed = std::nullopt);

/// `scenario,mode,seed,metric,value` rows with a header line.
std::string format_csv(const Report& report);

/// Throws IoError.
void emit_csv(const Report& report, const std::string& path);

/// Throws IoError.
void write_text(const std::string& path, const std::string& text);

} // namespace sdpmtd
