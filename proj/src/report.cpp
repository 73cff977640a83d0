#include "sdpmtd/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "sdpmtd/error.hpp"

namespace sdpmtd {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

bool compare(double lhs, CompareOp op, double rhs) {
    switch (op) {
    case CompareOp::Eq: return lhs == rhs;
    case CompareOp::Le: return lhs <= rhs;
    case CompareOp::Ge: return lhs >= rhs;
    case CompareOp::Lt: return lhs < rhs;
    case CompareOp::Gt: return lhs > rhs;
    }
    return false;
}

std::string_view op_text(CompareOp op) {
    switch (op) {
    case CompareOp::Eq: return "==";
    case CompareOp::Le: return "<=";
    case CompareOp::Ge: return ">=";
    case CompareOp::Lt: return "<";
    case CompareOp::Gt: return ">";
    }
    return "?";
}

std::uint64_t path_latency(const Topology& topo, const std::string& from, const std::string& to) {
    auto a = topo.find(from);
    auto b = topo.find(to);
    if (!a || !b) return 0;
    auto r = topo.route(*a, *b);
    return r ? r->latency_ms : 0;
}

struct DosModel {
    std::vector<ArrivalSegment> arrivals;
    std::vector<double> samples;
    double service_pps = 0;
};

/// Arrival stream at the server the flood would hit, as the configuration
/// describes it. Legit data start times come from the measured grant times.
DosModel dos_model(const ScenarioConfig& cfg, const Metrics& twin) {
    DosModel m;
    m.service_pps = cfg.service_model.capacity_pps;
    const auto& a = cfg.attack;
    const bool baseline = cfg.mode == Mode::Baseline;
    const std::string server = cfg.baseline.server;

    const bool flood_reaches = baseline && a.target == cfg.entry_gateway && a.port == cfg.baseline.open_port;
    if (flood_reaches && a.rate_pps > 0) {
        double start = static_cast<double>(a.start_ms + path_latency(cfg.topology, a.attacker, server));
        double count = static_cast<double>(a.rate_pps * a.duration_ms / 1000);
        m.arrivals.push_back(ArrivalSegment{start, start + count * 1000.0 / static_cast<double>(a.rate_pps),
                                            static_cast<double>(a.rate_pps)});
    }
    for (std::size_t i = 0; i < cfg.flows.size(); ++i) {
        const auto& f = cfg.flows[i];
        const std::string target = baseline ? server : f.service;
        if (target != server || f.packets == 0 || f.interval_ms == 0) continue;
        std::uint64_t first = f.start_ms;
        if (!baseline && f.spa) {
            if (i >= twin.flows.size() || !twin.flows[i].granted_at_ms) continue;
            first = *twin.flows[i].granted_at_ms;
        }
        double arrive = static_cast<double>(first + path_latency(cfg.topology, f.client, target));
        double interval = static_cast<double>(f.interval_ms);
        m.arrivals.push_back(ArrivalSegment{arrive, arrive + f.packets * interval, 1000.0 / interval});
        for (std::uint32_t k = 0; k < f.packets; ++k) m.samples.push_back(arrive + k * interval);
    }
    return m;
}

} // namespace

bool Report::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::vector<std::pair<std::string, std::string>> Report::rows() const {
    auto r = metrics.rows();
    r.insert(r.end(), derived.begin(), derived.end());
    return r;
}

std::optional<double> Report::value(const std::string& metric) const {
    for (const auto& [k, v] : rows()) {
        if (k != metric) continue;
        char* end = nullptr;
        double d = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0') return std::nullopt;
        return d;
    }
    return std::nullopt;
}

double fluid_backlog(const std::vector<ArrivalSegment>& arrivals, double service_pps, double t_ms) {
    std::set<double> cuts{0.0, t_ms};
    for (const auto& s : arrivals) {
        if (s.start_ms > 0 && s.start_ms < t_ms) cuts.insert(s.start_ms);
        if (s.end_ms > 0 && s.end_ms < t_ms) cuts.insert(s.end_ms);
    }
    double backlog = 0;
    double prev = 0;
    for (double cut : cuts) {
        if (cut <= prev) continue;
        double lambda = 0;
        for (const auto& s : arrivals) {
            if (s.start_ms <= prev && prev < s.end_ms) lambda += s.rate_pps;
        }
        backlog = std::max(0.0, backlog + (lambda - service_pps) * (cut - prev) / 1000.0);
        prev = cut;
    }
    return backlog;
}

double fluid_mean_wait_ms(const std::vector<ArrivalSegment>& arrivals, double service_pps,
                          const std::vector<double>& sample_times_ms) {
    if (sample_times_ms.empty() || service_pps <= 0) return 0.0;
    double sum = 0;
    for (double t : sample_times_ms) sum += fluid_backlog(arrivals, service_pps, t) * 1000.0 / service_pps;
    return sum / static_cast<double>(sample_times_ms.size());
}

Report run(const ScenarioConfig& config, std::optional<std::uint64_t> seed) {
    if (!seed) seed = config.seed;
    if (!seed) throw Error(Errc::InvalidScenario, "scenario.seed is required");

    auto result = run_scenario(config, *seed);
    Report report;
    report.scenario = config.name;
    report.mode = config.mode;
    report.seed = *seed;
    report.metrics = result.metrics;
    report.trace = result.trace_text();
    const auto& m = report.metrics;

    report.checks.push_back(CheckResult{
        "conservation", m.conserved(),
        "injected=" + std::to_string(m.packets_injected) + " in_flight=" + std::to_string(m.in_flight_at_end),
        "invariant: every injected packet accounted exactly once"});
    if (config.mode == Mode::Sdp) {
        report.checks.push_back(CheckResult{"controller_shielding", m.controller_non_gateway_packets == 0,
                                            "non_gateway=" + std::to_string(m.controller_non_gateway_packets),
                                            "invariant: controller receives traffic only from gateways"});
    }

    if (config.attack.kind == AttackKind::Dos) {
        ScenarioConfig quiet = config;
        quiet.attack.kind = AttackKind::None;
        auto twin = run_scenario(quiet, *seed).metrics;
        double base = twin.legit_mean_latency_ms();
        double loaded = m.legit_mean_latency_ms();
        double increase = loaded - base;
        double pct = base > 0 ? 100.0 * increase / base : 0.0;
        double ratio = twin.goodput_bytes_per_s() > 0 ? m.goodput_bytes_per_s() / twin.goodput_bytes_per_s() : 0.0;
        auto model = dos_model(config, twin);
        double analytic = fluid_mean_wait_ms(model.arrivals, model.service_pps, model.samples);
        double err = analytic > 0 ? 100.0 * std::fabs(increase - analytic) / analytic : std::fabs(increase);
        std::uint64_t flood = config.attack.rate_pps * config.attack.duration_ms / 1000;

        report.derived = {{"noattack_latency_mean_ms", fmt(base)},
                          {"latency_increase_ms", fmt(increase)},
                          {"latency_increase_pct", fmt(pct)},
                          {"noattack_goodput_bytes_per_s", fmt(twin.goodput_bytes_per_s())},
                          {"goodput_ratio", fmt(ratio)},
                          {"flood_packets", std::to_string(flood)},
                          {"analytic_queue_delay_ms", fmt(analytic)},
                          {"analytic_delay_error_pct", fmt(err)}};
        if (config.mode == Mode::Sdp) {
            report.checks.push_back(CheckResult{"dos_latency_unchanged", std::fabs(pct) <= 1.0,
                                                "increase_pct=" + fmt(pct), "criterion: DoS isolation"});
            report.checks.push_back(CheckResult{"dos_flood_dropped_at_gateway", m.dropped_at_gateway == flood,
                                                "dropped=" + std::to_string(m.dropped_at_gateway) +
                                                    " flood=" + std::to_string(flood),
                                                "criterion: DoS isolation"});
        } else {
            report.checks.push_back(CheckResult{"dos_latency_matches_queueing", increase > 0 && err <= 5.0,
                                                "increase_ms=" + fmt(increase) + " analytic_ms=" + fmt(analytic) +
                                                    " error_pct=" + fmt(err),
                                                "criterion: DoS isolation"});
        }
    }

    for (const auto& e : config.expectations) {
        auto v = report.value(e.metric);
        std::string want = std::string(op_text(e.op)) + ' ' + fmt(e.value);
        CheckResult c;
        c.name = "expect." + e.metric;
        c.cites = e.cites.empty() ? "scenario expectation (line " + std::to_string(e.line) + ")" : e.cites;
        if (!v) {
            c.passed = false;
            c.detail = "metric missing; wanted " + want;
        } else {
            c.passed = compare(*v, e.op, e.value);
            c.detail = "got " + fmt(*v) + ", wanted " + want;
        }
        report.checks.push_back(std::move(c));
    }
    return report;
}

std::string format_csv(const Report& report) {
    std::string out = "scenario,mode,seed,metric,value\n";
    const std::string prefix =
        report.scenario + ',' + std::string(to_string(report.mode)) + ',' + std::to_string(report.seed) + ',';
    for (const auto& [k, v] : report.rows()) {
        out += prefix;
        out += k;
        out += ',';
        out += v;
        out += '\n';
    }
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::IoError, "cannot open " + path + " for writing");
    f << text;
    if (!f.flush()) throw Error(Errc::IoError, "write failed: " + path);
}

void emit_csv(const Report& report, const std::string& path) { write_text(path, format_csv(report)); }

} // namespace sdpmtd
