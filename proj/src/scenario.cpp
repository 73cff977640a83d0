#include "sdpmtd/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "sdpmtd/error.hpp"

namespace sdpmtd {

std::string_view to_string(Mode mode) {
    return mode == Mode::Sdp ? "sdp" : "baseline";
}

std::optional<Mode> parse_mode(std::string_view text) {
    if (text == "sdp") return Mode::Sdp;
    if (text == "baseline") return Mode::Baseline;
    return std::nullopt;
}

std::string_view to_string(AttackKind kind) {
    switch (kind) {
    case AttackKind::None: return "none";
    case AttackKind::Scan: return "scan";
    case AttackKind::Dos: return "dos";
    case AttackKind::Replay: return "replay";
    case AttackKind::Probe: return "probe";
    }
    return "unknown";
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto end = s.find(sep, start);
        if (end == std::string_view::npos) end = s.size();
        auto piece = trim(s.substr(start, end - start));
        if (!piece.empty()) out.emplace_back(piece);
        start = end + 1;
    }
    return out;
}

std::vector<std::string> words(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

class Parser {
public:
    explicit Parser(ScenarioConfig& cfg) : cfg_(cfg) {}

    void line(std::size_t number, std::string_view raw) {
        line_ = number;
        auto text = trim(raw);
        if (text.empty() || text.front() == '#') {
            return;
        }
        auto eq = text.find('=');
        if (eq == std::string_view::npos) {
            fail("expected 'key = value'");
        }
        key_ = std::string(trim(text.substr(0, eq)));
        auto value = trim(text.substr(eq + 1));
        if (key_.empty()) {
            fail("empty key");
        }
        static const std::set<std::string> kRepeatable = {"topology.node", "topology.link", "topology.protect",
                                                          "topology.latency"};
        if (!kRepeatable.contains(key_) && !seen_.insert(key_).second) {
            fail("duplicate key");
        }
        dispatch(value);
    }

    void finish() {
        for (auto& [name, flow] : flows_) {
            flow.name = name;
            cfg_.flows.push_back(flow);
        }
        if (inline_topology_) {
            for (const auto& n : nodes_) {
                line_ = n.line;
                key_ = "topology.node";
                auto role = parse_role(n.role);
                auto ip = parse_ip(n.ip);
                if (!role || !ip) fail("expected '<name> <role> <ip>'");
                guarded([&] { cfg_.topology.add_node(n.name, *role, *ip); });
            }
            for (const auto& l : links_) {
                line_ = l.line;
                key_ = "topology.link";
                auto label = parse_link_label(l.label);
                if (!label) fail("unknown link label '" + l.label + "'");
                guarded([&] { cfg_.topology.add_link(l.a, l.b, l.latency, *label); });
            }
        } else if (!nodes_.empty() || !links_.empty()) {
            line_ = !nodes_.empty() ? nodes_.front().line : links_.front().line;
            key_ = !nodes_.empty() ? "topology.node" : "topology.link";
            fail("node/link lines need topology.preset = inline");
        }
        for (const auto& p : protects_) {
            line_ = p.line;
            key_ = "topology.protect";
            guarded([&] { cfg_.topology.protect(p.name); });
        }
        for (const auto& o : latencies_) {
            line_ = o.line;
            key_ = "topology.latency";
            guarded([&] { cfg_.topology.set_latency(o.a, o.b, o.latency); });
        }
    }

private:
    struct NodeLine { std::size_t line; std::string name, role, ip; };
    struct LinkLine { std::size_t line; std::string a, b; std::uint64_t latency; std::string label; };
    struct ProtectLine { std::size_t line; std::string name; };
    struct LatencyLine { std::size_t line; std::string a, b; std::uint64_t latency; };

    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(Errc::ParseError, "line " + std::to_string(line_) + " (" + key_ + "): " + msg);
    }

    template <typename F>
    void guarded(F&& f) {
        try {
            f();
        } catch (const Error& e) {
            throw Error(Errc::ValidationError, "line " + std::to_string(line_) + " (" + key_ + "): " + e.what());
        }
    }

    template <typename T>
    T number(std::string_view v) const {
        T out{};
        int base = 10;
        if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
            v.remove_prefix(2);
            base = 16;
        }
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out, base);
        if (ec != std::errc{} || ptr != v.data() + v.size()) {
            fail("expected an integer, got '" + std::string(v) + "'");
        }
        return out;
    }

    bool boolean(std::string_view v) const {
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        fail("expected a boolean");
    }

    std::pair<std::uint64_t, std::uint64_t> range(std::string_view v) const {
        auto dash = v.find('-');
        if (dash == std::string_view::npos) fail("expected 'lo-hi'");
        return {number<std::uint64_t>(trim(v.substr(0, dash))), number<std::uint64_t>(trim(v.substr(dash + 1)))};
    }

    std::uint16_t port(std::string_view v) const {
        auto p = number<std::uint64_t>(v);
        if (p > 65535) fail("port out of range");
        return static_cast<std::uint16_t>(p);
    }

    void dispatch(std::string_view v) {
        auto parts = split(key_, '.');
        const std::string& section = parts.front();
        const std::string sub = parts.size() > 1 ? parts[1] : "";
        if (section == "scenario" && parts.size() == 2) return scenario(sub, v);
        if (section == "topology") return topology(sub, v);
        if (section == "keys" && parts.size() == 2) return key(sub, v);
        if (section == "policy" && parts.size() == 2) {
            cfg_.policy[sub] = split(v, ',');
            return;
        }
        if (section == "service" && parts.size() == 2) return service(sub, v);
        if (section == "sdp" && parts.size() == 2) return sdp(sub, v);
        if (section == "mtd" && parts.size() == 2) return mtd(sub, v);
        if (section == "baseline" && parts.size() == 2) return baseline(sub, v);
        if (section == "service_model" && parts.size() == 2) return service_model(sub, v);
        if (section == "flow" && parts.size() == 3) return flow(flows_[sub], parts[2], v);
        if (section == "attack" && parts.size() == 2) return attack(sub, v);
        if (section == "expect" && parts.size() == 2) return expect(sub, v);
        fail("unknown key");
    }

    void scenario(const std::string& k, std::string_view v) {
        if (k == "name") cfg_.name = std::string(v);
        else if (k == "mode") {
            auto m = parse_mode(v);
            if (!m) fail("mode must be sdp or baseline");
            cfg_.mode = *m;
        } else if (k == "seed") cfg_.seed = number<std::uint64_t>(v);
        else if (k == "duration_ms") cfg_.duration_ms = number<std::uint64_t>(v);
        else fail("unknown key");
    }

    void topology(const std::string& k, std::string_view v) {
        auto w = words(v);
        if (k == "preset") {
            if (v == "fig1") {
                cfg_.topology = Topology::fig1();
                inline_topology_ = false;
            } else if (v == "inline") {
                cfg_.topology = Topology{};
                inline_topology_ = true;
            } else {
                fail("preset must be fig1 or inline");
            }
            cfg_.topology_source = std::string(v);
        } else if (k == "node") {
            if (w.size() != 3) fail("expected '<name> <role> <ip>'");
            nodes_.push_back({line_, w[0], w[1], w[2]});
        } else if (k == "link") {
            if (w.size() != 4) fail("expected '<a> <b> <latency_ms> <label>'");
            links_.push_back({line_, w[0], w[1], number<std::uint64_t>(w[2]), w[3]});
        } else if (k == "protect") {
            for (const auto& n : split(v, ',')) protects_.push_back({line_, n});
        } else if (k == "latency") {
            if (w.size() != 3) fail("expected '<a> <b> <latency_ms>'");
            latencies_.push_back({line_, w[0], w[1], number<std::uint64_t>(w[2])});
        } else {
            fail("unknown key");
        }
    }

    void key(const std::string& host, std::string_view v) {
        auto bytes = from_hex(v);
        if (!bytes || bytes->size() != kHmacKeySize) fail("key must be 64 hex digits");
        HmacKey k{};
        std::copy(bytes->begin(), bytes->end(), k.begin());
        cfg_.keys[host] = k;
    }

    void service(const std::string& name, std::string_view v) {
        auto w = words(v);
        if (w.size() != 3) fail("expected '<gateway> <listen_port> <service_port>'");
        cfg_.services.push_back(ServiceExposure{name, w[0], port(w[1]), port(w[2])});
    }

    void sdp(const std::string& k, std::string_view v) {
        if (k == "t_ms") cfg_.t_ms = number<std::uint64_t>(v);
        else if (k == "freshness_ms") cfg_.freshness_ms = number<std::uint64_t>(v);
        else if (k == "spa_port") cfg_.spa_port = port(v);
        else if (k == "entry_gateway") cfg_.entry_gateway = std::string(v);
        else fail("unknown key");
    }

    void mtd(const std::string& k, std::string_view v) {
        if (k == "enabled") cfg_.mtd.enabled = boolean(v);
        else if (k == "lifespan_ms") cfg_.mtd.lifespan_ms = number<std::uint64_t>(v);
        else if (k == "idle_timeout_ms") cfg_.mtd.idle_timeout_ms = number<std::uint64_t>(v);
        else if (k == "gc_interval_ms") cfg_.mtd.gc_interval_ms = number<std::uint64_t>(v);
        else if (k == "pool") {
            auto dash = v.find('-');
            if (dash == std::string_view::npos) fail("pool must be '<first_ip>-<last_ip>'");
            auto lo = parse_ip(trim(v.substr(0, dash)));
            auto hi = parse_ip(trim(v.substr(dash + 1)));
            if (!lo || !hi || *lo > *hi) fail("bad pool range");
            if (*hi - *lo >= 65536) fail("pool range larger than 65536 addresses");
            cfg_.mtd.pool.clear();
            for (Ipv4 ip = *lo;; ++ip) {
                cfg_.mtd.pool.push_back(ip);
                if (ip == *hi) break;
            }
        } else fail("unknown key");
    }

    void baseline(const std::string& k, std::string_view v) {
        if (k == "open_port") cfg_.baseline.open_port = port(v);
        else if (k == "server") cfg_.baseline.server = std::string(v);
        else if (k == "password_tag") cfg_.baseline.password_tag = number<std::uint64_t>(v);
        else fail("unknown key");
    }

    void service_model(const std::string& k, std::string_view v) {
        if (k == "capacity_pps") cfg_.service_model.capacity_pps = number<std::uint32_t>(v);
        else if (k == "queue_len") cfg_.service_model.queue_len = number<std::uint32_t>(v);
        else fail("unknown key");
    }

    void flow(FlowSpec& f, const std::string& k, std::string_view v) {
        if (k == "client") f.client = std::string(v);
        else if (k == "service") f.service = std::string(v);
        else if (k == "spa") f.spa = boolean(v);
        else if (k == "start_ms") f.start_ms = number<std::uint64_t>(v);
        else if (k == "packets") f.packets = number<std::uint32_t>(v);
        else if (k == "interval_ms") f.interval_ms = number<std::uint64_t>(v);
        else if (k == "payload") f.payload = number<std::uint32_t>(v);
        else fail("unknown key");
    }

    void attack(const std::string& k, std::string_view v) {
        auto& a = cfg_.attack;
        if (k == "kind") {
            bool found = false;
            for (auto kind : {AttackKind::None, AttackKind::Scan, AttackKind::Dos, AttackKind::Replay,
                              AttackKind::Probe}) {
                if (to_string(kind) == v) {
                    a.kind = kind;
                    found = true;
                }
            }
            if (!found) fail("kind must be none, scan, dos, replay or probe");
        } else if (k == "attacker") a.attacker = std::string(v);
        else if (k == "target") a.target = std::string(v);
        else if (k == "start_ms") a.start_ms = number<std::uint64_t>(v);
        else if (k == "ports") {
            auto [lo, hi] = range(v);
            if (hi > 65535 || lo > hi) fail("bad port range");
            a.port_lo = static_cast<std::uint16_t>(lo);
            a.port_hi = static_cast<std::uint16_t>(hi);
        } else if (k == "interval_ms") a.interval_ms = number<std::uint64_t>(v);
        else if (k == "port") a.port = port(v);
        else if (k == "rate_pps") a.rate_pps = number<std::uint64_t>(v);
        else if (k == "duration_ms") a.duration_ms = number<std::uint64_t>(v);
        else if (k == "flood") {
            if (v == "data") a.flood_kind = PacketKind::Data;
            else if (v == "syn") a.flood_kind = PacketKind::Syn;
            else fail("flood must be data or syn");
        } else if (k == "payload") a.payload = number<std::uint32_t>(v);
        else if (k == "victim") a.victim_flow = std::string(v);
        else if (k == "delay_ms") a.delay_ms = number<std::uint64_t>(v);
        else if (k == "tamper_bit") a.tamper_bit = number<std::uint32_t>(v);
        else fail("unknown key");
    }

    void expect(const std::string& metric, std::string_view v) {
        Expectation e;
        e.metric = metric;
        e.line = line_;
        if (auto semi = v.find(';'); semi != std::string_view::npos) {
            e.cites = std::string(trim(v.substr(semi + 1)));
            v = trim(v.substr(0, semi));
        }
        static const std::pair<std::string_view, CompareOp> kOps[] = {
            {"==", CompareOp::Eq}, {"<=", CompareOp::Le}, {">=", CompareOp::Ge},
            {"<", CompareOp::Lt},  {">", CompareOp::Gt},
        };
        for (auto [text, op] : kOps) {
            if (v.substr(0, text.size()) == text) {
                e.op = op;
                v = trim(v.substr(text.size()));
                break;
            }
        }
        try {
            std::size_t used = 0;
            e.value = std::stod(std::string(v), &used);
            if (used != v.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            fail("expected '[op] number [; citation]'");
        }
        cfg_.expectations.push_back(e);
    }

    ScenarioConfig& cfg_;
    std::size_t line_ = 0;
    std::string key_;
    std::set<std::string> seen_;
    std::map<std::string, FlowSpec> flows_;
    bool inline_topology_ = false;
    std::vector<NodeLine> nodes_;
    std::vector<LinkLine> links_;
    std::vector<ProtectLine> protects_;
    std::vector<LatencyLine> latencies_;
};

[[noreturn]] void invalid(const std::string& msg) {
    throw Error(Errc::ValidationError, msg);
}

} // namespace

void ScenarioConfig::validate() const {
    if (name.empty()) invalid("scenario.name is required");
    if (!seed) invalid("scenario.seed is required");
    if (duration_ms == 0) invalid("scenario.duration_ms must be positive");
    topology.validate();

    auto require_node = [&](const std::string& field, const std::string& node_name,
                            std::optional<HostRole> role = std::nullopt) {
        auto idx = topology.find(node_name);
        if (!idx) invalid(field + ": unknown host '" + node_name + "'");
        if (role && topology.node(*idx).identity.role != *role) {
            invalid(field + ": host '" + node_name + "' must have role " + std::string(to_string(*role)));
        }
    };

    for (const auto& [host, key] : keys) require_node("keys." + host, host);
    for (const auto& [client, services] : policy) {
        require_node("policy." + client, client);
        for (const auto& s : services) require_node("policy." + client, s);
    }
    std::set<std::pair<std::string, std::uint16_t>> listen;
    for (const auto& s : services) {
        require_node("service." + s.service, s.service);
        require_node("service." + s.service, s.gateway, HostRole::AcceptingHost);
        if (!listen.insert({s.gateway, s.listen_port}).second) {
            invalid("service." + s.service + ": listen port " + std::to_string(s.listen_port) + " reused on " +
                    s.gateway);
        }
    }
    require_node("sdp.entry_gateway", entry_gateway, HostRole::AcceptingHost);
    if (t_ms == 0) invalid("sdp.t_ms must be positive");
    require_node("baseline.server", baseline.server);

    if (service_model.capacity_pps == 0 || 1000 % service_model.capacity_pps != 0) {
        invalid("service_model.capacity_pps must divide 1000 (integral service time in ms)");
    }
    if (service_model.queue_len == 0) invalid("service_model.queue_len must be positive");

    if (mtd.enabled) {
        if (mtd.pool.empty()) invalid("mtd.pool is required when mtd.enabled");
        if (mtd.lifespan_ms == 0) invalid("mtd.lifespan_ms must be positive");
        if (mtd.gc_interval_ms == 0) invalid("mtd.gc_interval_ms must be positive");
        auto entry = topology.find(entry_gateway);
        auto& prot = topology.protected_set();
        if (std::find(prot.begin(), prot.end(), *entry) == prot.end()) {
            invalid("mtd: entry gateway '" + entry_gateway + "' must be protected");
        }
    }
    for (auto ip : mtd.pool) {
        if (topology.node_by_ip(ip)) {
            invalid("mtd.pool overlaps host address " + ip_to_string(ip));
        }
    }

    for (const auto& f : flows) {
        const std::string field = "flow." + f.name;
        require_node(field + ".client", f.client);
        require_node(field + ".service", f.service);
        if (f.packets > 0 && f.interval_ms == 0) invalid(field + ".interval_ms must be positive");
        bool exposed = std::any_of(services.begin(), services.end(),
                                   [&](const ServiceExposure& s) { return s.service == f.service; });
        if (!exposed) invalid(field + ": service '" + f.service + "' has no service.* exposure");
    }

    if (attack.kind != AttackKind::None) {
        require_node("attack.attacker", attack.attacker);
        require_node("attack.target", attack.target);
        if (attack.kind == AttackKind::Scan && attack.interval_ms == 0) invalid("attack.interval_ms must be positive");
        if (attack.kind == AttackKind::Replay) {
            bool found = std::any_of(flows.begin(), flows.end(),
                                     [&](const FlowSpec& f) { return f.name == attack.victim_flow; });
            if (!found) invalid("attack.victim: unknown flow '" + attack.victim_flow + "'");
        }
    }
}

ScenarioConfig parse_scenario(std::string_view text) {
    ScenarioConfig cfg;
    Parser parser(cfg);
    std::size_t number = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        parser.line(++number, text.substr(start, end - start));
        start = end + 1;
    }
    parser.finish();
    cfg.validate();
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::IoError, "cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

} // namespace sdpmtd
