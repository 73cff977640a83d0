#include "sdpmtd/simulator.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <queue>
#include <variant>

#include "sdpmtd/controller.hpp"
#include "sdpmtd/error.hpp"
#include "sdpmtd/gateway.hpp"
#include "sdpmtd/mtd.hpp"

namespace sdpmtd {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr std::uint16_t kClientPortBase = 40000;
constexpr std::uint16_t kAttackerScanPort = 50000;
constexpr std::uint16_t kAttackerFloodPort = 50001;
constexpr std::uint16_t kAttackerReplayPort = 50002;
constexpr std::uint16_t kAttackerProbePort = 50003;
constexpr std::uint64_t kScanFlowBase = 1ull << 32;
constexpr std::uint64_t kProbeFlowBase = 1ull << 33;

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : label) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001b3ull;
    }
    return seed ^ h;
}

enum class Source { Legit, Attack, Internal };

struct Tracked {
    SimPacket packet;
    Source source = Source::Internal;
    std::size_t flow = kNone;
    bool injected = false;
    std::size_t origin = kNone;
};

enum class Stage { Ingress, Arrive };

struct DeliverEv {
    Tracked t;
    std::size_t node;
    Stage stage;
};

enum class TimerTag { Mutate, Gc, ExpireRules, ServiceDone };

struct TimerEv {
    std::size_t owner;
    TimerTag tag;
    std::optional<Tracked> t;
};

enum class InjectStep { FlowStart, FlowPacket, ScanProbe, FloodPacket, ProbeSyn, ProbeData, Replay };

struct InjectEv {
    InjectStep step;
    std::size_t index = 0;
    std::uint64_t k = 0;
};

struct SpaToController {
    SpaPacket spa;
    std::size_t gateway;
    NetAddress client_address;
};

struct DirectiveToGateway {
    AuthorizationDirective directive;
    std::size_t gateway;
};

struct CredentialToClient {
    CredentialUpdate update;
    std::size_t client;
};

struct ControlEv {
    std::variant<SpaToController, DirectiveToGateway, CredentialToClient> msg;
};

struct Event {
    std::uint64_t at = 0;
    std::uint64_t seq = 0;
    std::variant<DeliverEv, TimerEv, InjectEv, ControlEv> body;
};

struct EventOrder {
    bool operator()(const Event& a, const Event& b) const {
        return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
};

struct ServiceQueue {
    std::uint64_t busy_until = 0;
    std::deque<std::uint64_t> completions;
};

struct FlowRuntime {
    FlowSpec spec;
    std::size_t client = kNone;
    std::size_t gateway = kNone;
    std::uint16_t listen_port = 0;
    NetAddress src;
    NetAddress target;
    bool waiting_grant = false;
    bool started = false;
    std::optional<Tracked> captured;
};

class Engine {
public:
    Engine(const ScenarioConfig& cfg, std::uint64_t seed)
        : cfg_(cfg),
          topo_(cfg.topology),
          controller_(ControllerConfig{*HostId::from_name("controller"), cfg.t_ms, cfg.freshness_ms},
                      DeterministicRng(derive_seed(seed, "controller"))),
          client_rng_(derive_seed(seed, "clients")) {
        setup(seed);
    }

    SimResult run() {
        while (!queue_.empty() && queue_.top().at <= cfg_.duration_ms) {
            Event ev = queue_.top();
            queue_.pop();
            now_ = ev.at;
            std::visit([&](auto& body) { handle(body); }, ev.body);
        }
        return finish();
    }

private:
    // ---- setup -----------------------------------------------------------

    void setup(std::uint64_t seed) {
        for (std::size_t i = 0; i < topo_.nodes().size(); ++i) {
            if (topo_.node(i).identity.role == HostRole::Controller && controller_node_ == kNone) {
                controller_node_ = i;
            }
        }
        if (controller_node_ != kNone) {
            controller_ = Controller(
                ControllerConfig{topo_.node(controller_node_).identity.host_id, cfg_.t_ms, cfg_.freshness_ms},
                DeterministicRng(derive_seed(seed, "controller")));
        }

        // Credentials: configured keys first, the rest drawn from the seed.
        DeterministicRng key_rng(derive_seed(seed, "keys"));
        CredentialStore provisioned;
        for (std::size_t i = 0; i < topo_.nodes().size(); ++i) {
            const auto& node = topo_.node(i);
            if (node.identity.role == HostRole::Controller) continue;
            if (auto it = cfg_.keys.find(node.name); it != cfg_.keys.end()) {
                provisioned.insert(Credential{node.identity.host_id, it->second, 0});
            } else {
                provisioned.generate(node.identity.host_id, key_rng, 0);
            }
            controller_.register_host(node.identity, *provisioned.find(node.identity.host_id));
        }

        for (std::size_t i = 0; i < topo_.nodes().size(); ++i) {
            const auto& node = topo_.node(i);
            if (node.identity.role == HostRole::AcceptingHost) {
                gateways_.emplace(i, std::make_unique<Gateway>(
                                         GatewayConfig{node.identity.host_id, node.identity.real_address.ip,
                                                       cfg_.freshness_ms},
                                         controller_.credentials()));
            }
            if (node.identity.role == HostRole::Service) {
                services_.emplace(i, ServiceQueue{});
            }
        }

        for (const auto& s : cfg_.services) {
            auto svc = *topo_.find(s.service);
            auto gw = *topo_.find(s.gateway);
            controller_.bind_service(ServiceBinding{topo_.node(svc).identity.host_id, topo_.node(gw).identity.host_id,
                                                    s.listen_port,
                                                    topo_.node(svc).identity.real_address.with_port(s.service_port)});
        }
        for (const auto& [client, services] : cfg_.policy) {
            std::set<HostId> ids;
            for (const auto& s : services) ids.insert(topo_.node(*topo_.find(s)).identity.host_id);
            controller_.set_policy(topo_.node(*topo_.find(client)).identity.host_id, ids);
        }

        entry_gateway_ = *topo_.find(cfg_.entry_gateway);
        baseline_server_ = *topo_.find(cfg_.baseline.server);

        if (sdp() && cfg_.mtd.enabled) {
            MtdConfig mc;
            mc.pool = cfg_.mtd.pool;
            mc.lifespan_ms = cfg_.mtd.lifespan_ms;
            mc.idle_timeout_ms = cfg_.mtd.idle_timeout_ms;
            mc.gateway_real = topo_.node(entry_gateway_).identity.real_address.ip;
            mtd_.emplace(mc, scan_hosts(topo_), topo_.real_addresses(), DeterministicRng(derive_seed(seed, "mtd")));
            mt_node_ = entry_gateway_;
            schedule(0, TimerEv{mt_node_, TimerTag::Mutate, std::nullopt});
            schedule(cfg_.mtd.gc_interval_ms, TimerEv{mt_node_, TimerTag::Gc, std::nullopt});
        }

        for (std::size_t i = 0; i < cfg_.flows.size(); ++i) {
            FlowRuntime f;
            f.spec = cfg_.flows[i];
            f.client = *topo_.find(f.spec.client);
            f.src = topo_.node(f.client).identity.real_address.with_port(static_cast<std::uint16_t>(kClientPortBase + i));
            for (const auto& s : cfg_.services) {
                if (s.service == f.spec.service) {
                    f.gateway = *topo_.find(s.gateway);
                    f.listen_port = s.listen_port;
                    break;
                }
            }
            flows_.push_back(f);
            metrics_.flows.push_back(FlowStats{f.spec.name, 0, 0, 0, 0, {}, std::nullopt});
            schedule(f.spec.start_ms, InjectEv{InjectStep::FlowStart, i, 0});
        }

        const auto& a = cfg_.attack;
        if (a.kind != AttackKind::None) {
            attacker_ = *topo_.find(a.attacker);
            attack_target_ = *topo_.find(a.target);
        }
        switch (a.kind) {
        case AttackKind::Scan:
            scan_.emplace();
            scan_->port_lo = a.port_lo;
            scan_->port_hi = a.port_hi;
            scan_->window_ms = response_window();
            schedule(a.start_ms, InjectEv{InjectStep::ScanProbe, 0, 0});
            break;
        case AttackKind::Dos:
            if (flood_count() > 0) schedule(a.start_ms, InjectEv{InjectStep::FloodPacket, 0, 0});
            break;
        case AttackKind::Probe:
            schedule(a.start_ms, InjectEv{InjectStep::ProbeSyn, 0, 0});
            schedule(a.start_ms + 1, InjectEv{InjectStep::ProbeData, 0, 0});
            break;
        case AttackKind::Replay:
            for (std::size_t i = 0; i < flows_.size(); ++i) {
                if (flows_[i].spec.name == a.victim_flow) replay_victim_ = i;
            }
            break;
        case AttackKind::None: break;
        }
    }

    bool sdp() const { return cfg_.mode == Mode::Sdp; }

    std::uint64_t flood_count() const { return cfg_.attack.rate_pps * cfg_.attack.duration_ms / 1000; }

    /// Scanner timeout: twice a round-trip estimate covering the deepest node
    /// and one service time.
    std::uint64_t response_window() {
        std::uint64_t deepest = 0;
        for (std::size_t i = 0; i < topo_.nodes().size(); ++i) {
            if (auto r = route(attacker_, i)) deepest = std::max(deepest, r->latency_ms);
        }
        return 2 * (2 * deepest + cfg_.service_model.service_ms());
    }

    // ---- plumbing --------------------------------------------------------

    template <typename Body>
    void schedule(std::uint64_t at, Body body) {
        queue_.push(Event{at, next_seq_++, std::move(body)});
    }

    void log(std::size_t node, std::string action, std::string detail) {
        trace_.push_back(TraceLine{trace_.size(), now_, node == kNone ? std::string("-") : topo_.node(node).name,
                                   std::move(action), std::move(detail)});
    }

    const std::optional<Route>& route(std::size_t from, std::size_t to) {
        auto key = std::make_pair(from, to);
        auto it = routes_.find(key);
        if (it == routes_.end()) {
            it = routes_.emplace(key, topo_.route(from, to)).first;
        }
        return it->second;
    }

    std::uint64_t latency(std::size_t from, std::size_t to) {
        const auto& r = route(from, to);
        return r ? r->latency_ms : 0;
    }

    std::optional<std::size_t> owner(Ipv4 ip) const {
        if (auto n = topo_.node_by_ip(ip)) return n;
        if (mtd_ && mtd_->owns(ip)) return mt_node_;
        return std::nullopt;
    }

    HostRole role(std::size_t node) const { return topo_.node(node).identity.role; }

    bool enforcing(std::size_t node) const {
        return sdp() ? role(node) == HostRole::AcceptingHost : node == entry_gateway_;
    }

    bool intercepted(const Tracked& t) const {
        HostRole r = role(t.origin);
        if (r == HostRole::AcceptingHost || r == HostRole::Controller) return false;
        return !(t.packet.kind == PacketKind::Reply && r == HostRole::Service);
    }

    /// Address a client or attacker uses for `node` right now: its current
    /// vIP when the node is behind the MT-Gateway, otherwise its real IP.
    Ipv4 public_address(std::size_t node) const {
        Ipv4 real = topo_.node(node).identity.real_address.ip;
        if (mtd_) {
            if (auto vip = mtd_->current_vip(real)) return *vip;
        }
        return real;
    }

    std::uint64_t new_packet_id() { return next_packet_id_++; }

    void inject(Tracked t, std::size_t from) {
        t.injected = true;
        ++metrics_.packets_injected;
        if (t.source == Source::Attack) ++metrics_.attack_packets_injected;
        log(from, "send", t.packet.describe());
        send(std::move(t), from);
    }

    void count_drop(const Tracked& t, std::uint64_t Metrics::*bucket) {
        if (t.injected) {
            ++(metrics_.*bucket);
        } else if (t.packet.kind == PacketKind::Reply) {
            ++metrics_.replies_dropped;
        }
    }

    void send(Tracked t, std::size_t from) {
        t.origin = from;
        auto dest = owner(t.packet.dst.ip);
        const auto* r = dest ? &route(from, *dest) : nullptr;
        if (!dest || !r->has_value()) {
            log(from, "unroutable", t.packet.describe());
            count_drop(t, &Metrics::dropped_unroutable);
            return;
        }
        if (intercepted(t)) {
            std::uint64_t acc = 0;
            const auto& hops = (*r)->hops;
            for (std::size_t h = 1; h < hops.size(); ++h) {
                acc += latency(hops[h - 1], hops[h]);
                if (enforcing(hops[h])) {
                    schedule(now_ + acc, DeliverEv{std::move(t), hops[h], Stage::Ingress});
                    return;
                }
            }
        }
        schedule(now_ + (*r)->latency_ms, DeliverEv{std::move(t), *dest, Stage::Arrive});
    }

    // ---- event handlers --------------------------------------------------

    void handle(DeliverEv& ev) {
        if (ev.stage == Stage::Ingress) {
            if (sdp()) {
                sdp_ingress(ev.t, ev.node);
            } else {
                baseline_ingress(ev.t, ev.node);
            }
        } else {
            arrive(ev.t, ev.node);
        }
    }

    void sdp_ingress(Tracked& t, std::size_t gw) {
        SimPacket eval = t.packet;
        const bool at_mt = mtd_ && gw == mt_node_;
        if (at_mt) {
            auto resolved = mtd_->resolve_inbound(eval, now_);
            if (std::holds_alternative<MtdDenyReason>(resolved)) {
                auto action = mtd_->translate_inbound(eval, now_);
                log(gw, "mtd_deny",
                    t.packet.describe() + " reason=" + std::string(to_string(std::get<MtdDeny>(action).reason)));
                ++metrics_.mtd_denials;
                count_drop(t, &Metrics::dropped_at_mtd);
                return;
            }
            eval.dst.ip = std::get<Ipv4>(resolved);
        }

        auto action = gateways_.at(gw)->process_packet(eval, now_);
        if (auto* d = std::get_if<Drop>(&action)) {
            if (d->reason == DropReason::RuleExpired) log(gw, "remove_rule", "lazy src=" + t.packet.src.to_string());
            log(gw, "discard", t.packet.describe() + " reason=" + std::string(to_string(d->reason)));
            if (t.packet.kind == PacketKind::Spa) ++metrics_.spa_drops_by_reason[std::string(to_string(d->reason))];
            count_drop(t, &Metrics::dropped_at_gateway);
            return;
        }
        if (auto* e = std::get_if<EscalateSpa>(&action)) {
            log(gw, "escalate", t.packet.describe());
            if (t.injected) ++metrics_.spa_escalated;
            if (controller_node_ == kNone) return;
            schedule(now_ + latency(gw, controller_node_),
                     ControlEv{SpaToController{e->packet, gw, t.packet.src}});
            return;
        }
        const auto& fwd = std::get<ForwardTo>(action);
        Tracked out = t;
        if (at_mt) {
            out.packet = std::get<Rewritten>(mtd_->translate_inbound(t.packet, now_)).packet;
        }
        out.packet.dst = fwd.address;
        log(gw, "forward", t.packet.describe() + " rule=" + std::to_string(fwd.rule_id) + " to=" + fwd.address.to_string());
        send(std::move(out), gw);
    }

    void baseline_ingress(Tracked& t, std::size_t gw) {
        const auto gw_ip = topo_.node(gw).identity.real_address.ip;
        if (t.packet.dst.ip == gw_ip && t.packet.dst.port == cfg_.baseline.open_port) {
            Tracked out = t;
            out.packet.dst = topo_.node(baseline_server_).identity.real_address.with_port(cfg_.baseline.open_port);
            log(gw, "forward", t.packet.describe() + " static to=" + out.packet.dst.to_string());
            send(std::move(out), gw);
            return;
        }
        log(gw, "discard", t.packet.describe() + " reason=static_closed");
        count_drop(t, &Metrics::dropped_at_gateway);
    }

    void arrive(Tracked& t, std::size_t node) {
        switch (role(node)) {
        case HostRole::Service: return service_arrive(t, node);
        case HostRole::AcceptingHost:
            if (mtd_ && node == mt_node_ && mtd_->owns(t.packet.dst.ip)) {
                try {
                    Tracked out = t;
                    out.packet = mtd_->translate_outbound(t.packet, now_);
                    log(node, "translate_out", t.packet.describe() + " to=" + out.packet.dst.to_string());
                    send(std::move(out), node);
                } catch (const Error&) {
                    log(node, "mtd_untracked", t.packet.describe());
                    count_drop(t, &Metrics::dropped_at_mtd);
                }
                return;
            }
            log(node, "discard", t.packet.describe() + " reason=not_forwardable");
            count_drop(t, &Metrics::dropped_at_gateway);
            return;
        case HostRole::Controller:
            ++metrics_.controller_non_gateway_packets;
            log(node, "unexpected", t.packet.describe());
            count_drop(t, &Metrics::terminated_at_host);
            return;
        case HostRole::InitiatingHost: return client_receive(t, node);
        }
    }

    void service_arrive(Tracked& t, std::size_t node) {
        if (t.source == Source::Attack) ++metrics_.attack_packets_at_service;
        if (t.packet.kind == PacketKind::Reply || t.packet.kind == PacketKind::Spa) {
            log(node, "reject", t.packet.describe() + " reason=unexpected_kind");
            count_drop(t, &Metrics::rejected_at_service);
            return;
        }
        auto& q = services_.at(node);
        while (!q.completions.empty() && q.completions.front() <= now_) q.completions.pop_front();
        if (q.completions.size() >= cfg_.service_model.queue_len) {
            log(node, "overflow", t.packet.describe());
            count_drop(t, &Metrics::queue_overflow);
            return;
        }
        std::uint64_t start = std::max(now_, q.busy_until);
        std::uint64_t done = start + cfg_.service_model.service_ms();
        q.busy_until = done;
        q.completions.push_back(done);
        log(node, "enqueue", t.packet.describe() + " done_at=" + std::to_string(done));
        schedule(done, TimerEv{node, TimerTag::ServiceDone, t});
    }

    void service_done(Tracked& t, std::size_t node) {
        const auto& p = t.packet;
        bool accepted = sdp() || p.kind == PacketKind::Syn || p.auth_tag == cfg_.baseline.password_tag;
        if (!accepted) {
            log(node, "reject", p.describe() + " reason=bad_tag");
            count_drop(t, &Metrics::rejected_at_service);
            return;
        }
        log(node, "serve", p.describe());
        if (t.injected) ++metrics_.delivered_to_service;
        if (t.source == Source::Attack) ++metrics_.attack_packets_accepted;
        if (t.source == Source::Legit && t.flow != kNone && p.kind == PacketKind::Data) {
            auto& fs = metrics_.flows[t.flow];
            ++fs.delivered;
            fs.payload_bytes += p.payload_len;
            fs.latency_ms.push_back(now_ - p.created_at_ms);
        }
        Tracked reply;
        reply.packet.packet_id = new_packet_id();
        reply.packet.kind = PacketKind::Reply;
        reply.packet.src = topo_.node(node).identity.real_address.with_port(p.dst.port);
        reply.packet.dst = p.src;
        reply.packet.flow_id = p.flow_id;
        reply.packet.created_at_ms = now_;
        reply.source = Source::Internal;
        reply.flow = t.flow;
        ++metrics_.replies_sent;
        send(std::move(reply), node);
    }

    void client_receive(Tracked& t, std::size_t node) {
        if (t.packet.kind != PacketKind::Reply) {
            log(node, "ignore", t.packet.describe());
            count_drop(t, &Metrics::terminated_at_host);
            return;
        }
        ++metrics_.replies_delivered;
        log(node, "recv", t.packet.describe());
        if (t.flow != kNone && node == flows_[t.flow].client) {
            ++metrics_.flows[t.flow].replies;
        }
        if (node == attacker_) {
            responses_.emplace(t.packet.flow_id, now_);
        }
    }

    void handle(TimerEv& ev) {
        switch (ev.tag) {
        case TimerTag::Mutate: {
            try {
                auto fresh = mtd_->mutate(now_);
                ++metrics_.mutations;
                std::string detail = "epoch=" + std::to_string(mtd_->epoch());
                for (const auto& m : fresh) detail += ' ' + ip_to_string(m.real) + "=>" + ip_to_string(m.virt);
                log(ev.owner, "mutate", detail);
            } catch (const Error& e) {
                log(ev.owner, "mutate_failed", e.what());
            }
            schedule(now_ + cfg_.mtd.lifespan_ms, TimerEv{ev.owner, TimerTag::Mutate, std::nullopt});
            break;
        }
        case TimerTag::Gc: {
            auto closed = mtd_->gc_connections(now_, cfg_.mtd.idle_timeout_ms);
            if (closed > 0) log(ev.owner, "conn_gc", "closed=" + std::to_string(closed));
            schedule(now_ + cfg_.mtd.gc_interval_ms, TimerEv{ev.owner, TimerTag::Gc, std::nullopt});
            break;
        }
        case TimerTag::ExpireRules: {
            auto removed = gateways_.at(ev.owner)->expire_rules(now_);
            if (removed > 0) log(ev.owner, "remove_rule", "expired=" + std::to_string(removed));
            break;
        }
        case TimerTag::ServiceDone: service_done(*ev.t, ev.owner); break;
        }
    }

    void handle(ControlEv& ev) {
        std::visit([&](auto& msg) { control(msg); }, ev.msg);
    }

    void control(SpaToController& msg) {
        auto decision = controller_.handle_forwarded_spa(msg.spa, topo_.node(msg.gateway).identity.host_id,
                                                         msg.client_address, now_);
        if (auto* deny = std::get_if<Deny>(&decision)) {
            ++metrics_.denials;
            ++metrics_.denials_by_reason[std::string(to_string(deny->reason))];
            if (deny->reason == DenyReason::NotAuthorized) ++metrics_.spa_accepts;
            log(controller_node_, "discard",
                "deny " + msg.spa.client_id.name() + " from=" + msg.client_address.to_string() +
                    " reason=" + std::string(to_string(deny->reason)));
            return;
        }
        auto& grant = std::get<Grant>(decision);
        ++metrics_.grants;
        ++metrics_.spa_accepts;
        log(controller_node_, "grant",
            msg.spa.client_id.name() + " from=" + msg.client_address.to_string() +
                " services=" + std::to_string(grant.directive.allowed_services.size()));
        schedule(now_ + latency(controller_node_, msg.gateway),
                 ControlEv{DirectiveToGateway{grant.directive, msg.gateway}});
        if (auto client = topo_.find(grant.credential_update.client_id.name())) {
            schedule(now_ + latency(controller_node_, *client),
                     ControlEv{CredentialToClient{grant.credential_update, *client}});
        }
    }

    void control(DirectiveToGateway& msg) {
        auto ids = gateways_.at(msg.gateway)->install_rule(msg.directive, now_);
        metrics_.rules_installed += ids.size();
        log(msg.gateway, "install",
            msg.directive.client_address.to_string() + " rules=" + std::to_string(ids.size()) +
                " ttl=" + std::to_string(msg.directive.ttl_ms));
        schedule(now_ + msg.directive.ttl_ms, TimerEv{msg.gateway, TimerTag::ExpireRules, std::nullopt});
    }

    void control(CredentialToClient& msg) {
        log(msg.client, "credential_update", "channel=" + std::to_string(msg.update.channel.channel_id));
        for (std::size_t i = 0; i < flows_.size(); ++i) {
            auto& f = flows_[i];
            if (f.client == msg.client && f.waiting_grant) {
                f.waiting_grant = false;
                metrics_.flows[i].granted_at_ms = now_;
                start_flow(i);
            }
        }
    }

    void start_flow(std::size_t i) {
        auto& f = flows_[i];
        if (f.started) return;
        f.started = true;
        if (f.spec.packets > 0) schedule(now_, InjectEv{InjectStep::FlowPacket, i, 0});
    }

    void handle(InjectEv& ev) {
        switch (ev.step) {
        case InjectStep::FlowStart: return flow_start(ev.index);
        case InjectStep::FlowPacket: return flow_packet(ev.index, ev.k);
        case InjectStep::ScanProbe: return scan_probe(ev.k);
        case InjectStep::FloodPacket: return flood_packet(ev.k);
        case InjectStep::ProbeSyn: return probe(PacketKind::Syn, 0);
        case InjectStep::ProbeData: return probe(PacketKind::Data, 1);
        case InjectStep::Replay: return replay();
        }
    }

    void flow_start(std::size_t i) {
        auto& f = flows_[i];
        if (!sdp()) {
            f.target = topo_.node(entry_gateway_).identity.real_address.with_port(cfg_.baseline.open_port);
            return start_flow(i);
        }
        f.target = NetAddress{public_address(f.gateway), f.listen_port};
        if (!f.spec.spa) {
            return start_flow(i);
        }
        const auto* credential = controller_.credentials().find(topo_.node(f.client).identity.host_id);
        if (credential == nullptr) {
            log(f.client, "no_credential", f.spec.name);
            return;
        }
        auto service_id = topo_.node(*topo_.find(f.spec.service)).identity.host_id;
        auto spa = build_spa(*credential, service_id, now_, client_rng_);
        auto bytes = spa.serialize();
        Tracked t;
        t.packet.packet_id = new_packet_id();
        t.packet.kind = PacketKind::Spa;
        t.packet.src = f.src;
        t.packet.dst = NetAddress{f.target.ip, cfg_.spa_port};
        t.packet.spa.assign(bytes.begin(), bytes.end());
        t.packet.created_at_ms = now_;
        t.source = Source::Legit;
        t.flow = i;
        f.waiting_grant = true;
        capture(i, t);
        inject(std::move(t), f.client);
    }

    void flow_packet(std::size_t i, std::uint64_t k) {
        auto& f = flows_[i];
        Tracked t;
        t.packet.packet_id = new_packet_id();
        t.packet.kind = PacketKind::Data;
        t.packet.src = f.src;
        t.packet.dst = f.target;
        t.packet.flow_id = i + 1;
        t.packet.payload_len = f.spec.payload;
        t.packet.auth_tag = cfg_.baseline.password_tag;
        t.packet.created_at_ms = now_;
        t.source = Source::Legit;
        t.flow = i;
        ++metrics_.flows[i].sent;
        if (k == 0 && !f.captured) capture(i, t);
        inject(std::move(t), f.client);
        if (k + 1 < f.spec.packets) {
            schedule(now_ + f.spec.interval_ms, InjectEv{InjectStep::FlowPacket, i, k + 1});
        }
    }

    void capture(std::size_t i, const Tracked& t) {
        flows_[i].captured = t;
        if (cfg_.attack.kind == AttackKind::Replay && replay_victim_ == i && !replay_scheduled_) {
            replay_scheduled_ = true;
            schedule(now_ + cfg_.attack.delay_ms, InjectEv{InjectStep::Replay, i, 0});
        }
    }

    Tracked attack_packet(PacketKind kind, NetAddress dst, std::uint16_t src_port, std::uint64_t flow_id) {
        Tracked t;
        t.packet.packet_id = new_packet_id();
        t.packet.kind = kind;
        t.packet.src = topo_.node(attacker_).identity.real_address.with_port(src_port);
        t.packet.dst = dst;
        t.packet.flow_id = flow_id;
        t.packet.payload_len = kind == PacketKind::Data ? cfg_.attack.payload : 0;
        t.packet.created_at_ms = now_;
        t.source = Source::Attack;
        return t;
    }

    void scan_probe(std::uint64_t k) {
        const auto port = static_cast<std::uint16_t>(cfg_.attack.port_lo + k);
        NetAddress dst{public_address(attack_target_), port};
        probes_sent_.emplace(kScanFlowBase + port, now_);
        inject(attack_packet(PacketKind::Syn, dst, kAttackerScanPort, kScanFlowBase + port), attacker_);
        if (port < cfg_.attack.port_hi) {
            schedule(now_ + cfg_.attack.interval_ms, InjectEv{InjectStep::ScanProbe, 0, k + 1});
        }
    }

    void flood_packet(std::uint64_t k) {
        const auto& a = cfg_.attack;
        NetAddress dst{public_address(attack_target_), a.port};
        inject(attack_packet(a.flood_kind, dst, kAttackerFloodPort, 0), attacker_);
        if (k + 1 < flood_count()) {
            schedule(a.start_ms + (k + 1) * 1000 / a.rate_pps, InjectEv{InjectStep::FloodPacket, 0, k + 1});
        }
    }

    void probe(PacketKind kind, std::uint64_t offset) {
        NetAddress dst{public_address(attack_target_), cfg_.attack.port};
        probes_sent_.emplace(kProbeFlowBase + offset, now_);
        inject(attack_packet(kind, dst, kAttackerProbePort, kProbeFlowBase + offset), attacker_);
    }

    void replay() {
        const auto& f = flows_[*replay_victim_];
        if (!f.captured) return;
        Tracked t = *f.captured;
        t.packet.packet_id = new_packet_id();
        t.packet.src = topo_.node(attacker_).identity.real_address.with_port(kAttackerReplayPort);
        t.packet.created_at_ms = now_;
        t.source = Source::Attack;
        t.flow = kNone;
        if (auto bit = cfg_.attack.tamper_bit) {
            if (t.packet.kind == PacketKind::Spa && *bit / 8 < t.packet.spa.size()) {
                t.packet.spa[*bit / 8] ^= static_cast<std::uint8_t>(0x80u >> (*bit % 8));
            } else {
                t.packet.auth_tag ^= 1ull << (*bit % 64);
            }
        }
        inject(std::move(t), attacker_);
    }

    // ---- results ---------------------------------------------------------

    SimResult finish() {
        SimResult out;
        while (!queue_.empty()) {
            const auto& ev = queue_.top();
            if (const auto* d = std::get_if<DeliverEv>(&ev.body); d && d->t.injected) {
                ++metrics_.in_flight_at_end;
            }
            if (const auto* t = std::get_if<TimerEv>(&ev.body); t && t->t && t->t->injected) {
                ++metrics_.in_flight_at_end;
            }
            queue_.pop();
        }

        if (scan_) {
            for (std::uint32_t port = scan_->port_lo; port <= scan_->port_hi; ++port) {
                if (responded(kScanFlowBase + port, scan_->window_ms)) {
                    scan_->open_ports.push_back(static_cast<std::uint16_t>(port));
                }
            }
            metrics_.scan = scan_;
        }
        if (cfg_.attack.kind == AttackKind::Probe) {
            auto window = response_window();
            bool any = responded(kProbeFlowBase, window) || responded(kProbeFlowBase + 1, window);
            metrics_.probe = any ? ProbeResult::Accepted : ProbeResult::Refused;
        }

        for (const auto& [node, gw] : gateways_) {
            for (const auto& rec : gw->audit_log()) {
                if (rec.action == "remove") ++metrics_.rules_removed;
                out.gateway_audit.push_back(topo_.node(node).name + ',' + rec.to_line());
            }
        }
        for (const auto& rec : controller_.decision_log()) out.decision_log.push_back(rec.to_line());
        if (mtd_) {
            metrics_.mtd_epoch = mtd_->epoch();
            for (const auto& rec : mtd_->mutation_log()) out.mutation_log.push_back(rec.to_line());
            for (const auto& rec : mtd_->denial_log()) out.denial_log.push_back(rec.to_line());
        }
        metrics_.sim_duration_ms = cfg_.duration_ms;
        out.metrics = std::move(metrics_);
        out.trace = std::move(trace_);
        return out;
    }

    bool responded(std::uint64_t flow_id, std::uint64_t window) const {
        auto sent = probes_sent_.find(flow_id);
        if (sent == probes_sent_.end()) return false;
        auto [lo, hi] = responses_.equal_range(flow_id);
        for (auto it = lo; it != hi; ++it) {
            if (it->second >= sent->second && it->second - sent->second <= window) return true;
        }
        return false;
    }

    const ScenarioConfig& cfg_;
    Topology topo_;
    Controller controller_;
    DeterministicRng client_rng_;
    std::map<std::size_t, std::unique_ptr<Gateway>> gateways_;
    std::map<std::size_t, ServiceQueue> services_;
    std::optional<MovingTargetDefense> mtd_;
    std::size_t mt_node_ = kNone;
    std::size_t controller_node_ = kNone;
    std::size_t entry_gateway_ = kNone;
    std::size_t baseline_server_ = kNone;
    std::size_t attacker_ = kNone;
    std::size_t attack_target_ = kNone;
    std::optional<std::size_t> replay_victim_;
    bool replay_scheduled_ = false;
    std::optional<ScanReport> scan_;
    std::map<std::uint64_t, std::uint64_t> probes_sent_;
    std::multimap<std::uint64_t, std::uint64_t> responses_;

    std::vector<FlowRuntime> flows_;
    std::map<std::pair<std::size_t, std::size_t>, std::optional<Route>> routes_;
    std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
    std::uint64_t next_seq_ = 0;
    std::uint64_t next_packet_id_ = 1;
    std::uint64_t now_ = 0;
    Metrics metrics_;
    std::vector<TraceLine> trace_;
};

} // namespace

double FlowStats::mean_latency_ms() const {
    if (latency_ms.empty()) return 0.0;
    double sum = 0;
    for (auto v : latency_ms) sum += static_cast<double>(v);
    return sum / static_cast<double>(latency_ms.size());
}

std::uint64_t Metrics::legit_sent() const {
    std::uint64_t n = 0;
    for (const auto& f : flows) n += f.sent;
    return n;
}

std::uint64_t Metrics::legit_delivered() const {
    std::uint64_t n = 0;
    for (const auto& f : flows) n += f.delivered;
    return n;
}

double Metrics::legit_mean_latency_ms() const {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& f : flows) {
        for (auto v : f.latency_ms) {
            sum += static_cast<double>(v);
            ++n;
        }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double Metrics::goodput_bytes_per_s() const {
    if (sim_duration_ms == 0) return 0.0;
    std::uint64_t bytes = 0;
    for (const auto& f : flows) bytes += f.payload_bytes;
    return static_cast<double>(bytes) * 1000.0 / static_cast<double>(sim_duration_ms);
}

bool Metrics::conserved() const {
    return packets_injected == delivered_to_service + dropped_at_gateway + dropped_at_mtd + rejected_at_service +
                                   queue_overflow + spa_escalated + dropped_unroutable + terminated_at_host +
                                   in_flight_at_end;
}

std::vector<std::pair<std::string, std::string>> Metrics::rows() const {
    std::vector<std::pair<std::string, std::string>> r;
    auto add = [&](std::string k, std::uint64_t v) { r.emplace_back(std::move(k), std::to_string(v)); };
    add("packets_injected", packets_injected);
    add("delivered_to_service", delivered_to_service);
    add("dropped_at_gateway", dropped_at_gateway);
    add("dropped_at_mtd", dropped_at_mtd);
    add("rejected_at_service", rejected_at_service);
    add("queue_overflow", queue_overflow);
    add("spa_escalated", spa_escalated);
    add("dropped_unroutable", dropped_unroutable);
    add("terminated_at_host", terminated_at_host);
    add("in_flight_at_end", in_flight_at_end);
    add("attack_packets_injected", attack_packets_injected);
    add("attack_packets_at_service", attack_packets_at_service);
    add("attack_packets_accepted", attack_packets_accepted);
    add("grants", grants);
    add("denials", denials);
    for (auto reason : {DenyReason::Malformed, DenyReason::UnknownClient, DenyReason::BadMac, DenyReason::Stale,
                        DenyReason::Replay, DenyReason::NotAuthorized}) {
        auto name = std::string(to_string(reason));
        auto it = denials_by_reason.find(name);
        add("deny_" + name, it == denials_by_reason.end() ? 0 : it->second);
    }
    for (auto reason : {DropReason::SpaMalformed, DropReason::SpaUnknownClient, DropReason::SpaBadMac,
                        DropReason::SpaStale}) {
        auto name = std::string(to_string(reason));
        auto it = spa_drops_by_reason.find(name);
        add("gateway_drop_" + name, it == spa_drops_by_reason.end() ? 0 : it->second);
    }
    add("spa_accepts", spa_accepts);
    add("rules_installed", rules_installed);
    add("rules_removed", rules_removed);
    add("controller_non_gateway_packets", controller_non_gateway_packets);
    add("replies_sent", replies_sent);
    add("replies_delivered", replies_delivered);
    add("replies_dropped", replies_dropped);
    add("mutations", mutations);
    add("mtd_epoch", mtd_epoch);
    add("mtd_denials", mtd_denials);
    add("legit_packets_sent", legit_sent());
    add("legit_packets_delivered", legit_delivered());
    r.emplace_back("legit_latency_mean_ms", format_double(legit_mean_latency_ms()));
    r.emplace_back("goodput_bytes_per_s", format_double(goodput_bytes_per_s()));
    for (const auto& f : flows) {
        add("flow_" + f.name + "_sent", f.sent);
        add("flow_" + f.name + "_delivered", f.delivered);
        add("flow_" + f.name + "_replies", f.replies);
        r.emplace_back("flow_" + f.name + "_latency_mean_ms", format_double(f.mean_latency_ms()));
    }
    add("ports_scanned", scan ? scan->ports_scanned() : 0);
    add("ports_open", ports_open());
    std::string open;
    if (scan) {
        for (std::size_t i = 0; i < scan->open_ports.size(); ++i) {
            if (i > 0) open += ';';
            open += std::to_string(scan->open_ports[i]);
        }
    }
    r.emplace_back("open_ports", open.empty() ? "-" : open);
    r.emplace_back("probe_result", !probe ? "-" : (*probe == ProbeResult::Accepted ? "accepted" : "refused"));
    add("probe_accepted", probe && *probe == ProbeResult::Accepted ? 1 : 0);
    add("conservation_ok", conserved() ? 1 : 0);
    return r;
}

std::string TraceLine::to_line() const {
    return std::to_string(seq) + ',' + std::to_string(ts_ms) + ',' + node + ',' + action + ',' + detail;
}

std::string SimResult::trace_text() const {
    std::string out;
    for (const auto& line : trace) {
        out += line.to_line();
        out += '\n';
    }
    return out;
}

SimResult run_scenario(const ScenarioConfig& scenario, std::uint64_t seed) {
    try {
        scenario.validate();
    } catch (const Error& e) {
        throw Error(Errc::InvalidScenario, e.what());
    }
    Engine engine(scenario, seed);
    return engine.run();
}

SimResult run_scenario(const ScenarioConfig& scenario) {
    if (!scenario.seed) {
        throw Error(Errc::InvalidScenario, "scenario.seed is required");
    }
    return run_scenario(scenario, *scenario.seed);
}

} // namespace sdpmtd
