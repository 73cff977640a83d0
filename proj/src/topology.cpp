#include "sdpmtd/topology.hpp"

#include <algorithm>
#include <limits>
#include <queue>

#include "sdpmtd/error.hpp"

namespace sdpmtd {

std::string_view to_string(LinkLabel label) {
    switch (label) {
    case LinkLabel::N1: return "N1";
    case LinkLabel::N2: return "N2";
    case LinkLabel::N3: return "N3";
    case LinkLabel::N4: return "N4";
    case LinkLabel::N6: return "N6";
    case LinkLabel::Mgmt: return "mgmt";
    }
    return "unknown";
}

std::optional<LinkLabel> parse_link_label(std::string_view text) {
    for (auto l : {LinkLabel::N1, LinkLabel::N2, LinkLabel::N3, LinkLabel::N4, LinkLabel::N6, LinkLabel::Mgmt}) {
        if (to_string(l) == text) {
            return l;
        }
    }
    return std::nullopt;
}

std::size_t Topology::add_node(std::string name, HostRole role, Ipv4 ip) {
    auto id = HostId::from_name(name);
    if (!id) {
        throw Error(Errc::ValidationError, "node name must be 1-16 bytes: '" + name + "'");
    }
    if (find(name) || node_by_ip(ip)) {
        throw Error(Errc::ValidationError, "duplicate node or address: " + name);
    }
    nodes_.push_back(Node{std::move(name), HostIdentity{*id, role, NetAddress{ip, 0}}});
    return nodes_.size() - 1;
}

void Topology::add_link(std::string_view a, std::string_view b, std::uint64_t latency_ms, LinkLabel label) {
    auto ia = find(a);
    auto ib = find(b);
    if (!ia || !ib || *ia == *ib) {
        throw Error(Errc::ValidationError, "bad link " + std::string(a) + "-" + std::string(b));
    }
    links_.push_back(Link{*ia, *ib, latency_ms, label});
}

void Topology::set_latency(std::string_view a, std::string_view b, std::uint64_t latency_ms) {
    auto ia = find(a);
    auto ib = find(b);
    for (auto& l : links_) {
        if (ia && ib && ((l.a == *ia && l.b == *ib) || (l.a == *ib && l.b == *ia))) {
            l.latency_ms = latency_ms;
            return;
        }
    }
    throw Error(Errc::ValidationError, "no link " + std::string(a) + "-" + std::string(b));
}

void Topology::protect(std::string_view name) {
    auto i = find(name);
    if (!i) {
        throw Error(Errc::ValidationError, "cannot protect unknown node " + std::string(name));
    }
    if (std::find(protected_.begin(), protected_.end(), *i) == protected_.end()) {
        protected_.push_back(*i);
    }
}

std::optional<std::size_t> Topology::find(std::string_view name) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

std::optional<std::size_t> Topology::node_by_ip(Ipv4 ip) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].identity.real_address.ip == ip) {
            return i;
        }
    }
    return std::nullopt;
}

std::vector<std::size_t> Topology::neighbors(std::size_t index) const {
    std::vector<std::size_t> out;
    for (const auto& l : links_) {
        if (l.a == index) out.push_back(l.b);
        if (l.b == index) out.push_back(l.a);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::optional<Route> Topology::route(std::size_t from, std::size_t to) const {
    constexpr auto kInf = std::numeric_limits<std::uint64_t>::max();
    const std::size_t n = nodes_.size();
    if (from >= n || to >= n) {
        return std::nullopt;
    }
    // Dijkstra keyed on (distance, hop path) so ties resolve identically on
    // every run.
    std::vector<std::uint64_t> dist(n, kInf);
    std::vector<std::vector<std::size_t>> path(n);
    using Item = std::pair<std::uint64_t, std::vector<std::size_t>>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[from] = 0;
    path[from] = {from};
    queue.push({0, {from}});
    while (!queue.empty()) {
        auto [d, p] = queue.top();
        queue.pop();
        std::size_t u = p.back();
        if (d != dist[u] || p != path[u]) {
            continue;
        }
        for (const auto& l : links_) {
            std::size_t v;
            if (l.a == u) v = l.b;
            else if (l.b == u) v = l.a;
            else continue;
            std::uint64_t nd = d + l.latency_ms;
            auto np = p;
            np.push_back(v);
            if (nd < dist[v] || (nd == dist[v] && np < path[v])) {
                dist[v] = nd;
                path[v] = np;
                queue.push({nd, np});
            }
        }
    }
    if (dist[to] == kInf) {
        return std::nullopt;
    }
    return Route{path[to], dist[to]};
}

std::vector<Ipv4> Topology::real_addresses() const {
    std::vector<Ipv4> out;
    for (const auto& n : nodes_) {
        out.push_back(n.identity.real_address.ip);
    }
    return out;
}

void Topology::validate() const {
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (!route(0, i)) {
            throw Error(Errc::ValidationError, "node " + nodes_[i].name + " is unreachable");
        }
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].identity.role != HostRole::Controller) {
            continue;
        }
        for (auto nb : neighbors(i)) {
            if (nodes_[nb].identity.role != HostRole::AcceptingHost) {
                throw Error(Errc::ValidationError,
                            "controller " + nodes_[i].name + " is directly linked to non-gateway " + nodes_[nb].name);
            }
        }
    }
}

Topology Topology::fig1() {
    Topology t;
    t.add_node("ue_gnb", HostRole::InitiatingHost, *parse_ip("10.0.0.10"));
    t.add_node("attacker", HostRole::InitiatingHost, *parse_ip("10.0.0.66"));
    t.add_node("gateway1", HostRole::AcceptingHost, *parse_ip("10.0.1.1"));
    t.add_node("controller", HostRole::Controller, *parse_ip("10.0.2.1"));
    t.add_node("gateway2", HostRole::AcceptingHost, *parse_ip("10.0.3.1"));
    t.add_node("gateway3", HostRole::AcceptingHost, *parse_ip("10.0.4.1"));
    t.add_node("amf_smf", HostRole::Service, *parse_ip("10.0.5.1"));
    t.add_node("upf", HostRole::Service, *parse_ip("10.0.6.1"));
    t.add_node("dn", HostRole::Service, *parse_ip("10.0.7.1"));

    t.add_link("ue_gnb", "gateway1", 1, LinkLabel::N1);
    t.add_link("attacker", "gateway1", 1, LinkLabel::N1);
    t.add_link("gateway1", "controller", 1, LinkLabel::Mgmt);
    t.add_link("gateway1", "gateway2", 1, LinkLabel::N2);
    t.add_link("gateway2", "amf_smf", 1, LinkLabel::N2);
    t.add_link("gateway1", "gateway3", 1, LinkLabel::N3);
    t.add_link("gateway3", "upf", 1, LinkLabel::N3);
    t.add_link("amf_smf", "gateway3", 1, LinkLabel::N4);
    t.add_link("upf", "dn", 1, LinkLabel::N6);
    t.add_link("gateway2", "controller", 1, LinkLabel::Mgmt);
    t.add_link("gateway3", "controller", 1, LinkLabel::Mgmt);

    t.protect("gateway1");
    t.protect("amf_smf");
    t.protect("upf");
    return t;
}

} // namespace sdpmtd
