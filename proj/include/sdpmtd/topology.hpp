#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdpmtd/net.hpp"

namespace sdpmtd {

enum class LinkLabel { N1, N2, N3, N4, N6, Mgmt };

std::string_view to_string(LinkLabel label);
std::optional<LinkLabel> parse_link_label(std::string_view text);

struct Node {
    std::string name;
    HostIdentity identity;
};

struct Link {
    std::size_t a = 0;
    std::size_t b = 0;
    std::uint64_t latency_ms = 1;
    LinkLabel label = LinkLabel::Mgmt;
};

/// Result of a route lookup: node indices from source to destination
/// (inclusive) and the summed link latency.
struct Route {
    std::vector<std::size_t> hops;
    std::uint64_t latency_ms = 0;
};

class Topology {
public:
    /// Throws ValidationError on duplicate names, ids or addresses.
    std::size_t add_node(std::string name, HostRole role, Ipv4 ip);
    /// Throws ValidationError for unknown endpoints or a self loop.
    void add_link(std::string_view a, std::string_view b, std::uint64_t latency_ms, LinkLabel label);
    /// Overrides the latency of an existing link. Throws ValidationError.
    void set_latency(std::string_view a, std::string_view b, std::uint64_t latency_ms);
    void protect(std::string_view name);

    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<Link>& links() const { return links_; }
    const std::vector<std::size_t>& protected_set() const { return protected_; }

    std::optional<std::size_t> find(std::string_view name) const;
    std::optional<std::size_t> node_by_ip(Ipv4 ip) const;
    const Node& node(std::size_t index) const { return nodes_.at(index); }
    std::vector<std::size_t> neighbors(std::size_t index) const;

    /// Lowest-latency route; ties prefer the lexicographically smallest hop
    /// sequence by node index. nullopt when unreachable.
    std::optional<Route> route(std::size_t from, std::size_t to) const;

    /// Every real address in the topology.
    std::vector<Ipv4> real_addresses() const;

    /// Structural invariants: every node reachable, controller adjacent only to
    /// accepting hosts. Throws ValidationError.
    void validate() const;

    /// Reference deployment: UE+gNB and an external attacker in front of
    /// gateway 1, the controller behind gateway 1, gateways 2 and 3 fronting
    /// AMF+SMF and UPF, and a data network behind UPF.
    static Topology fig1();

private:
    std::vector<Node> nodes_;
    std::vector<Link> links_;
    std::vector<std::size_t> protected_;
};

} // namespace sdpmtd
