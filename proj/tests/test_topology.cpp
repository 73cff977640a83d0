#include <gtest/gtest.h>

#include <set>

#include "sdpmtd/error.hpp"
#include "sdpmtd/mtd.hpp"
#include "sdpmtd/topology.hpp"

using namespace sdpmtd;

namespace {

std::string names(const Topology& t, const Route& r) {
    std::string s;
    for (auto h : r.hops) {
        if (!s.empty()) s += '>';
        s += t.node(h).name;
    }
    return s;
}

std::string path(const Topology& t, const char* a, const char* b) {
    auto r = t.route(*t.find(a), *t.find(b));
    return r ? names(t, *r) + " " + std::to_string(r->latency_ms) : "none";
}

} // namespace

TEST(Topology, Fig1Preset) {
    auto t = Topology::fig1();
    EXPECT_NO_THROW(t.validate());
    for (const char* n : {"ue_gnb", "gateway1", "controller", "gateway2", "gateway3", "amf_smf", "upf"}) {
        EXPECT_TRUE(t.find(n)) << n;
    }
    std::set<LinkLabel> labels;
    for (const auto& l : t.links()) labels.insert(l.label);
    for (auto l : {LinkLabel::N1, LinkLabel::N2, LinkLabel::N3, LinkLabel::N4, LinkLabel::N6, LinkLabel::Mgmt}) {
        EXPECT_TRUE(labels.contains(l)) << to_string(l);
    }
    // the controller hangs off gateways only
    for (auto nb : t.neighbors(*t.find("controller"))) {
        EXPECT_EQ(t.node(nb).identity.role, HostRole::AcceptingHost);
    }
    EXPECT_EQ(scan_hosts(t), (std::vector<Ipv4>{*parse_ip("10.0.1.1"), *parse_ip("10.0.5.1"), *parse_ip("10.0.6.1")}));
}

TEST(Topology, RoutesAndTies) {
    auto t = Topology::fig1();
    EXPECT_EQ(path(t, "ue_gnb", "amf_smf"), "ue_gnb>gateway1>gateway2>amf_smf 3");
    EXPECT_EQ(path(t, "attacker", "controller"), "attacker>gateway1>controller 2");
    EXPECT_EQ(path(t, "ue_gnb", "dn"), "ue_gnb>gateway1>gateway3>upf>dn 4");
    EXPECT_EQ(path(t, "amf_smf", "upf"), "amf_smf>gateway3>upf 2");
    t.set_latency("gateway1", "gateway2", 10);
    EXPECT_EQ(path(t, "ue_gnb", "amf_smf"), "ue_gnb>gateway1>gateway3>amf_smf 3");
    EXPECT_EQ(path(t, "ue_gnb", "ue_gnb"), "ue_gnb 0");
}

TEST(Topology, TieBreakIsLexicographicByIndex) {
    Topology t;
    t.add_node("a", HostRole::InitiatingHost, 1);
    t.add_node("b", HostRole::AcceptingHost, 2);
    t.add_node("c", HostRole::AcceptingHost, 3);
    t.add_node("d", HostRole::Service, 4);
    t.add_link("a", "c", 1, LinkLabel::N1);
    t.add_link("a", "b", 1, LinkLabel::N1);
    t.add_link("c", "d", 1, LinkLabel::N2);
    t.add_link("b", "d", 1, LinkLabel::N2);
    EXPECT_EQ(path(t, "a", "d"), "a>b>d 2");
}

TEST(Topology, Errors) {
    Topology t;
    t.add_node("a", HostRole::InitiatingHost, 1);
    EXPECT_THROW(t.add_node("a", HostRole::Service, 2), Error);
    EXPECT_THROW(t.add_node("b", HostRole::Service, 1), Error);
    EXPECT_THROW(t.add_link("a", "zzz", 1, LinkLabel::N1), Error);
    EXPECT_THROW(t.add_link("a", "a", 1, LinkLabel::N1), Error);
    EXPECT_THROW(t.set_latency("a", "b", 3), Error);
    EXPECT_THROW(t.protect("zzz"), Error);

    t.add_node("island", HostRole::Service, 9);
    try {
        t.validate();
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ValidationError);
    }
}

TEST(Topology, ControllerNextToClientIsRejected) {
    auto t = Topology::fig1();
    t.add_link("ue_gnb", "controller", 1, LinkLabel::Mgmt);
    EXPECT_THROW(t.validate(), Error);
}

TEST(Net, AddressFormatting) {
    EXPECT_EQ(ip_to_string(*parse_ip("10.0.1.1")), "10.0.1.1");
    EXPECT_FALSE(parse_ip("10.0.1"));
    EXPECT_FALSE(parse_ip("10.0.1.256"));
    EXPECT_FALSE(parse_ip("a.b.c.d"));
    EXPECT_EQ((NetAddress{*parse_ip("1.2.3.4"), 80}).to_string(), "1.2.3.4:80");
    EXPECT_EQ(HostId::from_name("upf")->name(), "upf");
    EXPECT_FALSE(HostId::from_name(""));
    EXPECT_FALSE(HostId::from_name("seventeen_chars__"));
    EXPECT_EQ(HostId::from_name("ab")->hex(), "61620000000000000000000000000000");
    EXPECT_EQ(from_hex("0aFF"), (std::vector<std::uint8_t>{0x0a, 0xff}));
    EXPECT_FALSE(from_hex("abc"));
    EXPECT_FALSE(from_hex("zz"));
    for (auto r : {HostRole::InitiatingHost, HostRole::AcceptingHost, HostRole::Controller, HostRole::Service}) {
        EXPECT_EQ(parse_role(to_string(r)), r);
    }
}
