#include <gtest/gtest.h>

#include "sdpmtd/controller.hpp"
#include "sdpmtd/error.hpp"
#include "sdpmtd/gateway.hpp"

using namespace sdpmtd;

namespace {

HostId id(const char* name) { return *HostId::from_name(name); }

constexpr Ipv4 kGw = 0x0a000101;
constexpr Ipv4 kUe = 0x0a00000a;
constexpr Ipv4 kAttacker = 0x0a000042;
const NetAddress kAmf{0x0a000501, 7777};

struct Fixture {
    Fixture() : gw(GatewayConfig{id("gateway1"), kGw, 5000}, store) {
        Credential c{id("ue_gnb"), {}, 0};
        c.hmac_key.fill(0x33);
        ue = store.insert(c);
    }

    SimPacket spa_packet(std::uint64_t ts, std::uint8_t nonce, bool tamper = false) {
        SpaPacket p;
        p.client_id = ue.host_id;
        p.timestamp_ms = ts;
        p.nonce.fill(nonce);
        p.requested_service_id = id("amf_smf");
        p.mac = hmac_sha256(ue.hmac_key, p.signed_bytes());
        if (tamper) p.mac[0] ^= 0x01;
        auto bytes = p.serialize();
        SimPacket s;
        s.kind = PacketKind::Spa;
        s.src = NetAddress{kUe, 40000};
        s.dst = NetAddress{kGw, 62201};
        s.spa.assign(bytes.begin(), bytes.end());
        return s;
    }

    static SimPacket data(Ipv4 src, std::uint16_t port) {
        SimPacket s;
        s.kind = PacketKind::Data;
        s.src = NetAddress{src, 40000};
        s.dst = NetAddress{kGw, port};
        return s;
    }

    AuthorizationDirective directive(std::uint64_t ttl) {
        AuthorizationDirective d;
        d.client_id = ue.host_id;
        d.client_address = NetAddress{kUe, 40000};
        d.allowed_services.push_back(AllowedService{id("amf_smf"), 44, kAmf});
        d.ttl_ms = ttl;
        return d;
    }

    CredentialStore store;
    Credential ue;
    Gateway gw;
};

} // namespace

TEST(Gateway, DefaultDropsEverything) {
    Fixture f;
    for (std::uint16_t port : {0, 22, 44, 45, 443, 999}) {
        auto a = f.gw.process_packet(Fixture::data(kAttacker, port), 0);
        ASSERT_TRUE(std::holds_alternative<Drop>(a));
        EXPECT_EQ(std::get<Drop>(a).reason, DropReason::NoRule);
    }
    auto other = Fixture::data(kAttacker, 44);
    other.dst.ip = 0x0a000301;
    EXPECT_EQ(std::get<Drop>(f.gw.process_packet(other, 0)).reason, DropReason::NotAddressed);
}

TEST(Gateway, ValidSpaIsEscalatedInvalidIsDropped) {
    Fixture f;
    auto ok = f.gw.process_packet(f.spa_packet(1000, 1), 1000);
    ASSERT_TRUE(std::holds_alternative<EscalateSpa>(ok));
    EXPECT_EQ(std::get<EscalateSpa>(ok).packet.timestamp_ms, 1000u);

    EXPECT_EQ(std::get<Drop>(f.gw.process_packet(f.spa_packet(1000, 1, true), 1000)).reason, DropReason::SpaBadMac);
    EXPECT_EQ(std::get<Drop>(f.gw.process_packet(f.spa_packet(1000, 1), 7000)).reason, DropReason::SpaStale);
    auto shortp = f.spa_packet(1000, 1);
    shortp.spa.pop_back();
    EXPECT_EQ(std::get<Drop>(f.gw.process_packet(shortp, 1000)).reason, DropReason::SpaMalformed);
    f.store.revoke(f.ue.host_id);
    EXPECT_EQ(std::get<Drop>(f.gw.process_packet(f.spa_packet(1000, 2), 1000)).reason,
              DropReason::SpaUnknownClient);
}

TEST(Gateway, RuleMatchesClientIpAndPortOnly) {
    Fixture f;
    auto ids = f.gw.install_rule(f.directive(30000), 100);
    ASSERT_EQ(ids.size(), 1u);
    auto fwd = f.gw.process_packet(Fixture::data(kUe, 44), 200);
    ASSERT_TRUE(std::holds_alternative<ForwardTo>(fwd));
    EXPECT_EQ(std::get<ForwardTo>(fwd).address, kAmf);
    EXPECT_EQ(std::get<ForwardTo>(fwd).rule_id, ids[0]);

    auto new_src_port = Fixture::data(kUe, 44);
    new_src_port.src.port = 51000;
    EXPECT_TRUE(std::holds_alternative<ForwardTo>(f.gw.process_packet(new_src_port, 200)));
    EXPECT_TRUE(std::holds_alternative<Drop>(f.gw.process_packet(Fixture::data(kUe, 45), 200)));
    EXPECT_TRUE(std::holds_alternative<Drop>(f.gw.process_packet(Fixture::data(kAttacker, 44), 200)));
}

TEST(Gateway, TtlBoundaryAndLazyRemoval) {
    Fixture f;
    f.gw.install_rule(f.directive(1000), 100);
    EXPECT_TRUE(std::holds_alternative<ForwardTo>(f.gw.process_packet(Fixture::data(kUe, 44), 1099)));
    auto late = f.gw.process_packet(Fixture::data(kUe, 44), 1100);
    EXPECT_EQ(std::get<Drop>(late).reason, DropReason::RuleExpired);
    EXPECT_TRUE(f.gw.rules().empty());
    const auto& log = f.gw.audit_log();
    ASSERT_GE(log.size(), 2u);
    EXPECT_EQ(log[log.size() - 2].action, "remove");
    EXPECT_EQ(log.back().action, "drop");
    EXPECT_EQ(std::get<Drop>(f.gw.process_packet(Fixture::data(kUe, 44), 1101)).reason, DropReason::NoRule);
}

TEST(Gateway, ExpireRulesSweep) {
    Fixture f;
    f.gw.install_rule(f.directive(1000), 0);
    auto d = f.directive(5000);
    d.allowed_services[0].gateway_listen_port = 45;
    f.gw.install_rule(d, 0);
    EXPECT_EQ(f.gw.live_rule_count(999), 2u);
    EXPECT_EQ(f.gw.expire_rules(999), 0u);
    EXPECT_EQ(f.gw.expire_rules(1000), 1u);
    EXPECT_EQ(f.gw.live_rule_count(1000), 1u);
    EXPECT_EQ(f.gw.audit_log().back().to_line(), "1000,remove,10.0.0.10:0,44,1");
}

TEST(Gateway, ReinstallReplacesRule) {
    Fixture f;
    f.gw.install_rule(f.directive(1000), 0);
    auto ids = f.gw.install_rule(f.directive(1000), 900);
    EXPECT_EQ(f.gw.rules().size(), 1u);
    EXPECT_EQ(f.gw.rules()[0].rule_id, ids[0]);
    EXPECT_TRUE(std::holds_alternative<ForwardTo>(f.gw.process_packet(Fixture::data(kUe, 44), 1500)));
}

TEST(Gateway, InvalidDirectives) {
    Fixture f;
    auto empty = f.directive(1000);
    empty.allowed_services.clear();
    try {
        f.gw.install_rule(empty, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InvalidDirective);
    }
    EXPECT_THROW(f.gw.install_rule(f.directive(0), 0), Error);
    EXPECT_TRUE(f.gw.rules().empty());
}

// The four outcomes of the client-authentication decision, driven through a
// gateway and a controller wired by hand.
TEST(Gateway, AuthenticationDecisionOutcomes) {
    Fixture f;
    Controller ctl(ControllerConfig{id("controller"), 1000, 5000}, DeterministicRng(3));
    ctl.register_host(HostIdentity{f.ue.host_id, HostRole::InitiatingHost, NetAddress{kUe, 0}}, f.ue);
    Credential gk{id("gateway1"), {}, 0};
    ctl.register_host(HostIdentity{id("gateway1"), HostRole::AcceptingHost, NetAddress{kGw, 0}}, gk);
    Credential sk{id("amf_smf"), {}, 0};
    ctl.register_host(HostIdentity{id("amf_smf"), HostRole::Service, kAmf}, sk);
    ctl.bind_service(ServiceBinding{id("amf_smf"), id("gateway1"), 44, kAmf});
    Gateway gw(GatewayConfig{id("gateway1"), kGw, 5000}, ctl.credentials());

    auto outcome = [&](const SimPacket& pkt, std::uint64_t now) -> std::vector<std::string> {
        std::vector<std::string> out;
        auto a = gw.process_packet(pkt, now);
        if (auto* e = std::get_if<EscalateSpa>(&a)) {
            auto d = ctl.handle_forwarded_spa(e->packet, id("gateway1"), pkt.src, now);
            if (auto* g = std::get_if<Grant>(&d)) {
                gw.install_rule(g->directive, now);
                out.push_back("install");
            } else {
                out.push_back("discard");
            }
        } else if (auto* d = std::get_if<Drop>(&a)) {
            if (d->reason == DropReason::RuleExpired) out.push_back("remove_rule");
            out.push_back("discard");
        } else {
            out.push_back("forward");
        }
        return out;
    };

    using V = std::vector<std::string>;
    EXPECT_EQ(outcome(f.spa_packet(100, 1, true), 100), V{"discard"});  // invalid SPA
    EXPECT_EQ(outcome(f.spa_packet(100, 2), 100), V{"discard"});        // valid, but no policy yet
    ctl.set_policy(f.ue.host_id, {id("amf_smf")});
    EXPECT_EQ(outcome(f.spa_packet(200, 3), 200), V{"install"});
    EXPECT_EQ(outcome(Fixture::data(kUe, 44), 500), V{"forward"});                 // within t
    EXPECT_EQ(outcome(Fixture::data(kUe, 44), 1200), (V{"remove_rule", "discard"}));  // after t
}
