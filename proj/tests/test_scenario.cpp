#include <gtest/gtest.h>

#include "sdpmtd/error.hpp"
#include "sdpmtd/scenario.hpp"

using namespace sdpmtd;

namespace {

const std::string kBase = R"(scenario.name = t
scenario.seed = 1
service.amf_smf = gateway1 44 7777
policy.ue_gnb = amf_smf
flow.f.client = ue_gnb
flow.f.service = amf_smf
flow.f.packets = 3
)";

Errc code_of(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error for:\n" << text;
    return Errc::IoError;
}

std::string message_of(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(Scenario, BundledScanLoads) {
    auto cfg = load_scenario(std::string(SDPMTD_SOURCE_DIR) + "/scenarios/fig1_sdp_scan.cfg");
    EXPECT_EQ(cfg.name, "fig1_sdp_scan");
    EXPECT_EQ(cfg.mode, Mode::Sdp);
    EXPECT_EQ(cfg.seed, 42u);
    EXPECT_EQ(cfg.attack.kind, AttackKind::Scan);
    EXPECT_EQ(cfg.attack.port_lo, 0);
    EXPECT_EQ(cfg.attack.port_hi, 999);
    EXPECT_TRUE(cfg.mtd.enabled);
    EXPECT_EQ(cfg.mtd.pool.size(), 254u);
    ASSERT_EQ(cfg.services.size(), 2u);
    EXPECT_EQ(cfg.policy.at("attacker").size(), 0u);
}

TEST(Scenario, MinimalDefaults) {
    auto cfg = parse_scenario(kBase);
    EXPECT_EQ(cfg.topology_source, "fig1");
    EXPECT_EQ(cfg.t_ms, 30000u);
    EXPECT_EQ(cfg.spa_port, 62201);
    ASSERT_EQ(cfg.flows.size(), 1u);
    EXPECT_TRUE(cfg.flows[0].spa);
    EXPECT_EQ(cfg.attack.kind, AttackKind::None);
}

TEST(Scenario, ValidationErrors) {
    EXPECT_EQ(code_of("scenario.name = t\n"), Errc::ValidationError);  // missing seed
    EXPECT_EQ(code_of(kBase + "mtd.enabled = true\nmtd.pool = 10.0.5.1-10.0.5.3\n"), Errc::ValidationError);
    EXPECT_EQ(code_of(kBase + "mtd.enabled = true\n"), Errc::ValidationError);
    EXPECT_EQ(code_of(kBase + "policy.nobody = amf_smf\n"), Errc::ValidationError);
    EXPECT_EQ(code_of(kBase + "service.upf = gateway1 44 8888\n"), Errc::ValidationError);
    EXPECT_EQ(code_of(kBase + "service_model.capacity_pps = 300\n"), Errc::ValidationError);
    EXPECT_EQ(code_of(kBase + "attack.kind = replay\nattack.victim = nope\n"), Errc::ValidationError);
    EXPECT_EQ(code_of(kBase + "flow.g.client = ue_gnb\nflow.g.service = upf\n"), Errc::ValidationError);
    EXPECT_NE(message_of("scenario.name = t\n").find("seed"), std::string::npos);
}

TEST(Scenario, ParseErrorsCarryLineAndKey) {
    EXPECT_EQ(code_of(kBase + "scenario.seed = 2\n"), Errc::ParseError);
    auto msg = message_of(kBase + "scenario.seed = 2\n");
    EXPECT_NE(msg.find("line 8"), std::string::npos) << msg;
    EXPECT_NE(msg.find("scenario.seed"), std::string::npos) << msg;

    EXPECT_EQ(code_of(kBase + "bogus.key = 1\n"), Errc::ParseError);
    EXPECT_EQ(code_of(kBase + "sdp.t_ms = ten\n"), Errc::ParseError);
    EXPECT_EQ(code_of(kBase + "no equals sign\n"), Errc::ParseError);
    EXPECT_EQ(code_of(kBase + "keys.ue_gnb = abcd\n"), Errc::ParseError);
    EXPECT_EQ(code_of(kBase + "mtd.pool = 10.9.0.9-10.9.0.1\n"), Errc::ParseError);
    EXPECT_EQ(code_of(kBase + "expect.grants = ~ 3\n"), Errc::ParseError);
    // node lines only make sense for an inline topology
    EXPECT_EQ(code_of(kBase + "topology.node = extra service 10.1.1.1\n"), Errc::ParseError);
}

TEST(Scenario, InlineTopology) {
    const std::string text = R"(scenario.name = tiny
scenario.seed = 3
topology.preset = inline
topology.node = c initiating 10.1.0.1
topology.node = g accepting 10.1.0.2
topology.node = k controller 10.1.0.3
topology.node = s service 10.1.0.4
topology.link = c g 2 N1
topology.link = g k 1 mgmt
topology.link = g s 5 N2
topology.latency = g s 7
topology.protect = g, s
sdp.entry_gateway = g
baseline.server = s
service.s = g 80 8080
policy.c = s
flow.x.client = c
flow.x.service = s
flow.x.packets = 1
)";
    auto cfg = parse_scenario(text);
    EXPECT_EQ(cfg.topology.nodes().size(), 4u);
    auto r = cfg.topology.route(*cfg.topology.find("c"), *cfg.topology.find("s"));
    ASSERT_TRUE(r);
    EXPECT_EQ(r->latency_ms, 9u);
    EXPECT_EQ(cfg.topology.protected_set().size(), 2u);

    // a controller wired straight to a client breaks the topology invariant
    auto broken = text + "topology.link = c k 1 mgmt\n";
    EXPECT_EQ(code_of(broken), Errc::ValidationError);
}

TEST(Scenario, Expectations) {
    auto cfg = parse_scenario(kBase + "expect.grants = >= 1 ; happy path\nexpect.denials = 0\n");
    ASSERT_EQ(cfg.expectations.size(), 2u);
    EXPECT_EQ(cfg.expectations[0].op, CompareOp::Ge);
    EXPECT_EQ(cfg.expectations[0].cites, "happy path");
    EXPECT_EQ(cfg.expectations[0].line, 8u);
    EXPECT_EQ(cfg.expectations[1].op, CompareOp::Eq);
}

TEST(Scenario, MissingFileIsIoError) {
    try {
        load_scenario("/nonexistent/x.cfg");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::IoError);
    }
}
