#include <gtest/gtest.h>

#include <set>

#include "sdpmtd/error.hpp"
#include "sdpmtd/mtd.hpp"

using namespace sdpmtd;

namespace {

constexpr Ipv4 kGw = 0x0a000101;
constexpr Ipv4 kAmf = 0x0a000501;
constexpr Ipv4 kUpf = 0x0a000601;
constexpr Ipv4 kUe = 0x0a00000a;
constexpr Ipv4 kPoolBase = 0x0a090001;

std::vector<Ipv4> pool(std::size_t n) {
    std::vector<Ipv4> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(kPoolBase + static_cast<Ipv4>(i));
    return out;
}

MovingTargetDefense make(std::size_t pool_size = 10, std::uint64_t seed = 1, std::uint64_t lifespan = 10000) {
    MtdConfig c;
    c.pool = pool(pool_size);
    c.lifespan_ms = lifespan;
    c.gateway_real = kGw;
    return MovingTargetDefense(c, {kUpf, kGw, kAmf}, {kGw, kAmf, kUpf, kUe}, DeterministicRng(seed));
}

SimPacket to(Ipv4 dst, std::uint16_t port, std::uint16_t src_port = 40000) {
    SimPacket p;
    p.kind = PacketKind::Data;
    p.src = NetAddress{kUe, src_port};
    p.dst = NetAddress{dst, port};
    return p;
}

MtdDenyReason denied(const MtdAction& a) { return std::get<MtdDeny>(a).reason; }

} // namespace

TEST(Mtd, ConstructorValidation) {
    MtdConfig c;
    c.gateway_real = kGw;
    c.pool = {kPoolBase, kAmf};
    EXPECT_THROW(MovingTargetDefense(c, {kGw, kAmf}, {kGw, kAmf}, DeterministicRng(1)), Error);
    c.pool = {kPoolBase, kPoolBase};
    EXPECT_THROW(MovingTargetDefense(c, {kGw, kAmf}, {kGw, kAmf}, DeterministicRng(1)), Error);
    c.pool = pool(4);
    EXPECT_THROW(MovingTargetDefense(c, {kAmf}, {kGw, kAmf}, DeterministicRng(1)), Error);
    c.lifespan_ms = 0;
    EXPECT_THROW(MovingTargetDefense(c, {kGw, kAmf}, {kGw, kAmf}, DeterministicRng(1)), Error);
}

TEST(Mtd, MutationAssignsDistinctPoolAddresses) {
    auto m = make();
    EXPECT_EQ(m.epoch(), 0u);
    for (std::uint64_t e = 1; e <= 20; ++e) {
        auto fresh = m.mutate(e * 10000);
        EXPECT_EQ(m.epoch(), e);
        ASSERT_EQ(fresh.size(), 3u);
        std::set<Ipv4> vips;
        for (const auto& mp : fresh) {
            EXPECT_TRUE(m.owns(mp.virt));
            EXPECT_EQ(mp.epoch, e);
            vips.insert(mp.virt);
            EXPECT_EQ(m.current_real(mp.virt), mp.real);
            EXPECT_EQ(m.current_vip(mp.real), mp.virt);
        }
        EXPECT_EQ(vips.size(), 3u);
        // no open flows, so nothing is held back
        EXPECT_EQ(m.available().size() + 3, 10u);
    }
}

TEST(Mtd, PoolExhaustedLeavesStateAlone) {
    auto m = make(5);
    m.mutate(0);
    auto before = m.current_mappings();
    auto a = m.translate_inbound(to(*m.current_vip(kAmf), 44), 1);
    ASSERT_TRUE(std::holds_alternative<Rewritten>(a));
    // 2 free, 3 needed
    try {
        m.mutate(10000);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::PoolExhausted);
    }
    EXPECT_EQ(m.epoch(), 1u);
    EXPECT_EQ(m.current_mappings(), before);
}

TEST(Mtd, InboundDecisions) {
    auto m = make();
    m.mutate(0);
    const Ipv4 amf_v = *m.current_vip(kAmf);

    EXPECT_EQ(denied(m.translate_inbound(to(kAmf, 7777), 1)), MtdDenyReason::RealIp);
    EXPECT_EQ(denied(m.translate_inbound(to(kUe, 1), 1)), MtdDenyReason::RealIp);
    EXPECT_EQ(denied(m.translate_inbound(to(0x0b000001, 1), 1)), MtdDenyReason::Untracked);

    auto a = m.translate_inbound(to(amf_v, 44), 5);
    ASSERT_TRUE(std::holds_alternative<Rewritten>(a));
    const auto& p = std::get<Rewritten>(a).packet;
    EXPECT_EQ(p.dst, (NetAddress{kAmf, 44}));
    EXPECT_EQ(p.src.ip, *m.current_vip(kGw));
    EXPECT_EQ(m.open_connections(), 1u);

    // lifespan over without a mutation: fresh traffic is refused, the tracked flow is not
    auto fresh_late = to(amf_v, 44, 41000);
    EXPECT_EQ(denied(m.translate_inbound(fresh_late, 10000)), MtdDenyReason::ExpiredVip);
    EXPECT_TRUE(std::holds_alternative<Rewritten>(m.translate_inbound(to(amf_v, 44), 10000)));

    ASSERT_EQ(m.denial_log().size(), 4u);
    EXPECT_EQ(m.denial_log()[0].to_line(), "1,deny,10.0.0.10:40000,10.0.5.1:7777,real_ip");
}

TEST(Mtd, TrackedFlowSurvivesMutations) {
    auto m = make();
    m.mutate(0);
    const Ipv4 v1 = *m.current_vip(kAmf);
    auto first = std::get<Rewritten>(m.translate_inbound(to(v1, 44), 1)).packet;
    for (std::uint64_t e = 2; e <= 5; ++e) {
        m.mutate((e - 1) * 10000);
        ASSERT_NE(*m.current_vip(kAmf), v1);
        auto again = m.translate_inbound(to(v1, 44), (e - 1) * 10000 + 1);
        ASSERT_TRUE(std::holds_alternative<Rewritten>(again)) << e;
        EXPECT_EQ(std::get<Rewritten>(again).packet.dst.ip, kAmf);
        EXPECT_EQ(std::get<Rewritten>(again).packet.src, first.src);  // same NAT binding
        // a fresh flow to the stale vIP is refused
        EXPECT_EQ(denied(m.translate_inbound(to(v1, 44, 42000), (e - 1) * 10000 + 1)), MtdDenyReason::ExpiredVip);
        EXPECT_FALSE(m.available().contains(v1));
    }
    EXPECT_GE(m.held_count(), 1u);
}

TEST(Mtd, OutboundRestoresClientView) {
    auto m = make();
    m.mutate(0);
    const Ipv4 v = *m.current_vip(kUpf);
    auto req = to(v, 45);
    auto in = std::get<Rewritten>(m.translate_inbound(req, 1)).packet;

    SimPacket reply;
    reply.kind = PacketKind::Reply;
    reply.src = in.dst;
    reply.dst = in.src;
    auto out = m.translate_outbound(reply, 2);
    EXPECT_EQ(out.src, req.dst);
    EXPECT_EQ(out.dst, req.src);

    SimPacket stray = reply;
    stray.dst.port = static_cast<std::uint16_t>(stray.dst.port + 1);
    try {
        m.translate_outbound(stray, 2);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::UntrackedFlow);
    }
}

TEST(Mtd, RoundTripOverRandomizedFlows) {
    // inbound then outbound gives back the exact client-visible addresses
    auto m = make(64, 9);
    DeterministicRng r(77);
    const Ipv4 reals[] = {kGw, kAmf, kUpf};
    for (int epoch = 0; epoch < 6; ++epoch) {
        m.mutate(static_cast<std::uint64_t>(epoch) * 10000);
        for (int i = 0; i < 50; ++i) {
            Ipv4 target = reals[r.uniform(3)];
            SimPacket req;
            req.kind = PacketKind::Data;
            req.src = NetAddress{static_cast<Ipv4>(0x0c000000 + r.uniform(1000)),
                                 static_cast<std::uint16_t>(1024 + r.uniform(60000))};
            req.dst = NetAddress{*m.current_vip(target), static_cast<std::uint16_t>(r.uniform(65536))};
            const std::uint64_t now = static_cast<std::uint64_t>(epoch) * 10000 + 1;
            auto in = std::get<Rewritten>(m.translate_inbound(req, now)).packet;
            EXPECT_EQ(in.dst.ip, target);
            SimPacket reply;
            reply.kind = PacketKind::Reply;
            reply.src = in.dst;
            reply.dst = in.src;
            auto out = m.translate_outbound(reply, now);
            EXPECT_EQ(out.src, req.dst);
            EXPECT_EQ(out.dst, req.src);
        }
        m.gc_connections(static_cast<std::uint64_t>(epoch) * 10000 + 5000, 1);
    }
}

TEST(Mtd, GcBoundaryAndPoolAccounting) {
    auto m = make();
    m.mutate(0);
    const std::size_t free_before = m.available().size();
    const Ipv4 v1 = *m.current_vip(kAmf);
    ASSERT_TRUE(std::holds_alternative<Rewritten>(m.translate_inbound(to(v1, 44), 0)));
    m.mutate(10000);
    // v1 and the gateway's old vIP (the NAT source) are held
    EXPECT_EQ(m.held_count(), 2u);
    EXPECT_EQ(m.gc_connections(59999, 60000), 0u);
    EXPECT_EQ(m.gc_connections(60001, 60000), 1u);
    EXPECT_EQ(m.held_count(), 0u);
    EXPECT_EQ(m.available().size(), free_before);
    EXPECT_TRUE(m.available().contains(v1));
}

TEST(Mtd, CloseConnectionReleasesHeldVips) {
    auto m = make();
    m.mutate(0);
    const Ipv4 v1 = *m.current_vip(kAmf);
    m.translate_inbound(to(v1, 44), 0);
    m.mutate(10000);
    EXPECT_TRUE(m.close_connection(NetAddress{kUe, 40000}, NetAddress{v1, 44}, 10001));
    EXPECT_FALSE(m.close_connection(NetAddress{kUe, 40000}, NetAddress{v1, 44}, 10001));
    EXPECT_EQ(m.held_count(), 0u);
    EXPECT_EQ(denied(m.translate_inbound(to(v1, 44), 10002)), MtdDenyReason::ExpiredVip);
}

TEST(Mtd, SeedsGiveDifferentSequences) {
    auto a = make(200, 1);
    auto b = make(200, 2);
    bool differ = false;
    for (int i = 0; i < 3; ++i) {
        auto x = a.mutate(i * 10000ull);
        auto y = b.mutate(i * 10000ull);
        differ = differ || x != y;
    }
    EXPECT_TRUE(differ);
}

TEST(Mtd, MutationLogLines) {
    auto m = make();
    m.mutate(0);
    m.mutate(10000);
    ASSERT_EQ(m.mutation_log().size(), 6u);
    const auto& first = m.mutation_log()[0];
    EXPECT_EQ(first.to_line(), "0,1,10.0.1.1,-," + ip_to_string(first.new_vip));
    const auto& later = m.mutation_log()[3];
    EXPECT_EQ(later.to_line(), "10000,2,10.0.1.1," + ip_to_string(first.new_vip) + "," + ip_to_string(later.new_vip));
}

// Independent timeline: each fresh packet is classified by a model that only
// tracks which vIP each real host had per epoch and which flows were opened.
TEST(Mtd, TimelineOracleTrackedVersusUntracked) {
    auto m = make(1000, 5);
    std::map<Ipv4, std::vector<Ipv4>> history;  // real -> vIP per epoch
    std::set<std::pair<NetAddress, NetAddress>> opened;
    DeterministicRng r(123);
    const Ipv4 reals[] = {kGw, kAmf, kUpf};
    for (int epoch = 1; epoch <= 6; ++epoch) {
        const std::uint64_t t0 = static_cast<std::uint64_t>(epoch - 1) * 10000;
        m.mutate(t0);
        for (auto real : reals) history[real].push_back(*m.current_vip(real));
        for (int i = 0; i < 40; ++i) {
            Ipv4 real = reals[r.uniform(3)];
            auto& h = history[real];
            Ipv4 dst = h[r.uniform(h.size())];
            auto pkt = to(dst, 44, static_cast<std::uint16_t>(40000 + r.uniform(4)));
            bool current = dst == h.back();
            bool tracked = opened.contains({pkt.src, pkt.dst});
            auto a = m.translate_inbound(pkt, t0 + 1 + i);
            if (current || tracked) {
                ASSERT_TRUE(std::holds_alternative<Rewritten>(a));
                EXPECT_EQ(std::get<Rewritten>(a).packet.dst.ip, real);
                opened.insert({pkt.src, pkt.dst});
            } else {
                ASSERT_TRUE(std::holds_alternative<MtdDeny>(a));
                EXPECT_EQ(denied(a), MtdDenyReason::ExpiredVip);
            }
        }
    }
}
