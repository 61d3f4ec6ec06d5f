#include "axsim/mac_mu.h"
#include "gen.h"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace axsim;
using axsim::test::Gen;

namespace
{

BsrTable
Table(std::initializer_list<NodeId> stas, uint64_t bytes = 10000)
{
    BsrTable t;
    for (NodeId s : stas)
    {
        BsrIngest(t, s, static_cast<uint16_t>(s), AccessCategory::Be, bytes, SimTime());
    }
    return t;
}

TriggerFrame
Fig17Frame()
{
    RuLayout l = LayoutFromTones(20, {106, 26, 106});
    TriggerFrame tf;
    tf.bandwidthMhz = 20;
    tf.ltfMode = MuMimoLtfMode::Mu;
    tf.users.push_back(UserInfo{1, 1, l.rus[0], std::nullopt, 5});
    tf.users.push_back(UserInfo{kAidRandomAccess, kNoNode, l.rus[1], std::nullopt, 0});
    tf.users.push_back(UserInfo{2, 2, l.rus[2], SsAllocation{0, 1}, 5});
    tf.users.push_back(UserInfo{3, 3, l.rus[2], SsAllocation{1, 1}, 5});
    return tf;
}

} // namespace

TEST_CASE("trigger type codes")
{
    CHECK(static_cast<int>(TriggerType::MuBar) == 2);
    CHECK(static_cast<int>(TriggerType::MuRts) == 3);
    CHECK(static_cast<int>(TriggerType::Bsrp) == 4);
}

TEST_CASE("trigger frame validation")
{
    TriggerFrame tf = Fig17Frame();
    CHECK(ValidateTriggerFrame(tf).empty());
    CHECK(tf.RandomAccessRuCount() == 1);
    CHECK(tf.ScheduledUserCount() == 3);

    TriggerFrame ra = tf;
    ra.users[1].ss = SsAllocation{0, 1};
    CHECK_FALSE(ValidateTriggerFrame(ra).empty());

    TriggerFrame dup = tf;
    dup.users[2].aid12 = 1;
    CHECK_FALSE(ValidateTriggerFrame(dup).empty());

    TriggerFrame reserved = tf;
    reserved.users[0].aid12 = kAidReserved;
    CHECK_FALSE(ValidateTriggerFrame(reserved).empty());

    TriggerFrame small = tf;
    RuLayout nine = LayoutFromTones(20, std::vector<uint32_t>(9, 26));
    small.users = {UserInfo{1, 1, nine.rus[0], SsAllocation{0, 1}, 0}, UserInfo{2, 2, nine.rus[0], SsAllocation{1, 1}, 0}};
    CHECK_FALSE(ValidateTriggerFrame(small).empty());
}

TEST_CASE("control frame airtime grows with user count")
{
    CHECK(TriggerFrameBytes(4) - TriggerFrameBytes(3) == 5);
    CHECK(TriggerFrameDuration(18) > TriggerFrameDuration(1));
    CHECK(MultiStaBaDuration(9) > MultiStaBaDuration(1));
}

TEST_CASE("random-per-RU assignment is a uniform bijection")
{
    std::vector<RuLayout> cat = LayoutCatalog(20);
    SchedulePolicy pol;
    pol.layoutTones = {106, 26, 106};
    BsrTable t = Table({1, 2, 3});
    RngStream r(3, "sched");
    int count[3][3] = {};
    const int n = 10000;
    for (int i = 0; i < n; ++i)
    {
        TriggerFrame tf = BuildSchedule(t, cat, 20, pol, r);
        REQUIRE(tf.users.size() == 3);
        std::set<NodeId> seen;
        for (size_t k = 0; k < 3; ++k)
        {
            seen.insert(tf.users[k].sta);
            count[k][tf.users[k].sta - 1]++;
        }
        REQUIRE(seen.size() == 3);
    }
    for (auto& row : count)
    {
        for (int c : row)
        {
            CHECK(c == doctest::Approx(n / 3.0).epsilon(0.05));
        }
    }
}

TEST_CASE("random-access fraction marks the smallest RUs")
{
    SchedulePolicy pol;
    pol.layoutTones = {106, 26, 106};
    pol.raFraction = 0.3;
    RngStream r(4, "sched");
    TriggerFrame tf = BuildSchedule(Table({1, 2}), LayoutCatalog(20), 20, pol, r);
    CHECK(tf.RandomAccessRuCount() == 1);
    for (const UserInfo& u : tf.users)
    {
        if (u.aid12 == kAidRandomAccess)
        {
            CHECK(u.ru.tone == RuTone::T26);
            CHECK_FALSE(u.ss.has_value());
        }
    }
    CHECK(ValidateTriggerFrame(tf).empty());
}

TEST_CASE("empty BSR table and no RA leaves the TF empty")
{
    RngStream r(4, "sched");
    TriggerFrame tf = BuildSchedule(BsrTable{}, LayoutCatalog(20), 20, SchedulePolicy{}, r);
    CHECK(tf.users.empty());
}

TEST_CASE("MU-MIMO groups only on admissible RUs")
{
    SchedulePolicy pol;
    pol.muMimo = true;
    pol.layoutTones = std::vector<uint32_t>(9, 26);
    RngStream r(5, "sched");
    TriggerFrame tf = BuildSchedule(Table({1, 2, 3, 4}), LayoutCatalog(20), 20, pol, r);
    for (const UserInfo& u : tf.users)
    {
        CHECK_FALSE(u.ss.has_value());
    }
    CHECK(ValidateTriggerFrame(tf).empty());

    pol.layoutTones = {106, 26, 106};
    TriggerFrame g = BuildSchedule(Table({1, 2, 3, 4, 5}), LayoutCatalog(20), 20, pol, r);
    CHECK(ValidateTriggerFrame(g).empty());
    CHECK(g.users.size() == 5);
}

TEST_CASE("MU-MIMO eligibility filter keeps weak STAs single")
{
    SchedulePolicy pol;
    pol.muMimo = true;
    pol.layoutTones = {242};
    pol.muMimoCandidate = [](NodeId s) { return s % 2 == 0; };
    Gen g(51);
    for (int c = 0; c < 200; ++c)
    {
        RngStream r(g.Int(0, 1 << 30), "sched");
        TriggerFrame tf = BuildSchedule(Table({1, 2, 3, 4}), LayoutCatalog(20), 20, pol, r);
        REQUIRE(ValidateTriggerFrame(tf).empty());
        if (tf.users.size() > 1)
        {
            for (const UserInfo& u : tf.users)
            {
                REQUIRE(u.sta % 2 == 0);
            }
        }
    }
}

TEST_CASE("property: generated schedules are always valid")
{
    Gen g(52);
    std::vector<uint32_t> bws{20, 40, 80, 160};
    for (int c = 0; c < axsim::test::kCases; ++c)
    {
        uint32_t bw = g.Pick(bws);
        BsrTable t;
        size_t n = g.Int(0, 40);
        for (size_t i = 0; i < n; ++i)
        {
            BsrIngest(t, static_cast<NodeId>(i + 1), static_cast<uint16_t>(i + 1), AccessCategory::Be, g.Int(0, 5000),
                      SimTime());
        }
        SchedulePolicy pol;
        pol.muMimo = g.Coin();
        pol.usersPerMimoRu = static_cast<uint32_t>(g.Int(2, 4));
        pol.raFraction = g.Coin(0.3) ? g.Real(0.0, 0.5) : 0.0;
        RngStream r(g.Int(0, 1 << 30), "sched");
        TriggerFrame tf = BuildSchedule(t, LayoutCatalog(bw), bw, pol, r);
        auto v = ValidateTriggerFrame(tf);
        INFO((v.empty() ? std::string() : v.front()));
        REQUIRE(v.empty());
        for (const UserInfo& u : tf.users)
        {
            if (!IsRandomAccessAid(u.aid12))
            {
                REQUIRE(t.count(u.sta) == 1);
            }
        }
    }
}

TEST_CASE("UORA first round of the reference walkthrough")
{
    std::vector<uint32_t> init{3, 5, 7, 8, 7, 0};
    std::vector<bool> eligible;
    std::vector<uint32_t> after;
    ScriptedRandom none({});
    for (uint32_t o : init)
    {
        OboState s;
        s.obo = o;
        eligible.push_back(UoraUpdate(s, 5, none));
        after.push_back(*s.obo);
    }
    CHECK(eligible == std::vector<bool>{true, true, false, false, false, true});
    CHECK(after[2] == 2);
    CHECK(after[3] == 3);
    CHECK(after[4] == 2);
}

TEST_CASE("UORA boundary and no-RA cases")
{
    ScriptedRandom none({});
    OboState s;
    s.obo = 5;
    UoraConfig strict{true};
    CHECK_FALSE(UoraUpdate(s, 5, none, strict));
    CHECK(*s.obo == 0);
    CHECK(UoraUpdate(s, 5, none, strict));

    OboState z;
    z.obo = 4;
    CHECK_FALSE(UoraUpdate(z, 0, none));
    CHECK(*z.obo == 4);

    OboState fresh;
    ScriptedRandom draw({6});
    CHECK_FALSE(UoraUpdate(fresh, 2, draw));
    CHECK(*fresh.obo == 4);
}

TEST_CASE("property: UORA conservation")
{
    Gen g(53);
    RngStream r(9, "uora");
    for (int c = 0; c < axsim::test::kCases; ++c)
    {
        OboState s;
        s.ocw = static_cast<uint32_t>(g.Int(7, 31));
        s.obo = static_cast<uint32_t>(g.Int(0, s.ocw));
        uint32_t before = *s.obo;
        uint32_t n = static_cast<uint32_t>(g.Int(1, 9));
        bool e = UoraUpdate(s, n, r);
        REQUIRE((*s.obo == 0 || *s.obo == before - n));
        if (before < n)
        {
            REQUIRE(e);
            REQUIRE(*s.obo == 0);
        }
        if (before > n)
        {
            REQUIRE_FALSE(e);
        }
        REQUIRE(*s.obo <= s.ocw);
    }
}

TEST_CASE("UORA transmit phase: collision, success and deferral")
{
    // STA picks in order: 1->RU0, 3->RU2, 4->RU3, 5->RU2, 7 busy
    ScriptedRandom r({0, 2, 3, 2, 1});
    std::vector<UoraCandidate> e{{1, false}, {3, false}, {4, false}, {5, false}, {7, true}};
    UoraTransmitResult res = UoraTransmitPhase(e, 5, r);
    CHECK(res.perRu[0].kind == RaRuOutcomeKind::Success);
    CHECK(res.perRu[2].kind == RaRuOutcomeKind::Collision);
    CHECK(res.perRu[3].kind == RaRuOutcomeKind::Success);
    CHECK(res.perRu[1].kind == RaRuOutcomeKind::Idle);
    CHECK(res.deferred == std::vector<NodeId>{7});

    RngStream rr(1, "uora");
    UoraTransmitResult empty = UoraTransmitPhase({}, 5, rr);
    for (const auto& o : empty.perRu)
    {
        CHECK(o.kind == RaRuOutcomeKind::Idle);
    }
}

TEST_CASE("lone UORA transmitter succeeds with probability 1 - PER")
{
    RngStream r(2, "uora");
    RngStream per(3, "per");
    int ok = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i)
    {
        auto res = UoraTransmitPhase({{1, false}}, 5, r, [&](NodeId) { return per.UniformReal() >= 0.2; });
        for (const auto& o : res.perRu)
        {
            ok += o.kind == RaRuOutcomeKind::Success;
        }
    }
    CHECK(ok / static_cast<double>(n) == doctest::Approx(0.8).epsilon(0.02));
}

TEST_CASE("OCW update rules")
{
    OboState s;
    s.ocw = 7;
    OcwOnResult(s, true);
    CHECK(s.ocw == s.ocwMin);
    s.ocw = 7;
    OcwOnResult(s, false);
    CHECK(s.ocw == 15);
    s.ocw = 31;
    OcwOnResult(s, false);
    CHECK(s.ocw == 31);
}

TEST_CASE("property: OCW never leaves its bounds")
{
    Gen g(54);
    OboState s;
    for (int c = 0; c < 2000; ++c)
    {
        OcwOnResult(s, g.Coin(0.3));
        REQUIRE(s.ocw >= s.ocwMin);
        REQUIRE(s.ocw <= s.ocwMax);
    }
}

TEST_CASE("UL MU round with the reference participants")
{
    TriggerFrame tf = Fig17Frame();
    tf.ulDuration = SimTime::Us(500);
    MacTiming t;
    std::vector<TbResponse> rs;
    rs.push_back({1, tf.users[0].ru, false, SimTime::Us(500), {true, true}});
    rs.push_back({2, tf.users[2].ru, false, SimTime::Us(300), {true}});
    rs.push_back({3, tf.users[3].ru, false, SimTime::Us(420), {true}});
    rs.push_back({5, tf.users[1].ru, true, SimTime::Us(100), {true}});
    BackoffState ap;
    UlMuRoundResult res = UlMuRound(tf, SimTime::Us(100), rs, t, ap);
    CHECK_FALSE(res.accessFailure);
    CHECK(res.mba.bitmaps.size() == 4);
    for (SimTime e : res.ends)
    {
        CHECK(e == SimTime::Us(616));
    }
    CHECK(res.mbaEnd == SimTime::Us(632) + MultiStaBaDuration(4));
}

TEST_CASE("UL MU round with nothing decoded fails and doubles cw")
{
    TriggerFrame tf = Fig17Frame();
    tf.ulDuration = SimTime::Us(200);
    BackoffState ap;
    std::vector<TbResponse> rs{{1, tf.users[0].ru, false, SimTime::Us(200), {false, false}}};
    UlMuRoundResult res = UlMuRound(tf, SimTime(), rs, MacTiming{}, ap);
    CHECK(res.accessFailure);
    CHECK(ap.cw == 31);
}

TEST_CASE("property: padded HE-TB PPDUs end on the same nanosecond and MBA covers exactly the decoded")
{
    Gen g(55);
    for (int c = 0; c < axsim::test::kCases; ++c)
    {
        TriggerFrame tf;
        tf.ulDuration = SimTime::Ns(g.Int(10000, 3000000));
        std::vector<TbResponse> rs;
        std::set<NodeId> decoded;
        size_t n = g.Int(1, 18);
        for (size_t i = 0; i < n; ++i)
        {
            TbResponse r;
            r.sta = static_cast<NodeId>(i + 1);
            r.dataAirtime = SimTime::Ns(g.Int(0, tf.ulDuration.GetNs()));
            size_t k = g.Int(1, 8);
            for (size_t j = 0; j < k; ++j)
            {
                r.mpduOk.push_back(g.Coin(0.6));
            }
            if (r.Decoded())
            {
                decoded.insert(r.sta);
            }
            rs.push_back(r);
        }
        BackoffState ap;
        SimTime tfEnd = SimTime::Ns(g.Int(0, 1000000));
        UlMuRoundResult res = UlMuRound(tf, tfEnd, rs, MacTiming{}, ap);
        for (SimTime e : res.ends)
        {
            REQUIRE(e.GetNs() == (tfEnd + SimTime::Us(16) + tf.ulDuration).GetNs());
        }
        std::set<NodeId> acked;
        for (const auto& [s, bm] : res.mba.bitmaps)
        {
            acked.insert(s);
        }
        REQUIRE(acked == decoded);
        REQUIRE(res.accessFailure == decoded.empty());
    }
}

TEST_CASE("BSR piggyback and BSRP rounds")
{
    BsrTable t;
    BsrIngest(t, 1, 1, AccessCategory::Be, 3000, SimTime::Us(10));
    CHECK(t.at(1).freshness == SimTime::Us(10));
    BsrpRoundResult r = BsrpRound(t, {{4, 4, 1500, true}, {5, 5, 800, false}}, SimTime::Us(20));
    CHECK(r.updated == std::vector<NodeId>{4});
    CHECK_FALSE(r.mbaSent);
    CHECK(t.count(4) == 1);
    CHECK(t.count(5) == 0);
    BsrIngest(t, 1, 1, AccessCategory::Be, 0, SimTime::Us(30));
    CHECK(t.count(1) == 0);
}

TEST_CASE("NDP feedback tone halves")
{
    SubcarrierRange a = NdpFeedbackEncode(0, 0);
    CHECK(a.first == 0);
    CHECK(a.last == 5);
    SubcarrierRange b = NdpFeedbackEncode(1, 17);
    CHECK(b.first == 17 * 12 + 6);
    CHECK(b.last == 17 * 12 + 11);
    CHECK_THROWS_AS(NdpFeedbackEncode(0, 18), std::out_of_range);
    std::set<uint32_t> used;
    for (uint32_t sta = 0; sta < 9; ++sta)
    {
        for (uint32_t bit = 0; bit < 2; ++bit)
        {
            used.insert(sta * 2 + bit);
            NdpFeedbackEncode(static_cast<int>(bit), sta * 2 + bit);
        }
    }
    CHECK(used.size() == 18);
}

TEST_CASE("DL MU round pads users to the longest payload")
{
    RuLayout l = LayoutFromTones(20, {52, 52, 26, 106});
    CHECK(ValidateLayout(l).empty());
    std::vector<DlUser> users{{1, l.rus[0], SimTime::Us(400), {true}, true},
                              {2, l.rus[1], SimTime::Us(250), {true}, true},
                              {3, l.rus[2], SimTime::Us(300), {true}, true},
                              {4, l.rus[3], SimTime::Us(400), {true, true}, true}};
    BackoffState ap;
    MacTiming t;
    SimTime pre = SimTime::Us(60);
    SimTime ba = SimTime::Us(50);
    DlMuRoundResult res = DlMuRound(users, DlBaMode::SigAIndicated, SimTime(), pre, ba, t, ap);
    CHECK(res.ppduDuration == SimTime::Us(460));
    CHECK(res.baReceived.size() == 4);
    CHECK(res.end == SimTime::Us(460 + 16 + 50));
    DlMuRoundResult bar = DlMuRound(users, DlBaMode::MuBar, SimTime(), pre, ba, t, ap);
    CHECK(bar.end == SimTime::Us(460 + 16) + MuBarDuration(4) + SimTime::Us(16 + 50));
}

TEST_CASE("DL MU round with every PER draw failed waits EIFS")
{
    std::vector<DlUser> users{{1, Ru{}, SimTime::Us(100), {false}, true}};
    BackoffState ap;
    MacTiming t;
    DlMuRoundResult res = DlMuRound(users, DlBaMode::SigAIndicated, SimTime(), SimTime::Us(40), SimTime::Us(50), t, ap);
    CHECK(res.failure);
    CHECK(res.end == SimTime::Us(140) + Eifs(t));
    CHECK(ap.cw == 31);
}

TEST_CASE("per-RU power split")
{
    CHECK(PerRuPowerDbm(18.0, 4) == doctest::Approx(18.0 - 10.0 * std::log10(4.0)));
    CHECK(PerRuPowerDbm(18.0, 1) == 18.0);
}

TEST_CASE("cascade content rules")
{
    CHECK(ValidateCascadeAmpdu({Direction::Downlink, 1, 3, 1}, true).empty());
    CHECK_FALSE(ValidateCascadeAmpdu({Direction::Downlink, 2, 3, 1}, true).empty());
    CHECK_FALSE(ValidateCascadeAmpdu({Direction::Downlink, 0, 3, 0}, true).empty());
    CHECK(ValidateCascadeAmpdu({Direction::Downlink, 1, 0, 0}, false).empty());
    CHECK_FALSE(ValidateCascadeAmpdu({Direction::Uplink, 1, 2, 1}, false).empty());
}

TEST_CASE("four-round cascade structure")
{
    CascadePlanInput in;
    in.dlRoundAirtime = SimTime::Us(300);
    in.ulRoundAirtime = SimTime::Us(300);
    in.finalAckAirtime = SimTime::Us(60);
    in.dlRounds = 2;
    in.ulRounds = 2;
    CascadeLog log = CascadedTxop(in);
    REQUIRE(log.rounds.size() == 5);
    std::vector<Direction> dirs;
    for (const auto& r : log.rounds)
    {
        dirs.push_back(r.dir);
    }
    CHECK(dirs == std::vector<Direction>{Direction::Downlink, Direction::Uplink, Direction::Downlink,
                                         Direction::Uplink, Direction::Downlink});
    CHECK(log.rounds.back().finalAck);
    CHECK(log.violations.empty());
}

TEST_CASE("cascade without further UL demand ends with a trigger-free DL A-MPDU")
{
    CascadePlanInput in;
    in.dlRoundAirtime = SimTime::Us(200);
    in.ulRoundAirtime = SimTime::Us(200);
    in.finalAckAirtime = SimTime::Us(60);
    in.dlRounds = 3;
    in.ulRounds = 1;
    CascadeLog log = CascadedTxop(in);
    CHECK(log.violations.empty());
    const CascadeRound* lastDl = nullptr;
    for (const auto& r : log.rounds)
    {
        if (r.dir == Direction::Downlink && !r.finalAck)
        {
            lastDl = &r;
        }
    }
    REQUIRE(lastDl);
    CHECK(lastDl->content.triggers == 0);
}

TEST_CASE("property: generated cascades validate and mutations are caught")
{
    Gen g(56);
    for (int c = 0; c < axsim::test::kCases; ++c)
    {
        CascadePlanInput in;
        in.dlRoundAirtime = SimTime::Us(g.Int(50, 1500));
        in.ulRoundAirtime = SimTime::Us(g.Int(50, 1500));
        in.finalAckAirtime = SimTime::Us(g.Int(40, 100));
        in.dlRounds = static_cast<uint32_t>(g.Int(0, 6));
        in.ulRounds = static_cast<uint32_t>(g.Int(0, 6));
        in.dlMpdusPerRound = static_cast<uint32_t>(g.Int(1, 10));
        CascadeLog log = CascadedTxop(in);
        REQUIRE(log.violations.empty());
        for (size_t i = 0; i < log.rounds.size(); ++i)
        {
            REQUIRE(log.rounds[i].end <= in.txopLimit);
            AmpduContent bad = log.rounds[i].content;
            bad.acks += 1;
            if (bad.acks < 2)
            {
                bad.acks = 2;
            }
            bool ulNext = i + 1 < log.rounds.size() && log.rounds[i + 1].dir == Direction::Uplink &&
                          log.rounds[i + 1].content.dataMpdus > 0;
            REQUIRE_FALSE(ValidateCascadeAmpdu(bad, ulNext).empty());
        }
    }
}

TEST_CASE("MU-RTS/CTS outcomes")
{
    MacTiming t;
    BackoffState ap;
    std::vector<MuRtsTarget> four{{1, 0x1, true}, {2, 0x1, true}, {3, 0x1, true}, {4, 0x2, true}};
    MuRtsOutcome o = MuRtsCts(four, 0x3, true, SimTime(), t, ap);
    CHECK(o.success);
    CHECK(o.ctsPerChannel.at(0) == 3);
    CHECK(o.ctsChannels == 0x3);
    CHECK(o.end == MuRtsDuration(4) + t.sifs + CtsDuration());

    std::vector<MuRtsTarget> silent{{1, 0x1, false}};
    MuRtsOutcome f = MuRtsCts(silent, 0x1, true, SimTime(), t, ap);
    CHECK_FALSE(f.success);
    CHECK(ap.cw == 31);

    MuRtsOutcome b = MuRtsCts(silent, 0x1, false, SimTime::Us(5), t, ap);
    CHECK(b.bypassed);
    CHECK(b.end == SimTime::Us(5));
}

TEST_CASE("MU EDCA timers per access category")
{
    MuEdcaState s;
    s.params[0].timer = SimTime::Ms(8);
    s.params[1].timer = SimTime::Ms(16);
    s.params[0].aifsn = 3;
    s.params[1].aifsn = 3;
    EdcaParams normal;
    CHECK(s.Effective(AccessCategory::Bk, SimTime(), normal).cwMin == normal.cwMin);
    MuEdcaApply(s, SimTime::Ms(1));
    CHECK(s.Active(AccessCategory::Bk, SimTime::Ms(8)));
    CHECK_FALSE(s.Active(AccessCategory::Bk, SimTime::Ms(9)));
    CHECK(s.Active(AccessCategory::Be, SimTime::Ms(9)));
    CHECK(s.Effective(AccessCategory::Be, SimTime::Ms(9), normal).cwMin == 15);
    CHECK(s.Effective(AccessCategory::Be, SimTime::Ms(9), normal).cwMax == 1023);
    CHECK(s.Effective(AccessCategory::Be, SimTime::Ms(9), normal).aifsn == 3);

    MuEdcaState off;
    off.params[1].aifsn = 0;
    MuEdcaApply(off, SimTime());
    CHECK(off.EdcaDisabled(AccessCategory::Be, SimTime::Ms(1)));
}

TEST_CASE("timer expiry mid-backoff keeps the running counter")
{
    MuEdcaState s;
    s.params[1] = MuEdcaParams{2, 6, 10, SimTime::Ms(5)};
    MuEdcaApply(s, SimTime());
    BackoffState b;
    EdcaParams normal;
    PrepareDraw(b, s, SimTime::Ms(1), normal);
    CHECK(b.cwMin == 63);
    b.counter = 40;
    PrepareDraw(b, s, SimTime::Ms(6), normal);
    CHECK(b.counter == 40);
    CHECK(b.cwMin == 15);
    CHECK(b.cw <= b.cwMax);
}
