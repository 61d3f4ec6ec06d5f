#include "axsim/spatial_reuse.h"
#include "gen.h"

#include <doctest.h>

using namespace axsim;
using axsim::test::Gen;

TEST_CASE("BSS color range")
{
    CHECK_NOTHROW(ValidateBssColor(BssColor{1, false}));
    CHECK_NOTHROW(ValidateBssColor(BssColor{63, false}));
    CHECK_THROWS_AS(ValidateBssColor(BssColor{0, false}), InvalidConfigError);
    CHECK_THROWS_AS(ValidateBssColor(BssColor{64, false}), InvalidConfigError);
}

TEST_CASE("conflict detection and new color choice")
{
    CHECK_FALSE(ColorConflictWatch({2, 3}, 5).has_value());
    auto r = ColorConflictWatch({2, 5, 9}, 5);
    REQUIRE(r.has_value());
    CHECK(r->observedColors == std::set<uint8_t>{2, 5, 9});
    CHECK(ChooseNewColor({1, 2, 5}, 5) == 3);
    CHECK(ChooseNewColor({}, 1) == 2);

    std::set<uint8_t> all;
    for (uint8_t c = 1; c <= 63; ++c)
    {
        all.insert(c);
    }
    CHECK_THROWS(ChooseNewColor(all, 7));
}

TEST_CASE("conflict must persist before a change")
{
    ConflictPersistence p;
    CHECK_FALSE(p.Observe(true));
    CHECK_FALSE(p.Observe(true));
    CHECK_FALSE(p.Observe(false));
    CHECK_FALSE(p.Observe(true));
    CHECK_FALSE(p.Observe(true));
    CHECK(p.Observe(true));
}

TEST_CASE("property: a chosen color avoids everything observed")
{
    Gen g(61);
    for (int c = 0; c < axsim::test::kCases; ++c)
    {
        std::set<uint8_t> obs;
        size_t n = g.Int(0, 60);
        for (size_t i = 0; i < n; ++i)
        {
            obs.insert(static_cast<uint8_t>(g.Int(1, 63)));
        }
        uint8_t cur = static_cast<uint8_t>(g.Int(1, 63));
        uint8_t next = ChooseNewColor(obs, cur);
        REQUIRE(next >= 1);
        REQUIRE(next <= 63);
        REQUIRE(next != cur);
        REQUIRE(obs.count(next) == 0);
        for (uint8_t lower = 1; lower < next; ++lower)
        {
            REQUIRE((lower == cur || obs.count(lower) == 1));
        }
    }
}

TEST_CASE("color change countdown")
{
    ColorChangeState s = StartColorChange(BssColor{5, false}, 9, 3);
    BssColor sta{5, false};
    std::vector<uint32_t> counts;
    for (int i = 0; i < 3; ++i)
    {
        BeaconColorFields f = ColorChangeAdvance(s);
        CHECK(f.disabled);
        CHECK(f.color == 5);
        CHECK(f.newColor == 9);
        counts.push_back(f.countdown);
        StaApplyBeacon(sta, f);
        CHECK(sta.disabled);
    }
    CHECK(counts == std::vector<uint32_t>{3, 2, 1});
    BeaconColorFields last = ColorChangeAdvance(s);
    CHECK(last.color == 9);
    CHECK_FALSE(last.disabled);
    StaApplyBeacon(sta, last);
    CHECK(sta.value == 9);
    CHECK_FALSE(sta.disabled);
    CHECK(s.done);
    CHECK_THROWS_AS(StartColorChange(BssColor{5, false}, 0, 3), InvalidConfigError);
}

TEST_CASE("property: no enabled beacon advertises a color other than the old or new one")
{
    Gen g(62);
    for (int c = 0; c < axsim::test::kCases; ++c)
    {
        uint8_t from = static_cast<uint8_t>(g.Int(1, 63));
        uint8_t to = static_cast<uint8_t>(g.Int(1, 63));
        uint32_t n = static_cast<uint32_t>(g.Int(0, 10));
        ColorChangeState s = StartColorChange(BssColor{from, false}, to, n);
        BssColor sta{from, false};
        bool switched = false;
        for (uint32_t i = 0; i < n + 3; ++i)
        {
            BeaconColorFields f = ColorChangeAdvance(s);
            StaApplyBeacon(sta, f);
            if (!f.disabled)
            {
                REQUIRE(f.color == (switched || i >= n ? to : from));
                switched = switched || i >= n;
            }
            // a STA never runs with the new color while the AP still uses the old
            REQUIRE((sta.disabled || sta.value == f.color));
        }
        REQUIRE(sta.value == to);
        REQUIRE_FALSE(sta.disabled);
    }
}

TEST_CASE("frame classifier")
{
    ClassifierContext ctx;
    ctx.myBssid = 0x0000aabbccddeeffULL;
    ctx.myColor = BssColor{7, false};

    FrameObservation same;
    same.color = 7;
    CHECK(ClassifyFrame(same, ctx) == FrameClass::IntraBss);
    FrameObservation other;
    other.color = 8;
    CHECK(ClassifyFrame(other, ctx) == FrameClass::InterBss);

    FrameObservation ours;
    ours.bssid = ctx.myBssid;
    CHECK(ClassifyFrame(ours, ctx) == FrameClass::IntraBss);
    FrameObservation theirs;
    theirs.bssid = 0x1234;
    CHECK(ClassifyFrame(theirs, ctx) == FrameClass::InterBss);

    FrameObservation vht;
    vht.groupId = 0;
    vht.partialAid = PartialAidFromBssid(ctx.myBssid);
    CHECK(ClassifyFrame(vht, ctx) == FrameClass::IntraBss);
    vht.partialAid = static_cast<uint16_t>(*vht.partialAid ^ 1);
    CHECK(ClassifyFrame(vht, ctx) == FrameClass::InterBss);

    FrameObservation cts;
    cts.controlWithoutTa = true;
    cts.ra = 0x55;
    ctx.txopHolder = 0x55;
    CHECK(ClassifyFrame(cts, ctx) == FrameClass::IntraBss);

    FrameObservation bare;
    CHECK(ClassifyFrame(bare, ctx) == FrameClass::Unknown);

    ClassifierContext ap = ctx;
    ap.isAp = true;
    FrameObservation mu;
    mu.muPpdu = true;
    CHECK(ClassifyFrame(mu, ap) == FrameClass::InterBss);

    ClassifierContext disabled = ctx;
    disabled.myColor.disabled = true;
    CHECK(ClassifyFrame(other, disabled) == FrameClass::Unknown);
    CHECK(std::string(FrameClassName(FrameClass::InterBss)) == "inter_bss");
}

TEST_CASE("two NAVs: CF-End from our BSS clears only the intra NAV")
{
    TwoNav nav;
    nav.Update(FrameClass::IntraBss, SimTime::Us(0), SimTime::Us(100));
    nav.Update(FrameClass::InterBss, SimTime::Us(0), SimTime::Us(50));
    CHECK_FALSE(nav.Idle(SimTime::Us(60)));
    nav.CfEnd(FrameClass::IntraBss, SimTime::Us(60));
    CHECK(nav.Idle(SimTime::Us(60)));

    TwoNav n2;
    n2.Update(FrameClass::InterBss, SimTime(), SimTime::Us(100));
    n2.CfEnd(FrameClass::IntraBss, SimTime::Us(10));
    CHECK_FALSE(n2.Idle(SimTime::Us(10)));
    CHECK(n2.Expiry() == SimTime::Us(100));
}

TEST_CASE("single NAV lets an inter-BSS CF-End cut an intra reservation short")
{
    // the failure mode the second NAV exists for
    SingleNav nav;
    nav.Update(1, SimTime(), SimTime::Us(100));
    nav.Update(2, SimTime(), SimTime::Us(200));
    nav.CfEnd(2, SimTime::Us(20));
    CHECK(nav.Idle(SimTime::Us(20)));

    TwoNav two;
    two.Update(FrameClass::IntraBss, SimTime(), SimTime::Us(100));
    two.Update(FrameClass::InterBss, SimTime(), SimTime::Us(200));
    two.CfEnd(FrameClass::InterBss, SimTime::Us(20));
    CHECK_FALSE(two.Idle(SimTime::Us(20)));
}

TEST_CASE("trigger from our AP overrides the intra NAV only")
{
    TwoNav nav;
    nav.Update(FrameClass::IntraBss, SimTime(), SimTime::Us(100));
    CHECK(nav.IdleForTrigger(SimTime::Us(10), true));
    CHECK_FALSE(nav.IdleForTrigger(SimTime::Us(10), false));
    nav.Update(FrameClass::InterBss, SimTime(), SimTime::Us(100));
    CHECK_FALSE(nav.IdleForTrigger(SimTime::Us(10), true));
}

TEST_CASE("property: virtual carrier sense is idle exactly when both NAVs have expired")
{
    Gen g(63);
    for (int c = 0; c < axsim::test::kCases; ++c)
    {
        TwoNav nav;
        uint64_t intraOracle = 0;
        uint64_t basicOracle = 0;
        uint64_t now = 0;
        for (int step = 0; step < 30; ++step)
        {
            now += g.Int(0, 200);
            SimTime t = SimTime::Us(now);
            FrameClass cls = g.Coin() ? FrameClass::IntraBss : (g.Coin() ? FrameClass::InterBss : FrameClass::Unknown);
            if (g.Coin(0.2))
            {
                nav.CfEnd(cls, t);
                if (cls == FrameClass::IntraBss && intraOracle > now)
                {
                    intraOracle = now;
                }
            }
            else
            {
                uint64_t d = g.Int(0, 500);
                nav.Update(cls, t, SimTime::Us(d));
                uint64_t& o = cls == FrameClass::IntraBss ? intraOracle : basicOracle;
                o = std::max(o, now + d);
            }
            uint64_t probe = now + g.Int(0, 300);
            bool expect = intraOracle <= probe && basicOracle <= probe;
            REQUIRE(nav.Idle(SimTime::Us(probe)) == expect);
        }
    }
}

TEST_CASE("OBSS_PD level table")
{
    CHECK(ObssPdLevel(21.0) == doctest::Approx(-82.0));
    CHECK(ObssPdLevel(11.0) == doctest::Approx(-72.0));
    CHECK(ObssPdLevel(1.0) == doctest::Approx(-62.0));
    CHECK(ObssPdLevel(30.0) == doctest::Approx(-82.0));
    CHECK(ObssPdLevel(-10.0) == doctest::Approx(-62.0));
    ObssPdConfig bad;
    bad.levelMinDbm = -60.0;
    CHECK_THROWS_AS(bad.Validate(), InvalidConfigError);
}

TEST_CASE("property: OBSS_PD level is clamped, linear with slope -1 and non-increasing")
{
    Gen g(64);
    for (int c = 0; c < axsim::test::kCases; ++c)
    {
        double p = g.Real(-20.0, 40.0);
        double q = p + g.Real(0.0, 10.0);
        double lp = ObssPdLevel(p);
        REQUIRE(lp >= -82.0);
        REQUIRE(lp <= -62.0);
        REQUIRE(ObssPdLevel(q) <= lp);
        if (p > 1.0 && p < 21.0)
        {
            REQUIRE(lp == doctest::Approx(-82.0 + (21.0 - p)));
        }
    }
}

TEST_CASE("property: SR transmit power cap is the largest admissible whole dBm")
{
    Gen g(65);
    for (int c = 0; c < axsim::test::kCases; ++c)
    {
        double rx = g.Real(-90.0, -55.0);
        auto cap = MaxSrTxPowerDbm(rx);
        if (rx >= -62.0)
        {
            REQUIRE_FALSE(cap.has_value());
            continue;
        }
        REQUIRE(cap.has_value());
        REQUIRE(ObssPdLevel(*cap) > rx);
        if (rx >= -82.0)
        {
            REQUIRE(ObssPdLevel(*cap + 1.0) <= rx);
        }
        else
        {
            // below the floor every power qualifies; the reference power is offered
            REQUIRE(*cap >= 21.0);
        }
    }
}

TEST_CASE("SR decision")
{
    TwoNav idle;
    SrOutcome weak = SrDecision(FrameClass::InterBss, -78.0, idle, SimTime(), 15.0);
    CHECK(weak.action == SrAction::ContendSr);
    CHECK(weak.txPowerCapDbm == 15.0);
    SrOutcome strong = SrDecision(FrameClass::InterBss, -70.0, idle, SimTime(), 15.0);
    CHECK(strong.action == SrAction::Defer);
    CHECK(strong.updateNav);
    SrOutcome intra = SrDecision(FrameClass::IntraBss, -78.0, idle, SimTime(), 15.0);
    CHECK(intra.action == SrAction::Defer);
    SrOutcome quiet = SrDecision(FrameClass::InterBss, -90.0, idle, SimTime(), 15.0);
    CHECK(quiet.action == SrAction::ContendNormally);
    TwoNav busy;
    busy.Update(FrameClass::InterBss, SimTime(), SimTime::Us(50));
    CHECK(SrDecision(FrameClass::InterBss, -90.0, busy, SimTime::Us(10), 15.0).action == SrAction::Defer);
}

TEST_CASE("SRP gate examples")
{
    SrpFields tf{true, 20.0};
    SrpOutcome ok = SrpGate(tf, 0.0, 18.0, SimTime::Us(500));
    CHECK(ok.opportunity);
    CHECK(ok.txPowerCapDbm == 20.0);
    CHECK_FALSE(SrpGate(tf, 0.0, 21.0, SimTime::Us(500)).opportunity);
    CHECK_FALSE(SrpGate(SrpFields{false, 20.0}, 0.0, 0.0, SimTime::Us(500)).opportunity);

    SrpSession s;
    s.Open(ok);
    CHECK(s.CanTransmit(SimTime::Us(100), SimTime::Us(400)));
    CHECK_FALSE(s.CanTransmit(SimTime::Us(100), SimTime::Us(401)));
    s.OnTrigger(SrpFields{false, 0.0});
    CHECK_FALSE(s.CanTransmit(SimTime::Us(100), SimTime::Us(10)));
}

TEST_CASE("property: SRP transmissions never outlast the triggering PPDU")
{
    Gen g(66);
    for (int c = 0; c < axsim::test::kCases; ++c)
    {
        SrpFields tf{g.Coin(0.8), g.Real(-10.0, 40.0)};
        double rpl = g.Real(-90.0, -40.0);
        double want = g.Real(-10.0, 25.0);
        SimTime end = SimTime::Us(g.Int(100, 5000));
        SrpOutcome o = SrpGate(tf, rpl, want, end);
        SrpSession s;
        s.Open(o);
        SimTime start = SimTime::Us(g.Int(0, 5000));
        SimTime dur = SimTime::Us(g.Int(0, 5000));
        if (s.CanTransmit(start, dur))
        {
            REQUIRE(start + dur <= end);
            REQUIRE(want <= tf.srpValueDbm - rpl);
            REQUIRE(tf.srpAllowed);
        }
    }
}
