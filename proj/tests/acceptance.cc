// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include "axsim/config_io.h"
#include "axsim/experiment.h"
#include "axsim/mac_mu.h"
#include "axsim/metrics.h"
#include "axsim/network.h"
#include "axsim/phy_model.h"
#include "axsim/power_twt.h"
#include "axsim/spatial_reuse.h"
#include "gen.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace axsim;
using axsim::test::Gen;

namespace
{

const std::vector<uint64_t> kSeeds{1, 2, 3};
const double kSingleDurationS = 10.0;
const double kMultiDurationS = 2.0;

struct Verdict
{
    bool pass{false};
    std::string detail;
};

std::string
Fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, a);
    return buf;
}

/// Seed-averaged saturation throughput per scheme, cached by cell.
class Bench
{
  public:
    double
    Sat(ScenarioType kind, uint32_t bw, TrafficDirection dir, Scheme scheme)
    {
        std::string key = std::string(ScenarioTypeName(kind)) + "/" + std::to_string(bw) + "/" +
                          TrafficDirectionName(dir) + "/" + SchemeName(scheme);
        auto it = m_cache.find(key);
        if (it != m_cache.end())
        {
            return it->second;
        }
        ScenarioConfig cfg = DefaultConfig(kind);
        cfg.bandwidthMhz = bw;
        cfg.direction = dir;
        if (kind == ScenarioType::IndoorMulti)
        {
            cfg.gridRows = 3;
            cfg.gridCols = 3;
        }
        cfg.durationS = IsMulti(kind) ? kMultiDurationS : kSingleDurationS;
        SweepOptions opt;
        opt.perStaRatesBps = {DefaultSweepRates(kind, bw).back()};
        opt.seeds = kSeeds;
        auto t0 = std::chrono::steady_clock::now();
        SweepResult r = Sweep(cfg, scheme, opt);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::fprintf(stderr, "  [%s] %.2f Mbps (%.0f s wall)\n", key.c_str(), r.saturationMbps, secs);
        m_cache[key] = r.saturationMbps;
        return r.saturationMbps;
    }

  private:
    std::map<std::string, double> m_cache;
};

Bench g_bench;

// ---------------------------------------------------------------- 1-4

Verdict
RateOracle()
{
    double he = HeRate(Mcs::He(11), DataSubcarriers(RuTone::T2x996), 8, 0.8) / 1e6;
    double legacy = OfdmRate(OfdmNumerology::Legacy(), Mcs::Legacy(54), 48, 1, 0.8) / 1e6;
    bool ok = std::abs(he - 9607.8) / 9607.8 <= 5e-4 && legacy == 54.0;
    return {ok, "he " + Fmt("%.3f", he) + " Mbps (9607.8 +-0.05%), legacy " + Fmt("%.6f", legacy) + " Mbps"};
}

Verdict
SpectralEff()
{
    double he = SpectralEfficiency(0.8, OfdmNumerology::He());
    double legacy = SpectralEfficiency(0.8, OfdmNumerology::Legacy());
    bool ok = std::abs(he - 0.9412) < 5e-5 && legacy == 0.8;
    return {ok, "he " + Fmt("%.4f", he) + ", legacy " + Fmt("%.4f", legacy)};
}

Verdict
ObssPdTable()
{
    ObssPdConfig cfg;
    double a = ObssPdLevel(21.0, cfg);
    double b = ObssPdLevel(11.0, cfg);
    double c = ObssPdLevel(1.0, cfg);
    bool ok = a == -82.0 && b == -72.0 && c == -62.0;
    return {ok, Fmt("%.1f", a) + " / " + Fmt("%.1f", b) + " / " + Fmt("%.1f", c) + " dBm"};
}

Verdict
UoraTrace()
{
    std::vector<std::string> bad;
    auto expect = [&](bool c, const std::string& what) {
        if (!c)
        {
            bad.push_back(what);
        }
    };
    const uint32_t nRa = 5;
    std::map<NodeId, OboState> sta;
    std::vector<uint32_t> init{3, 5, 7, 8, 7, 0};
    for (NodeId i = 1; i <= 6; ++i)
    {
        sta[i].obo = init[i - 1];
    }

    // round 1
    ScriptedRandom noDraws({});
    std::vector<UoraCandidate> el1;
    for (NodeId i = 1; i <= 6; ++i)
    {
        if (UoraUpdate(sta[i], nRa, noDraws))
        {
            // STA1 senses the channel busy during SIFS
            el1.push_back({i, i == 1});
        }
    }
    std::vector<NodeId> ids1;
    for (auto& c : el1)
    {
        ids1.push_back(c.sta);
    }
    expect(ids1 == std::vector<NodeId>{1, 2, 6}, "round 1 eligible set");
    expect(*sta[3].obo == 2 && *sta[4].obo == 3 && *sta[5].obo == 2, "round 1 survivor OBOs");
    // STA1 -> RU3, STA2 -> RU1, STA6 -> RU4
    ScriptedRandom picks1({2, 0, 3});
    UoraTransmitResult r1 = UoraTransmitPhase(el1, nRa, picks1);
    expect(r1.deferred == std::vector<NodeId>{1}, "round 1 STA1 deferral");
    expect(r1.perRu[0].kind == RaRuOutcomeKind::Success && r1.perRu[0].stas == std::vector<NodeId>{2},
           "round 1 STA2 on RU1");
    expect(r1.perRu[3].kind == RaRuOutcomeKind::Success && r1.perRu[3].stas == std::vector<NodeId>{6},
           "round 1 STA6 on RU4");
    expect(r1.perRu[2].kind == RaRuOutcomeKind::Idle, "round 1 RU3 left idle");
    for (NodeId i : {2u, 6u})
    {
        OcwOnResult(sta[i], true);
    }
    expect(sta[1].obo && *sta[1].obo == 0, "STA1 keeps OBO 0");

    // round 2: STA2 and STA6 are done, STA7 joins and draws OBO 4
    sta[7] = OboState{};
    ScriptedRandom draw7({4});
    std::vector<UoraCandidate> el2;
    for (NodeId i : {1u, 3u, 4u, 5u, 7u})
    {
        RandomSource& src = i == 7 ? static_cast<RandomSource&>(draw7) : noDraws;
        if (UoraUpdate(sta[i], nRa, src))
        {
            // STA7's NAV is set
            el2.push_back({i, i == 7});
        }
    }
    expect(el2.size() == 5, "round 2 all five eligible");
    // STA1 -> RU2, STA3 -> RU5, STA4 -> RU3, STA5 -> RU5, STA7 -> RU1
    ScriptedRandom picks2({1, 4, 2, 4, 0});
    UoraTransmitResult r2 = UoraTransmitPhase(el2, nRa, picks2);
    expect(r2.perRu[4].kind == RaRuOutcomeKind::Collision &&
               r2.perRu[4].stas == std::vector<NodeId>{3, 5},
           "round 2 STA3/STA5 collision");
    expect(r2.perRu[1].kind == RaRuOutcomeKind::Success && r2.perRu[2].kind == RaRuOutcomeKind::Success,
           "round 2 STA1/STA4 success");
    expect(r2.deferred == std::vector<NodeId>{7}, "round 2 STA7 deferral");
    for (const RaRuOutcome& o : r2.perRu)
    {
        for (NodeId i : o.stas)
        {
            OcwOnResult(sta[i], o.kind == RaRuOutcomeKind::Success);
        }
    }
    expect(sta[3].ocw == 15 && sta[5].ocw == 15, "STA3/STA5 OCW doubled");
    expect(sta[1].ocw == 7 && sta[4].ocw == 7, "STA1/STA4 OCW at minimum");
    expect(*sta[7].obo == 0, "STA7 keeps OBO 0");

    std::string d = bad.empty() ? "both rounds reproduced" : "mismatch:";
    for (const auto& b : bad)
    {
        d += " [" + b + "]";
    }
    return {bad.empty(), d};
}

// ---------------------------------------------------------------- 5-9

Verdict
IndoorSingleRatios()
{
    const auto I = ScenarioType::IndoorSingle;
    const auto UL = TrafficDirection::Uplink;
    std::map<uint32_t, double> ofdma;
    std::map<uint32_t, double> mimo;
    for (uint32_t bw : {20u, 80u, 160u})
    {
        double ac = g_bench.Sat(I, bw, UL, Scheme::AcBaseline);
        ofdma[bw] = g_bench.Sat(I, bw, UL, Scheme::AxOfdma) / ac;
        mimo[bw] = g_bench.Sat(I, bw, UL, Scheme::AxOfdmaMuMimo) / ac;
    }
    bool ok = ofdma[20] >= 1.15 && ofdma[20] <= 1.50 && ofdma[160] >= 2.2 && ofdma[160] <= 3.3 && mimo[160] >= 4.0 &&
              ofdma[20] < ofdma[80] && ofdma[80] < ofdma[160] && mimo[20] < mimo[80] && mimo[80] < mimo[160];
    std::string d;
    for (uint32_t bw : {20u, 80u, 160u})
    {
        d += std::to_string(bw) + " MHz ofdma " + Fmt("%.3f", ofdma[bw]) + " mumimo " + Fmt("%.3f", mimo[bw]) + "; ";
    }
    d += "bands: 20 ofdma [1.15,1.50], 160 ofdma [2.2,3.3], 160 mumimo >= 4.0, increasing in bandwidth";
    return {ok, d};
}

Verdict
OutdoorMimo()
{
    const auto O = ScenarioType::OutdoorSingle;
    const auto UL = TrafficDirection::Uplink;
    double r = g_bench.Sat(O, 160, UL, Scheme::AxOfdmaMuMimo) / g_bench.Sat(O, 160, UL, Scheme::AxOfdma);
    return {r >= 0.95 && r <= 1.15, "160 MHz UL mumimo/ofdma " + Fmt("%.3f", r) + " (band [0.95, 1.15])"};
}

Verdict
IndoorSrGain()
{
    const auto M = ScenarioType::IndoorMulti;
    double dl = g_bench.Sat(M, 20, TrafficDirection::Downlink, Scheme::AxSr) /
                g_bench.Sat(M, 20, TrafficDirection::Downlink, Scheme::AxNoSr);
    double ul = g_bench.Sat(M, 20, TrafficDirection::Uplink, Scheme::AxSr) /
                g_bench.Sat(M, 20, TrafficDirection::Uplink, Scheme::AxNoSr);
    return {dl >= 1.15 && ul >= 1.10,
            "3x3 BSS sr/no_sr DL " + Fmt("%.3f", dl) + " (>= 1.15), UL " + Fmt("%.3f", ul) + " (>= 1.10)"};
}

Verdict
OutdoorMulti()
{
    const auto M = ScenarioType::OutdoorMulti;
    std::string d;
    bool ok = true;
    for (TrafficDirection dir : {TrafficDirection::Uplink, TrafficDirection::Downlink})
    {
        double ac = g_bench.Sat(M, 20, dir, Scheme::AcBaseline);
        double nosr = g_bench.Sat(M, 20, dir, Scheme::AxNoSr);
        double sr = g_bench.Sat(M, 20, dir, Scheme::AxSr);
        double target = dir == TrafficDirection::Uplink ? 1.27 : 1.17;
        double srRatio = sr / nosr;
        ok = ok && std::abs(srRatio - 1.0) <= 0.05;
        ok = ok && std::abs(nosr / ac - target) <= 0.15 && std::abs(sr / ac - target) <= 0.15;
        d += std::string(TrafficDirectionName(dir)) + ": sr/no_sr " + Fmt("%.3f", srRatio) + ", no_sr/ac " +
             Fmt("%.3f", nosr / ac) + ", sr/ac " + Fmt("%.3f", sr / ac) + " (target " + Fmt("%.2f", target) +
             " +-0.15); ";
    }
    return {ok, d};
}

Verdict
Directionality()
{
    struct Case
    {
        ScenarioType kind;
        std::vector<Scheme> schemes;
    };
    std::vector<Case> cases{
        {ScenarioType::IndoorSingle, {Scheme::AcBaseline, Scheme::AxOfdma, Scheme::AxOfdmaMuMimo}},
        {ScenarioType::OutdoorSingle, {Scheme::AcBaseline, Scheme::AxOfdma, Scheme::AxOfdmaMuMimo}},
        {ScenarioType::IndoorMulti, {Scheme::AcBaseline, Scheme::AxNoSr, Scheme::AxSr}},
        {ScenarioType::OutdoorMulti, {Scheme::AcBaseline, Scheme::AxNoSr, Scheme::AxSr}},
    };
    bool ok = true;
    std::string d;
    for (const Case& c : cases)
    {
        for (Scheme s : c.schemes)
        {
            double ul = g_bench.Sat(c.kind, 20, TrafficDirection::Uplink, s);
            double dl = g_bench.Sat(c.kind, 20, TrafficDirection::Downlink, s);
            bool good = IsIndoor(c.kind) ? dl >= ul : ul >= dl;
            ok = ok && good;
            if (!good)
            {
                d += std::string(ScenarioTypeName(c.kind)) + "/" + SchemeName(s) + " UL " + Fmt("%.1f", ul) +
                     " DL " + Fmt("%.1f", dl) + "; ";
            }
        }
    }
    return {ok, ok ? "indoor DL >= UL and outdoor UL >= DL for all 12 scenario/scheme pairs at 20 MHz"
                   : "violations: " + d};
}

// ---------------------------------------------------------------- 10

Verdict
Properties()
{
    std::vector<std::string> bad;
    auto expect = [&](bool c, const std::string& what) {
        if (!c)
        {
            bad.push_back(what);
        }
    };
    Gen g(2024);

    // byte-identical traces and per-flow conservation on full network runs
    for (Scheme s : {Scheme::AcBaseline, Scheme::AxOfdma, Scheme::AxSr})
    {
        ScenarioConfig cfg = DefaultConfig(s == Scheme::AxSr ? ScenarioType::IndoorMulti : ScenarioType::IndoorSingle);
        cfg.gridRows = 2;
        cfg.gridCols = 2;
        cfg.stasPerBss = 6;
        cfg.perStaRateBps = 8e6;
        cfg.durationS = 0.2;
        std::ostringstream a;
        std::ostringstream b;
        RunResult ra = RunNetwork(cfg, s, &a);
        RunNetwork(cfg, s, &b);
        expect(a.str() == b.str() && !a.str().empty(), std::string("trace determinism ") + SchemeName(s));
        for (const FlowStats& f : ra.flows)
        {
            expect(f.deliveredTotal + f.drops <= f.offeredTotal, "flow conservation");
        }
        expect(ra.counters.maxCwSeen <= cfg.mac.cwMax, "network cw bound");
        expect(ra.counters.txWhileDozing == 0, "network dozing transmit");
        for (const NodeEnergy& e : ra.energy)
        {
            expect(std::abs(e.awakeS + e.dozeS - ra.totalS) < 1e-6, "network energy closure");
        }
    }

    // padding alignment
    for (int c = 0; c < 300; ++c)
    {
        TriggerFrame tf;
        tf.ulDuration = SimTime::Ns(g.Int(1000, 5000000));
        std::vector<TbResponse> rs(g.Int(1, 18));
        for (auto& r : rs)
        {
            r.dataAirtime = SimTime::Ns(g.Int(0, tf.ulDuration.GetNs()));
            r.mpduOk = {g.Coin()};
        }
        BackoffState ap;
        SimTime tfEnd = SimTime::Ns(g.Int(0, 1000000));
        UlMuRoundResult res = UlMuRound(tf, tfEnd, rs, MacTiming{}, ap);
        for (SimTime e : res.ends)
        {
            expect(e == tfEnd + SimTime::Us(16) + tf.ulDuration, "HE-TB padding alignment");
        }
    }

    // dual NAV
    for (int c = 0; c < 300; ++c)
    {
        TwoNav nav;
        uint64_t intra = 0;
        uint64_t basic = 0;
        uint64_t now = 0;
        for (int k = 0; k < 20; ++k)
        {
            now += g.Int(0, 100);
            bool isIntra = g.Coin();
            uint64_t dur = g.Int(0, 400);
            nav.Update(isIntra ? FrameClass::IntraBss : FrameClass::InterBss, SimTime::Us(now), SimTime::Us(dur));
            (isIntra ? intra : basic) = std::max(isIntra ? intra : basic, now + dur);
            uint64_t probe = now + g.Int(0, 300);
            expect(nav.Idle(SimTime::Us(probe)) == (intra <= probe && basic <= probe), "dual NAV idle");
        }
    }

    // cascade validator
    for (int c = 0; c < 300; ++c)
    {
        CascadePlanInput in;
        in.dlRoundAirtime = SimTime::Us(g.Int(50, 1200));
        in.ulRoundAirtime = SimTime::Us(g.Int(50, 1200));
        in.finalAckAirtime = SimTime::Us(g.Int(40, 100));
        in.dlRounds = static_cast<uint32_t>(g.Int(0, 5));
        in.ulRounds = static_cast<uint32_t>(g.Int(0, 5));
        CascadeLog log = CascadedTxop(in);
        expect(log.violations.empty(), "generated cascade accepted");
        for (const CascadeRound& r : log.rounds)
        {
            AmpduContent m = r.content;
            m.acks = 2;
            expect(!ValidateCascadeAmpdu(m, false).empty() && !ValidateCascadeAmpdu(m, true).empty(),
                   "mutated cascade rejected");
        }
    }

    // cw / OCW bounds
    BackoffState b;
    OboState o;
    for (int c = 0; c < 2000; ++c)
    {
        bool ok = g.Coin(0.3);
        ok ? BackoffOnSuccess(b) : BackoffOnFailure(b);
        OcwOnResult(o, ok);
        expect(b.cw <= b.cwMax && o.ocw <= o.ocwMax, "cw/OCW bound");
    }

    // energy closure and doze safety in the power-save scenarios
    for (PowerSaveMode m : {PowerSaveMode::IndividualTwt, PowerSaveMode::UoraTwt, PowerSaveMode::PeriodicTwt,
                            PowerSaveMode::IntraPpduOnly})
    {
        PowerSaveConfig cfg;
        cfg.nSta = 8;
        cfg.durationS = 1.0;
        PowerSaveReport r = RunPowerSave(cfg, m);
        expect(r.txWhileDozing == 0 && r.rxWhileDozing == 0, std::string("doze safety ") + PowerSaveModeName(m));
        for (const auto& n : r.nodes)
        {
            expect(std::abs(n.awakeS + n.dozeS - r.totalS) < 1e-9, "power-save energy closure");
        }
    }

    // MCS 10/11 need a 242-tone RU
    PerModel per;
    for (int c = 0; c < 2000; ++c)
    {
        double s = g.Real(-5.0, 60.0);
        for (uint32_t tones : {26u, 52u, 106u})
        {
            expect(per.SelectMcs(s, tones).index < 10, "MCS 10/11 below 242 tones");
        }
    }

    // CDF and 5th percentile
    for (int c = 0; c < 300; ++c)
    {
        std::vector<double> v;
        size_t n = g.Int(1, 64);
        for (size_t i = 0; i < n; ++i)
        {
            v.push_back(static_cast<double>(g.Int(0, 30)));
        }
        auto cdf = CdfCurve(v);
        for (size_t i = 1; i < cdf.size(); ++i)
        {
            expect(cdf[i].value > cdf[i - 1].value && cdf[i].fraction > cdf[i - 1].fraction, "CDF monotone");
        }
        std::vector<double> sorted = v;
        std::sort(sorted.begin(), sorted.end());
        size_t k = static_cast<size_t>(std::ceil(0.05 * n - 1e-9));
        double oracle = sorted[std::max<size_t>(k, 1) - 1];
        expect(Percentile(v, 0.05) == oracle, "p5 oracle");
    }

    std::set<std::string> unique(bad.begin(), bad.end());
    std::string d = unique.empty() ? "determinism, padding, dual NAV, cascades, cw/OCW, conservation, energy, "
                                     "doze safety, MCS floor, CDF/p5 all hold"
                                   : "broken:";
    for (const auto& u : unique)
    {
        d += " [" + u + "]";
    }
    return {unique.empty(), d};
}

} // namespace

int
main(int argc, char** argv)
{
    std::vector<std::pair<int, std::function<Verdict()>>> criteria{
        {1, RateOracle},         {2, SpectralEff},  {3, ObssPdTable},  {4, UoraTrace},
        {5, IndoorSingleRatios}, {6, OutdoorMimo},  {7, IndoorSrGain}, {8, OutdoorMulti},
        {9, Directionality},     {10, Properties},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i)
    {
        only.insert(std::atoi(argv[i]));
    }
    int failed = 0;
    for (auto& [id, fn] : criteria)
    {
        if (!only.empty() && only.count(id) == 0)
        {
            continue;
        }
        Verdict v;
        try
        {
            v = fn();
        }
        catch (const std::exception& e)
        {
            v = {false, std::string("exception: ") + e.what()};
        }
        std::printf("C%-2d %s  %s\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str());
        std::fflush(stdout);
        failed += !v.pass;
    }
    return failed == 0 ? 0 : 1;
}
