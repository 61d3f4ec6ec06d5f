#include "axsim/network.h"

#include "axsim/power_twt.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace axsim
{

namespace
{

enum class FrameType : uint8_t
{
    Rts,
    Cts,
    CfEnd,
    Ba,
    Trigger,
    MuRts,
    Mba,
    SuData,
    MuData,
    TbData,
    TbBa,
};

const char*
FrameTypeName(FrameType t)
{
    switch (t)
    {
    case FrameType::Rts:
        return "rts";
    case FrameType::Cts:
        return "cts";
    case FrameType::CfEnd:
        return "cf_end";
    case FrameType::Ba:
        return "ba";
    case FrameType::Trigger:
        return "tf";
    case FrameType::MuRts:
        return "mu_rts";
    case FrameType::Mba:
        return "mba";
    case FrameType::SuData:
        return "su_data";
    case FrameType::MuData:
        return "mu_data";
    case FrameType::TbData:
        return "tb_data";
    case FrameType::TbBa:
        return "tb_ba";
    }
    return "?";
}

constexpr uint32_t kNoFlow = std::numeric_limits<uint32_t>::max();
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr uint32_t kQosNullBytes = 30;

struct UserPayload
{
    NodeId src{kNoNode};
    NodeId dst{kNoNode};
    uint32_t flow{kNoFlow};
    RuTone tone{RuTone::T242};
    double bandHz{0.0};
    TxVector tx;
    double powerDbm{0.0};
    double offsetDb{0.0};
    std::vector<Mpdu> mpdus;
    /// Byte offset where each MPDU ends inside the PSDU.
    std::vector<uint64_t> ends;
    /// Queue depth reported with the frame (uplink only).
    uint64_t bsrBytes{0};
    /// Control content in place of data (BA, QoS null).
    uint32_t ctrlBytes{0};
};

struct Emitter
{
    NodeId node{kNoNode};
    double powerMw{0.0};
};

struct Ppdu
{
    uint64_t id{0};
    FrameType type{FrameType::Rts};
    PpduKind kind{PpduKind::Legacy};
    uint32_t bss{0};
    NodeId ta{kNoNode};
    NodeId ra{kNoNode};
    NodeId holder{kNoNode};
    SimTime start;
    SimTime dataStart;
    SimTime end;
    SimTime navUntil;
    std::vector<Emitter> emitters;
    std::vector<UserPayload> users;
    std::vector<NodeId> addressed;
    uint32_t ctrlBytes{0};
    /// Received power (mW) at every node.
    std::vector<double> contrib;
};

struct RxUser
{
    uint32_t index{0};
    std::vector<uint8_t> ok;
};

struct LinkPlan
{
    NodeId tx{kNoNode};
    NodeId rx{kNoNode};
    double powerDbm{0.0};
    double offsetDb{0.0};
    TxVector txv;
    double rateBps{0.0};
};

enum class TxopKind
{
    None,
    Su,
    UlMu,
    DlMu,
};

struct TxopCtx
{
    TxopKind kind{TxopKind::None};
    SimTime end;
    double powerDbm{0.0};
    bool first{true};
    bool bsrpDone{false};
    bool protectedDone{false};
    NodeId peer{kNoNode};
    uint32_t flow{kNoFlow};
    std::vector<Mpdu> inFlight;
};

struct FlowState
{
    FlowStats stats;
    double intervalS{0.0};
    double phaseS{0.0};
    SimTime nextArrival{SimTime::Max()};
    uint64_t nextSeq{0};
    std::deque<Mpdu> queue;
    uint64_t queueBytes{0};
    std::vector<bool> received;
    bool arrivalPending{false};
};

struct NodeState
{
    NodeId id{0};
    uint32_t bss{0};
    bool isAp{false};
    NodeId ap{kNoNode};
    double txPowerDbm{18.0};
    uint32_t antennas{1};
    double noiseFigureDb{7.0};
    MacAddress addr{0};
    BssColor color;

    // phy
    bool txing{false};
    uint64_t lockId{0};
    double lockContrib{0.0};
    bool lockCorrupt{false};
    std::vector<std::pair<SimTime, double>> interf;
    double energyMw{0.0};
    double ignoredMw{0.0};
    std::vector<std::pair<uint64_t, double>> ignored;
    bool dozing{false};
    EnergyMeter meter;

    // virtual carrier sense
    SingleNav nav1;
    TwoNav nav2;
    EventId navEv{0};
    bool navEvPending{false};
    std::optional<MacAddress> knownHolder;
    SimTime knownHolderUntil;
    /// Start of the latest PPDU heard above the CCA level.
    SimTime lastRxStart;

    // channel access
    bool mediumIdle{true};
    SimTime idleSince;
    SimTime busySince;
    BackoffState bo;
    int64_t slots{-1};
    EventId accessEv{0};
    bool accessPending{false};
    SimTime accessBase;
    SimTime accessFire;
    bool inTxop{false};
    MuEdcaState muEdca;
    EventId muEdcaEv{0};
    bool muEdcaEvPending{false};
    EventId staleEv{0};
    bool staleEvPending{false};

    // spatial reuse
    double srCapDbm{kInf};
    SimTime srCapUntil;

    // traffic
    uint32_t ulFlow{kNoFlow};
    std::vector<uint32_t> dlFlows;
    uint32_t rr{0};

    // AP view of its STAs' buffers
    BsrTable bsr;

    // last reception outcome
    uint64_t lastRxId{0};
    bool lastRxOk{false};
    std::vector<RxUser> lastRxUsers;

    TxopCtx txop;
};

bool
IsHeKind(PpduKind k)
{
    return k == PpduKind::HeSu || k == PpduKind::HeMu || k == PpduKind::HeTb || k == PpduKind::HeErSu;
}

uint32_t
VhtDataSubcarriers(uint32_t bw)
{
    switch (bw)
    {
    case 20:
        return 52;
    case 40:
        return 108;
    case 80:
        return 234;
    default:
        return 468;
    }
}

size_t
FitData(const TxVector& tx, const std::deque<Mpdu>& q, size_t cap, SimTime budget)
{
    size_t n = 0;
    uint64_t bytes = 0;
    while (n < q.size() && n < cap)
    {
        uint64_t next = bytes + AmpduSubframeBytes(MpduBytes(q[n].payloadBytes));
        if (DataDuration(tx, next) > budget)
        {
            break;
        }
        bytes = next;
        ++n;
    }
    return n;
}

} // namespace

class Network::Impl
{
  public:
    Impl(const ScenarioConfig& cfg, Scheme scheme);
    RunResult Run(std::ostream* trace);

  private:
    // setup
    void BuildNodes();
    void BuildChannel();
    void BuildFlows();

    // helpers
    double
    Gain(NodeId a, NodeId b) const
    {
        return m_gain[static_cast<size_t>(a) * m_n + b];
    }

    double
    LossDb(NodeId a, NodeId b) const
    {
        return m_lossDb[static_cast<size_t>(a) * m_n + b];
    }

    SimTime
    Now() const
    {
        return m_sim.Now();
    }

    SimTime
    Slot() const
    {
        return m_cfg.mac.Slot();
    }

    double
    ChannelHz() const
    {
        return m_cfg.bandwidthMhz * 1e6;
    }

    EventId At(SimTime t, EventKind kind, NodeId node, std::function<void()> fn, const char* what = "");

    // traffic
    void Materialize(uint32_t f);
    void ArmArrival(uint32_t f);
    void OnArrival(uint32_t f);
    bool HasData(uint32_t f);
    void Deliver(uint32_t f, const Mpdu& m);
    void ProcessAck(uint32_t f, const std::vector<Mpdu>& sent, const std::vector<uint8_t>* acked);
    void LinkFeedback(NodeId tx, NodeId rx, size_t ok, size_t sent);
    double& Margin(NodeId tx, NodeId rx);

    // medium
    uint64_t Transmit(std::unique_ptr<Ppdu> p);
    void OnPpduEnd(uint64_t id);
    bool Captures(const NodeState& n, double c) const;
    bool MuMimoCandidate(NodeId tx, NodeId rx);
    void TryLock(NodeState& n, Ppdu& p, double c);
    void EvaluateRx(NodeState& n, Ppdu& p);
    double WindowLogSuccess(const NodeState& n, SimTime a, SimTime b, double sigMw, double bandFrac,
                            double noiseMw, double offsetDb, const Mcs& mcs, double bits) const;
    bool Draw(double logSuccess);
    FrameClass Classify(const NodeState& n, const Ppdu& p) const;
    bool Involves(const Ppdu& p, NodeId n) const;
    void UpdateNav(NodeState& n, const Ppdu& p);
    void ApplyCfEnd(NodeState& n, const Ppdu& p);
    void ArmRtsNavReset(NodeState& n, const Ppdu& p);
    void ArmNavCheck(NodeState& n, SimTime expiry);
    bool NavIdle(const NodeState& n) const;
    bool CanRespond(const NodeState& r, NodeId holder) const;

    // access
    bool Busy(const NodeState& n) const;
    void UpdateMedium(NodeState& n);
    void TryAccess(NodeState& n);
    void OnAccess(NodeId id);
    bool WantsAccess(NodeState& n);
    bool AnyStale(const NodeState& ap) const;
    SimTime PollDue(NodeId sta) const;
    std::optional<SimTime> NextStale(const NodeState& ap) const;
    void ArmStaleCheck(NodeState& ap);
    void StartTxop(NodeState& h);
    void EndTxop(NodeId h, bool failure);
    void Finish(NodeId h);

    // rates
    std::vector<LinkPlan> PlanRu(const std::vector<std::pair<NodeId, NodeId>>& links, RuTone tone,
                                 PpduKind kind, double dlRuPowerDbm, bool uplink);
    LinkPlan PlanSu(NodeId tx, NodeId rx, double powerDbm, PpduKind kind);

    // frames
    std::unique_ptr<Ppdu> Control(NodeId from, FrameType type, NodeId ra, uint32_t bytes, NodeId holder,
                                  SimTime navUntil, double powerDbm);

    // SU exchange
    void SuBegin(NodeId h, uint32_t flow);
    void SuAfterRts(NodeId h, uint64_t rts);
    void SuAfterCts(NodeId h, uint64_t cts);
    void SuSendData(NodeId h);
    void SuAfterData(NodeId h, uint64_t data);
    void SuAfterBa(NodeId h, uint64_t ba, std::vector<uint8_t> ok);
    void SuFail(NodeId h);
    uint32_t PickDlFlow(NodeState& ap);

    // UL MU
    void UlNext(NodeId ap);
    void UlBsrp(NodeId ap, std::vector<NodeId> targets);
    void UlRound(NodeId ap);
    void UlAfterTb(NodeId ap, uint64_t tb, std::shared_ptr<const std::vector<UserPayload>> users);

    // DL MU
    void DlRound(NodeId ap);
    void DlProtect(NodeId ap, std::vector<NodeId> targets);
    void DlAfterData(NodeId ap, uint64_t data, std::shared_ptr<const std::vector<UserPayload>> users,
                     std::vector<TxVector> baTx, std::vector<uint32_t> ruUsers, SimTime baDur);
    void DlAfterBa(NodeId ap, uint64_t ba, std::shared_ptr<const std::vector<UserPayload>> users,
                   std::vector<size_t> respIdx, std::vector<std::vector<uint8_t>> staOk);

    ScenarioConfig m_cfg;
    Scheme m_scheme;
    SchemeFeatures m_feat;
    Topology m_topo;
    size_t m_n{0};
    Simulator m_sim;
    RngStream m_rngTopo;
    RngStream m_rngChannel;
    RngStream m_rngTraffic;
    RngStream m_rngMac;
    RngStream m_rngPhy;
    RngStream m_rngSched;
    PerModel m_per;
    std::vector<float> m_gain;
    std::vector<float> m_lossDb;
    std::vector<NodeState> m_nodes;
    std::vector<FlowState> m_flows;
    std::vector<uint32_t> m_dlFlowOf;
    std::vector<SimTime> m_lastHeard;
    std::vector<bool> m_heard;
    /// Last BSRP poll per STA, answered or not.
    std::vector<SimTime> m_lastPolled;
    std::unordered_map<uint64_t, std::unique_ptr<Ppdu>> m_active;
    std::unordered_map<uint64_t, double> m_margin;
    std::vector<RuLayout> m_catalog;
    uint64_t m_nextPpdu{0};
    double m_ccaMw{0.0};
    double m_sensMw{0.0};
    SimTime m_warmupEnd;
    SimTime m_end;
    bool m_tracing{false};
    NetworkCounters m_counters;
};

// ---------------------------------------------------------------- setup

Network::Impl::Impl(const ScenarioConfig& cfg, Scheme scheme)
    : m_cfg(cfg),
      m_scheme(scheme),
      m_feat(FeaturesOf(scheme, cfg.dlMuMimo)),
      m_rngTopo(cfg.seed, "topology"),
      m_rngChannel(cfg.seed, "channel"),
      m_rngTraffic(cfg.seed, "traffic"),
      m_rngMac(cfg.seed, "mac"),
      m_rngPhy(cfg.seed, "phy"),
      m_rngSched(cfg.seed, "scheduler")
{
    m_cfg.Validate();
    if (m_feat.obssPd && !m_cfg.sr.enabled)
    {
        m_feat.obssPd = false;
    }
    m_topo = GenerateTopology(m_cfg, m_rngTopo);
    m_n = m_topo.nodes.size();
    m_ccaMw = DbmToMw(m_cfg.ccaDbm);
    m_sensMw = DbmToMw(m_cfg.rxSensitivityDbm);
    m_end = SimTime::FromSeconds(m_cfg.durationS);
    m_warmupEnd = SimTime::FromSeconds(m_cfg.durationS * m_cfg.warmupFraction);
    m_catalog = LayoutCatalog(m_cfg.bandwidthMhz);
    BuildNodes();
    BuildChannel();
    BuildFlows();
}

void
Network::Impl::BuildNodes()
{
    m_nodes.resize(m_n);
    for (const NodeSpec& s : m_topo.nodes)
    {
        NodeState& n = m_nodes[s.id];
        n.id = s.id;
        n.bss = s.bss;
        n.isAp = s.isAp;
        n.ap = m_topo.bsss[s.bss].ap;
        n.txPowerDbm = s.radio.txPowerDbm;
        n.antennas = s.radio.antennas;
        n.noiseFigureDb = s.radio.noiseFigureDb;
        n.addr = s.id + 1;
        n.color = m_topo.bsss[s.bss].color;
        n.bo.cw = m_cfg.mac.cwMin;
        n.bo.cwMin = m_cfg.mac.cwMin;
        n.bo.cwMax = m_cfg.mac.cwMax;
        for (auto& p : n.muEdca.params)
        {
            p = m_cfg.muEdca;
        }
    }
    m_lastHeard.assign(m_n, SimTime());
    m_heard.assign(m_n, false);
    m_lastPolled.assign(m_n, SimTime());
}

void
Network::Impl::BuildChannel()
{
    ScenarioKind env = IsIndoor(m_cfg.kind) ? ScenarioKind::Indoor : ScenarioKind::Outdoor;
    m_gain.assign(m_n * m_n, 0.0f);
    m_lossDb.assign(m_n * m_n, 0.0f);
    for (size_t i = 0; i < m_n; ++i)
    {
        for (size_t j = i + 1; j < m_n; ++j)
        {
            double loss = PathLossDb(m_topo.nodes[i].pos, m_topo.nodes[j].pos, env, m_cfg.pathLoss) +
                          ShadowingDb(env, m_cfg.pathLoss, m_rngChannel);
            float g = static_cast<float>(DbToLinear(-loss));
            m_gain[i * m_n + j] = g;
            m_gain[j * m_n + i] = g;
            m_lossDb[i * m_n + j] = static_cast<float>(loss);
            m_lossDb[j * m_n + i] = static_cast<float>(loss);
        }
    }
}

void
Network::Impl::BuildFlows()
{
    m_dlFlowOf.assign(m_n, kNoFlow);
    double rate = m_cfg.perStaRateBps;
    for (const BssSpec& b : m_topo.bsss)
    {
        for (NodeId sta : b.stas)
        {
            FlowState f;
            bool ul = m_cfg.direction == TrafficDirection::Uplink;
            f.stats.src = ul ? sta : b.ap;
            f.stats.dst = ul ? b.ap : sta;
            f.stats.sta = sta;
            f.stats.bss = m_nodes[sta].bss;
            uint32_t idx = static_cast<uint32_t>(m_flows.size());
            if (rate > 0.0)
            {
                f.intervalS = m_cfg.packetBytes * 8.0 / rate;
                f.phaseS = m_rngTraffic.UniformReal() * f.intervalS;
                f.nextArrival = SimTime::FromSeconds(f.phaseS);
            }
            m_flows.push_back(std::move(f));
            if (ul)
            {
                m_nodes[sta].ulFlow = idx;
            }
            else
            {
                m_nodes[b.ap].dlFlows.push_back(idx);
                m_dlFlowOf[sta] = idx;
            }
        }
    }
}

EventId
Network::Impl::At(SimTime t, EventKind kind, NodeId node, std::function<void()> fn, const char* what)
{
    return m_sim.ScheduleAt(t, kind, node, std::move(fn), m_tracing ? std::string(what) : std::string());
}

// ---------------------------------------------------------------- traffic

void
Network::Impl::Materialize(uint32_t fi)
{
    FlowState& f = m_flows[fi];
    SimTime now = Now();
    while (f.nextArrival <= now)
    {
        SimTime t = f.nextArrival;
        bool inWindow = t >= m_warmupEnd;
        f.stats.offeredTotal++;
        if (inWindow)
        {
            f.stats.offeredPackets++;
            f.stats.offeredBytes += m_cfg.packetBytes;
        }
        if (f.queue.size() >= m_cfg.maxQueuePackets)
        {
            f.stats.drops++;
        }
        else
        {
            Mpdu m;
            m.src = f.stats.src;
            m.dst = f.stats.dst;
            m.payloadBytes = m_cfg.packetBytes;
            m.seq = f.nextSeq;
            m.arrival = t;
            f.queue.push_back(m);
            f.queueBytes += m.payloadBytes;
        }
        f.nextSeq++;
        f.nextArrival = SimTime::FromSeconds(f.phaseS + f.intervalS * static_cast<double>(f.nextSeq));
    }
}

void
Network::Impl::ArmArrival(uint32_t fi)
{
    Materialize(fi);
    FlowState& f = m_flows[fi];
    if (f.arrivalPending || f.intervalS <= 0.0 || !f.queue.empty() || f.nextArrival > m_end)
    {
        return;
    }
    f.arrivalPending = true;
    At(f.nextArrival, EventKind::TrafficArrival, f.stats.src, [this, fi] { OnArrival(fi); }, "arrival");
}

void
Network::Impl::OnArrival(uint32_t fi)
{
    FlowState& f = m_flows[fi];
    f.arrivalPending = false;
    Materialize(fi);
    NodeState& src = m_nodes[f.stats.src];
    TryAccess(src);
    ArmArrival(fi);
}

bool
Network::Impl::HasData(uint32_t fi)
{
    if (fi == kNoFlow)
    {
        return false;
    }
    Materialize(fi);
    return !m_flows[fi].queue.empty();
}

void
Network::Impl::Deliver(uint32_t fi, const Mpdu& m)
{
    FlowState& f = m_flows[fi];
    if (f.received.size() <= m.seq)
    {
        f.received.resize(std::max<size_t>(m.seq + 1, f.received.size() * 2), false);
    }
    if (f.received[m.seq])
    {
        return;
    }
    f.received[m.seq] = true;
    f.stats.deliveredTotal++;
    if (Now() >= m_warmupEnd)
    {
        f.stats.deliveredPackets++;
        f.stats.deliveredBytes += m.payloadBytes;
        f.stats.delaySumS += (Now() - m.arrival).GetSeconds();
    }
}

void
Network::Impl::ProcessAck(uint32_t fi, const std::vector<Mpdu>& sent, const std::vector<uint8_t>* acked)
{
    FlowState& f = m_flows[fi];
    bool inWindow = Now() >= m_warmupEnd;
    std::vector<Mpdu> keep;
    size_t k = std::min(sent.size(), f.queue.size());
    for (size_t i = 0; i < k; ++i)
    {
        Mpdu m = f.queue[i];
        assert(m.seq == sent[i].seq);
        bool ok = acked && i < acked->size() && (*acked)[i];
        if (inWindow)
        {
            f.stats.mpduAttempts++;
            if (!ok)
            {
                f.stats.mpduFailures++;
            }
        }
        if (ok)
        {
            f.queueBytes -= m.payloadBytes;
            continue;
        }
        m.retries++;
        if (m.retries > m_cfg.mac.retryLimit)
        {
            f.stats.drops++;
            f.queueBytes -= m.payloadBytes;
            continue;
        }
        keep.push_back(m);
    }
    f.queue.erase(f.queue.begin(), f.queue.begin() + static_cast<std::ptrdiff_t>(k));
    f.queue.insert(f.queue.begin(), keep.begin(), keep.end());
    ArmArrival(fi);
}

double&
Network::Impl::Margin(NodeId tx, NodeId rx)
{
    return m_margin[(static_cast<uint64_t>(tx) << 32) | rx];
}

void
Network::Impl::LinkFeedback(NodeId tx, NodeId rx, size_t ok, size_t sent)
{
    if (sent == 0)
    {
        return;
    }
    double frac = static_cast<double>(ok) / static_cast<double>(sent);
    double& m = Margin(tx, rx);
    if (frac < 0.5)
    {
        m = std::min(m + m_cfg.linkMarginUpDb, 30.0);
    }
    else if (frac > 0.9)
    {
        m = std::max(m - m_cfg.linkMarginDownDb, 0.0);
    }
}

// ---------------------------------------------------------------- rates

LinkPlan
Network::Impl::PlanSu(NodeId tx, NodeId rx, double powerDbm, PpduKind kind)
{
    const NodeState& a = m_nodes[tx];
    const NodeState& b = m_nodes[rx];
    LinkPlan best;
    best.tx = tx;
    best.rx = rx;
    best.powerDbm = powerDbm;
    bool vht = kind == PpduKind::Vht;
    RuTone full = FullBandRu(m_cfg.bandwidthMhz);
    uint32_t sc = vht ? VhtDataSubcarriers(m_cfg.bandwidthMhz) : DataSubcarriers(full);
    double bandHz = vht ? ChannelHz() : RuBandwidthHz(full);
    double snr = powerDbm - LossDb(tx, rx) - NoiseFloorDbm(bandHz, b.noiseFigureDb) - Margin(tx, rx);
    uint32_t maxNss = std::min({a.antennas, b.antennas, 8u});
    best.rateBps = -1.0;
    for (uint32_t s = 1; s <= maxNss; ++s)
    {
        double off = StreamSinrOffsetDb(a.antennas, b.antennas, s, s);
        Mcs m = m_per.SelectMcs(snr + off, vht ? 242 : Tones(full), vht ? 9 : 11);
        TxVector t;
        t.kind = kind;
        t.mcs = vht ? Mcs::Vht(m.index) : m;
        t.dataSubcarriers = sc;
        t.nss = s;
        t.giUs = 0.8;
        double r = t.Rate();
        if (r > best.rateBps)
        {
            best.rateBps = r;
            best.txv = t;
            best.offsetDb = off;
        }
    }
    return best;
}

std::vector<LinkPlan>
Network::Impl::PlanRu(const std::vector<std::pair<NodeId, NodeId>>& linksIn, RuTone tone, PpduKind kind,
                      double dlRuPowerDbm, bool uplink)
{
    std::vector<std::pair<NodeId, NodeId>> links = linksIn;
    std::stable_sort(links.begin(), links.end(),
                     [&](const auto& a, const auto& b) { return LossDb(a.first, a.second) < LossDb(b.first, b.second); });
    size_t k = links.size();
    double bandHz = RuBandwidthHz(tone);
    uint32_t sc = DataSubcarriers(tone);
    auto plan = [&](size_t users) {
        std::vector<LinkPlan> out(users);
        std::vector<double> snr(users);
        double rxTarget = kInf;
        if (uplink && users > 1)
        {
            // target receive power: everyone lands at the weakest member's level
            for (size_t i = 0; i < users; ++i)
            {
                rxTarget = std::min(rxTarget, m_nodes[links[i].first].txPowerDbm - LossDb(links[i].first, links[i].second));
            }
        }
        uint32_t maxNss = 8;
        uint32_t rxAnt = 0;
        for (size_t i = 0; i < users; ++i)
        {
            auto [tx, rx] = links[i];
            double p;
            if (uplink)
            {
                p = users > 1 ? std::min(m_nodes[tx].txPowerDbm, rxTarget + LossDb(tx, rx)) : m_nodes[tx].txPowerDbm;
            }
            else
            {
                p = dlRuPowerDbm - LinearToDb(static_cast<double>(users));
            }
            out[i].tx = tx;
            out[i].rx = rx;
            out[i].powerDbm = p;
            // an AP scheduling uplink knows what it currently hears from other cells
            double floorMw = DbmToMw(NoiseFloorDbm(bandHz, m_nodes[rx].noiseFigureDb));
            if (uplink)
            {
                floorMw += std::max(m_nodes[rx].energyMw, 0.0) * bandHz / ChannelHz();
            }
            snr[i] = p - LossDb(tx, rx) - MwToDbm(floorMw) - Margin(tx, rx);
            uint32_t userAnt = uplink ? m_nodes[tx].antennas : m_nodes[rx].antennas;
            rxAnt = uplink ? m_nodes[rx].antennas : m_nodes[tx].antennas;
            maxNss = std::min(maxNss, userAnt);
        }
        // the shared side bounds the total stream count
        maxNss = std::min<uint32_t>(maxNss, std::max<uint32_t>(1, std::min(rxAnt, 8u) / static_cast<uint32_t>(users)));
        double bestSum = -1.0;
        std::vector<LinkPlan> best = out;
        for (uint32_t s = 1; s <= maxNss; ++s)
        {
            double sum = 0.0;
            std::vector<LinkPlan> cand = out;
            for (size_t i = 0; i < users; ++i)
            {
                uint32_t ntx = m_nodes[cand[i].tx].antennas;
                uint32_t nrx = m_nodes[cand[i].rx].antennas;
                double off = StreamSinrOffsetDb(ntx, nrx, s, s * static_cast<uint32_t>(users));
                Mcs m = m_per.SelectMcs(snr[i] + off, Tones(tone), 11);
                TxVector t;
                t.kind = kind;
                t.mcs = m;
                t.dataSubcarriers = sc;
                t.nss = s;
                t.giUs = 0.8;
                cand[i].txv = t;
                cand[i].offsetDb = off;
                cand[i].rateBps = t.Rate();
                sum += cand[i].rateBps;
            }
            if (sum > bestSum)
            {
                bestSum = sum;
                best = cand;
            }
        }
        return std::make_pair(best, bestSum);
    };
    auto [mu, muRate] = plan(k);
    if (k <= 1)
    {
        return mu;
    }
    // grouping that does not beat a single user on the RU falls back to SU
    auto [su, suRate] = plan(1);
    if (suRate >= muRate)
    {
        return su;
    }
    return mu;
}

bool
Network::Impl::MuMimoCandidate(NodeId tx, NodeId rx)
{
    // judged on the smallest RU that may carry a group, at full power
    double snr = m_nodes[tx].txPowerDbm - LossDb(tx, rx) -
                 NoiseFloorDbm(RuBandwidthHz(RuTone::T106), m_nodes[rx].noiseFigureDb) - Margin(tx, rx);
    return snr >= m_cfg.muMimoMinSnrDb;
}

// ---------------------------------------------------------------- medium

std::unique_ptr<Ppdu>
Network::Impl::Control(NodeId from, FrameType type, NodeId ra, uint32_t bytes, NodeId holder, SimTime navUntil,
                       double powerDbm)
{
    auto p = std::make_unique<Ppdu>();
    p->type = type;
    p->kind = PpduKind::Legacy;
    p->bss = m_nodes[from].bss;
    p->ta = from;
    p->ra = ra;
    p->holder = holder;
    p->start = Now();
    p->dataStart = Now() + PreambleDuration(PpduKind::Legacy);
    p->end = Now() + LegacyFrameDuration(bytes);
    p->navUntil = navUntil;
    p->ctrlBytes = bytes;
    p->emitters.push_back(Emitter{from, DbmToMw(powerDbm)});
    return p;
}

uint64_t
Network::Impl::Transmit(std::unique_ptr<Ppdu> p)
{
    p->id = ++m_nextPpdu;
    m_counters.ppdus++;
    uint64_t id = p->id;
    SimTime now = Now();
    p->contrib.assign(m_n, 0.0);
    std::vector<bool> emitting(m_n, false);
    for (const Emitter& e : p->emitters)
    {
        emitting[e.node] = true;
    }
    for (size_t i = 0; i < m_n; ++i)
    {
        if (emitting[i])
        {
            continue;
        }
        double c = 0.0;
        for (const Emitter& e : p->emitters)
        {
            c += e.powerMw * Gain(e.node, static_cast<NodeId>(i));
        }
        p->contrib[i] = c;
    }
    for (const Emitter& e : p->emitters)
    {
        NodeState& n = m_nodes[e.node];
        if (n.dozing)
        {
            m_counters.txWhileDozing++;
        }
        n.txing = true;
        n.lockId = 0;
        n.interf.clear();
        n.meter.Set(RadioState::Tx, now);
    }
    for (size_t i = 0; i < m_n; ++i)
    {
        if (emitting[i])
        {
            continue;
        }
        NodeState& n = m_nodes[i];
        double c = p->contrib[i];
        n.energyMw += c;
        if (c >= m_sensMw)
        {
            n.lastRxStart = now;
        }
        if (n.lockId != 0 && Captures(n, c))
        {
            uint64_t prevId = n.lockId;
            double prevContrib = n.lockContrib;
            bool prevCorrupt = n.lockCorrupt;
            auto prevInterf = std::move(n.interf);
            n.lockId = 0;
            TryLock(n, *p, c);
            if (n.lockId == 0 && !n.dozing)
            {
                n.lockId = prevId;
                n.lockContrib = prevContrib;
                n.lockCorrupt = prevCorrupt;
                n.interf = std::move(prevInterf);
                n.interf.emplace_back(now, n.energyMw - n.lockContrib);
            }
        }
        else if (n.lockId != 0)
        {
            n.interf.emplace_back(now, n.energyMw - n.lockContrib);
            if (m_cfg.strictOverlapLoss && c >= m_ccaMw)
            {
                n.lockCorrupt = true;
            }
        }
        else
        {
            TryLock(n, *p, c);
        }
    }
    SimTime end = p->end;
    if (m_tracing)
    {
        std::ostringstream os;
        os << FrameTypeName(p->type) << " ta=" << (p->ta == kNoNode ? -1 : static_cast<int64_t>(p->ta))
           << " ra=" << (p->ra == kNoNode ? -1 : static_cast<int64_t>(p->ra)) << " dur=" << (end - p->start).GetNs() << " users=" << p->users.size();
        m_sim.ScheduleAt(end, EventKind::TxEnd, p->ta, [this, id] { OnPpduEnd(id); }, os.str());
    }
    else
    {
        m_sim.ScheduleAt(end, EventKind::TxEnd, p->ta, [this, id] { OnPpduEnd(id); });
    }
    m_active.emplace(id, std::move(p));
    for (auto& n : m_nodes)
    {
        UpdateMedium(n);
    }
    return id;
}

bool
Network::Impl::Captures(const NodeState& n, double c) const
{
    // a much stronger frame arriving during the legacy training fields steals the receiver
    auto it = m_active.find(n.lockId);
    if (it == m_active.end() || m_cfg.captureThresholdDb <= 0.0)
    {
        return false;
    }
    return Now() < it->second->start + SimTime::Us(16) && c >= n.lockContrib * DbToLinear(m_cfg.captureThresholdDb);
}

void
Network::Impl::TryLock(NodeState& n, Ppdu& p, double c)
{
    if (n.txing || n.dozing || c < m_sensMw)
    {
        return;
    }
    SimTime now = Now();
    if (m_feat.obssPd && p.bss != n.bss && !n.inTxop)
    {
        FrameClass cls = Classify(n, p);
        double rx = MwToDbm(c);
        if (cls == FrameClass::InterBss && n.nav2.Idle(now) && rx < m_cfg.sr.obssPd.levelMaxDbm)
        {
            if (rx < m_cfg.ccaDbm)
            {
                // below every OBSS_PD level: dropped without a power limit
                n.ignored.emplace_back(p.id, c);
                n.ignoredMw += c;
                return;
            }
            auto cap = MaxSrTxPowerDbm(rx, m_cfg.sr.obssPd);
            if (cap)
            {
                double p0 = std::min(n.txPowerDbm, *cap);
                SrOutcome o = SrDecision(cls, rx, n.nav2, now, p0, m_cfg.sr.obssPd, m_cfg.ccaDbm);
                if (o.action == SrAction::ContendSr)
                {
                    n.ignored.emplace_back(p.id, c);
                    n.ignoredMw += c;
                    n.srCapDbm = n.srCapUntil > now ? std::min(n.srCapDbm, o.txPowerCapDbm) : o.txPowerCapDbm;
                    n.srCapUntil = std::max(n.srCapUntil, p.end);
                    return;
                }
            }
        }
    }
    double noise = DbmToMw(NoiseFloorDbm(ChannelHz(), n.noiseFigureDb));
    double snr = LinearToDb(c / (std::max(n.energyMw - c, 0.0) + noise)) + LinearToDb(n.antennas);
    if (snr < m_cfg.preambleDetectSnrDb)
    {
        return;
    }
    if (m_feat.he && m_cfg.intraPpduDoze && !n.isAp && IsHeKind(p.kind) && p.bss == n.bss && !n.inTxop &&
        !Involves(p, n.id))
    {
        auto wake = IntraPpduDoze(FrameClass::IntraBss, false, p.end, now);
        if (wake)
        {
            // TXOP field of HE-SIG-A is read before dozing
            UpdateNav(n, p);
            n.dozing = true;
            n.meter.Set(RadioState::Doze, now);
            NodeId id = n.id;
            At(*wake, EventKind::TimerExpiry, id,
               [this, id] {
                   NodeState& m = m_nodes[id];
                   m.dozing = false;
                   m.meter.Set(RadioState::Awake, Now());
                   UpdateMedium(m);
               },
               "wake");
            return;
        }
    }
    n.lockId = p.id;
    n.lockContrib = c;
    n.lockCorrupt = m_cfg.strictOverlapLoss && (n.energyMw - c) >= m_ccaMw;
    n.interf.clear();
    n.interf.emplace_back(now, n.energyMw - c);
}

void
Network::Impl::OnPpduEnd(uint64_t id)
{
    auto it = m_active.find(id);
    assert(it != m_active.end());
    std::unique_ptr<Ppdu> p = std::move(it->second);
    m_active.erase(it);
    SimTime now = Now();
    std::vector<bool> emitting(m_n, false);
    for (const Emitter& e : p->emitters)
    {
        emitting[e.node] = true;
        NodeState& n = m_nodes[e.node];
        n.txing = false;
        n.meter.Set(RadioState::Awake, now);
    }
    std::vector<NodeId> receivers;
    for (size_t i = 0; i < m_n; ++i)
    {
        if (emitting[i])
        {
            continue;
        }
        NodeState& n = m_nodes[i];
        n.energyMw -= p->contrib[i];
        for (size_t k = 0; k < n.ignored.size(); ++k)
        {
            if (n.ignored[k].first == id)
            {
                n.ignoredMw -= n.ignored[k].second;
                n.ignored.erase(n.ignored.begin() + static_cast<std::ptrdiff_t>(k));
                break;
            }
        }
        if (n.lockId == id)
        {
            receivers.push_back(static_cast<NodeId>(i));
        }
        else if (n.lockId != 0)
        {
            n.interf.emplace_back(now, n.energyMw - n.lockContrib);
        }
    }
    if (m_active.empty())
    {
        for (auto& n : m_nodes)
        {
            n.energyMw = 0.0;
            n.ignoredMw = 0.0;
            n.ignored.clear();
        }
    }
    for (NodeId r : receivers)
    {
        NodeState& n = m_nodes[r];
        EvaluateRx(n, *p);
        n.lockId = 0;
        n.interf.clear();
    }
    for (auto& n : m_nodes)
    {
        UpdateMedium(n);
    }
}

double
Network::Impl::WindowLogSuccess(const NodeState& n, SimTime a, SimTime b, double sigMw, double bandFrac,
                                double noiseMw, double offsetDb, const Mcs& mcs, double bits) const
{
    double total = 0.0;
    double span = static_cast<double>(b.GetNs()) - static_cast<double>(a.GetNs());
    const auto& iv = n.interf;
    for (size_t i = 0; i < iv.size(); ++i)
    {
        SimTime lo = std::max(a, iv[i].first);
        SimTime hi = i + 1 < iv.size() ? std::min(b, iv[i + 1].first) : b;
        double len;
        if (span <= 0.0)
        {
            if (!(iv[i].first <= a && (i + 1 >= iv.size() || iv[i + 1].first > a)))
            {
                continue;
            }
            len = 1.0;
            span = 1.0;
        }
        else
        {
            if (hi <= lo)
            {
                continue;
            }
            len = static_cast<double>(hi.GetNs() - lo.GetNs());
        }
        double sinr = LinearToDb(sigMw / (std::max(iv[i].second, 0.0) * bandFrac + noiseMw)) + offsetDb;
        double eff = EffectiveSinr(sinr, mcs);
        total += m_per.LogSuccess(eff, mcs, bits * len / span);
    }
    return total;
}

bool
Network::Impl::Draw(double logSuccess)
{
    return m_rngPhy.UniformReal() < std::exp(logSuccess);
}

bool
Network::Impl::Involves(const Ppdu& p, NodeId n) const
{
    if (p.ra == n || p.ta == n || p.holder == n)
    {
        return true;
    }
    for (const UserPayload& u : p.users)
    {
        if (u.src == n || u.dst == n)
        {
            return true;
        }
    }
    return std::find(p.addressed.begin(), p.addressed.end(), n) != p.addressed.end();
}

FrameClass
Network::Impl::Classify(const NodeState& n, const Ppdu& p) const
{
    FrameObservation obs;
    if (IsHeKind(p.kind))
    {
        obs.color = m_topo.bsss[p.bss].color.value;
        obs.muPpdu = p.kind == PpduKind::HeMu;
    }
    else
    {
        MacAddress apAddr = m_nodes[m_topo.bsss[p.bss].ap].addr;
        switch (p.type)
        {
        case FrameType::Cts:
            obs.ra = m_nodes[p.ra].addr;
            obs.controlWithoutTa = true;
            break;
        case FrameType::Rts:
        case FrameType::Ba:
            obs.ra = m_nodes[p.ra].addr;
            obs.ta = m_nodes[p.ta].addr;
            break;
        case FrameType::Trigger:
        case FrameType::Mba:
        case FrameType::CfEnd:
            obs.ta = apAddr;
            obs.bssid = apAddr;
            break;
        default:
            obs.ta = m_nodes[p.ta].addr;
            obs.bssid = apAddr;
            if (p.ra != kNoNode)
            {
                obs.ra = m_nodes[p.ra].addr;
            }
            break;
        }
    }
    ClassifierContext ctx;
    ctx.myBssid = m_nodes[n.ap].addr;
    ctx.myColor = m_feat.bssColor ? n.color : BssColor{n.color.value, true};
    ctx.isAp = n.isAp;
    if (n.knownHolder && n.knownHolderUntil > Now())
    {
        ctx.txopHolder = n.knownHolder;
    }
    if (!m_feat.bssColor && IsHeKind(p.kind))
    {
        // no color support: treat the HE PPDU like a frame without one
        return p.bss == n.bss ? FrameClass::IntraBss : FrameClass::Unknown;
    }
    return ClassifyFrame(obs, ctx);
}

void
Network::Impl::ArmNavCheck(NodeState& n, SimTime expiry)
{
    if (expiry <= Now())
    {
        return;
    }
    if (n.navEvPending)
    {
        m_sim.Cancel(n.navEv);
    }
    n.navEvPending = true;
    NodeId id = n.id;
    n.navEv = At(expiry, EventKind::TimerExpiry, id,
                 [this, id] {
                     NodeState& m = m_nodes[id];
                     m.navEvPending = false;
                     UpdateMedium(m);
                 },
                 "nav_expiry");
}

void
Network::Impl::UpdateNav(NodeState& n, const Ppdu& p)
{
    SimTime now = Now();
    if (p.navUntil <= now)
    {
        return;
    }
    SimTime dur = p.navUntil - now;
    if (p.type == FrameType::Rts)
    {
        ArmRtsNavReset(n, p);
    }
    if (m_feat.twoNavs)
    {
        FrameClass cls = Classify(n, p);
        n.nav2.Update(cls, now, dur);
        if (cls == FrameClass::IntraBss && p.holder != kNoNode)
        {
            n.knownHolder = m_nodes[p.holder].addr;
            n.knownHolderUntil = p.navUntil;
        }
        ArmNavCheck(n, n.nav2.Expiry());
    }
    else
    {
        n.nav1.Update(p.holder, now, dur);
        ArmNavCheck(n, n.nav1.expiry);
    }
}

void
Network::Impl::ArmRtsNavReset(NodeState& n, const Ppdu& p)
{
    // NAV set by an RTS is dropped if nothing follows within the CTS window
    SimTime heardEnd = Now();
    SimTime check = heardEnd + m_cfg.mac.sifs * 2 + CtsDuration() + Slot() * 2;
    NodeId id = n.id;
    NodeId holder = p.holder;
    SimTime until = p.navUntil;
    At(check, EventKind::TimerExpiry, id,
       [this, id, holder, until, heardEnd] {
           NodeState& m = m_nodes[id];
           if (m.lastRxStart >= heardEnd)
           {
               return;
           }
           SimTime now = Now();
           if (m_feat.twoNavs)
           {
               if (m.nav2.intraBss == until)
               {
                   m.nav2.intraBss = now;
               }
               if (m.nav2.basic == until)
               {
                   m.nav2.basic = now;
               }
           }
           else if (m.nav1.setter == holder && m.nav1.expiry == until)
           {
               m.nav1.expiry = now;
           }
           UpdateMedium(m);
       },
       "rts_nav_reset");
}

void
Network::Impl::ApplyCfEnd(NodeState& n, const Ppdu& p)
{
    if (m_feat.twoNavs)
    {
        n.nav2.CfEnd(Classify(n, p), Now());
    }
    else
    {
        n.nav1.CfEnd(p.holder, Now());
    }
}

bool
Network::Impl::NavIdle(const NodeState& n) const
{
    return m_feat.twoNavs ? n.nav2.Idle(Now()) : n.nav1.Idle(Now());
}

bool
Network::Impl::CanRespond(const NodeState& r, NodeId holder) const
{
    if (r.txing || r.dozing || r.inTxop)
    {
        return false;
    }
    SimTime now = Now();
    if (m_feat.twoNavs)
    {
        return r.nav2.IdleForTrigger(now, m_nodes[holder].bss == r.bss);
    }
    return r.nav1.Idle(now) || r.nav1.setter == holder;
}

void
Network::Impl::EvaluateRx(NodeState& n, Ppdu& p)
{
    n.lastRxId = p.id;
    n.lastRxOk = false;
    n.lastRxUsers.clear();
    if (n.lockCorrupt)
    {
        return;
    }
    double W = ChannelHz();
    double fullNoise = DbmToMw(NoiseFloorDbm(W, n.noiseFigureDb));
    double diversity = LinearToDb(static_cast<double>(n.antennas));
    double sig = p.contrib[n.id];
    // preamble and signalling fields
    double pre = WindowLogSuccess(n, p.start, p.dataStart, sig, 1.0, fullNoise, diversity, Mcs::He(0), 48.0);
    if (!Draw(pre))
    {
        return;
    }
    bool addressed = p.ra == n.id ||
                     std::find(p.addressed.begin(), p.addressed.end(), n.id) != p.addressed.end();
    if (p.users.empty())
    {
        double ls = WindowLogSuccess(n, p.dataStart, p.end, sig, 1.0, fullNoise, diversity, Mcs::Legacy(6),
                                     8.0 * p.ctrlBytes);
        if (!Draw(ls))
        {
            return;
        }
        n.lastRxOk = true;
        if (addressed)
        {
            return;
        }
        if (p.type == FrameType::CfEnd)
        {
            ApplyCfEnd(n, p);
        }
        else if (p.ta != n.id)
        {
            UpdateNav(n, p);
        }
        return;
    }
    n.lastRxOk = true;
    bool mine = false;
    for (uint32_t ui = 0; ui < p.users.size(); ++ui)
    {
        UserPayload& u = p.users[ui];
        if (u.dst != n.id)
        {
            continue;
        }
        mine = true;
        double bandHz = u.bandHz;
        double noise = DbmToMw(NoiseFloorDbm(bandHz, n.noiseFigureDb));
        double s = DbmToMw(u.powerDbm) * Gain(u.src, n.id);
        double frac = bandHz / W;
        double symNs = static_cast<double>(u.tx.SymbolDuration().GetNs());
        double bps = u.tx.BitsPerSymbol();
        auto timeAt = [&](uint64_t bytes) {
            double ns = symNs * (16.0 + 8.0 * static_cast<double>(bytes)) / bps;
            return p.dataStart + SimTime::Ns(static_cast<uint64_t>(ns));
        };
        RxUser ru;
        ru.index = ui;
        if (u.mpdus.empty())
        {
            uint32_t bytes = u.ctrlBytes > 0 ? u.ctrlBytes : kQosNullBytes;
            double ls = WindowLogSuccess(n, p.dataStart, timeAt(bytes), s, frac, noise, u.offsetDb, u.tx.mcs,
                                         8.0 * bytes);
            ru.ok.push_back(Draw(ls) ? 1 : 0);
        }
        else
        {
            uint64_t begin = 0;
            for (size_t k = 0; k < u.mpdus.size(); ++k)
            {
                uint64_t endB = u.ends[k];
                double bits = 8.0 * static_cast<double>(MpduBytes(u.mpdus[k].payloadBytes));
                double ls = WindowLogSuccess(n, timeAt(begin), timeAt(endB), s, frac, noise, u.offsetDb, u.tx.mcs,
                                             bits);
                bool ok = Draw(ls);
                ru.ok.push_back(ok ? 1 : 0);
                if (ok && u.flow != kNoFlow)
                {
                    Deliver(u.flow, u.mpdus[k]);
                }
                begin = endB;
            }
            // buffer report piggybacked on SU uplink data
            bool any = std::find(ru.ok.begin(), ru.ok.end(), 1) != ru.ok.end();
            if (any && n.isAp && p.type == FrameType::SuData && m_feat.ofdma)
            {
                BsrIngest(n.bsr, u.src, static_cast<uint16_t>(u.src), AccessCategory::Be, u.bsrBytes, Now());
                m_lastHeard[u.src] = Now();
                m_heard[u.src] = true;
            }
        }
        n.lastRxUsers.push_back(std::move(ru));
    }
    if (mine || addressed || p.ta == n.id)
    {
        return;
    }
    // third party: HE carries TXOP in SIG-A; VHT needs the first MPDU header
    if (IsHeKind(p.kind))
    {
        UpdateNav(n, p);
        return;
    }
    const UserPayload& u0 = p.users.front();
    double s = DbmToMw(u0.powerDbm) * Gain(u0.src, n.id);
    double noise = DbmToMw(NoiseFloorDbm(u0.bandHz, n.noiseFigureDb));
    double headBits = 8.0 * 40.0;
    double ls = WindowLogSuccess(n, p.dataStart, p.dataStart + u0.tx.SymbolDuration(), s, u0.bandHz / W, noise,
                                 diversity, u0.tx.mcs, headBits);
    if (ls > std::log(0.5))
    {
        UpdateNav(n, p);
    }
}

// ---------------------------------------------------------------- access

bool
Network::Impl::Busy(const NodeState& n) const
{
    if (n.txing || n.dozing || n.lockId != 0)
    {
        return true;
    }
    if (n.energyMw - n.ignoredMw >= m_ccaMw * (1.0 - 1e-9))
    {
        return true;
    }
    return !NavIdle(n);
}

void
Network::Impl::UpdateMedium(NodeState& n)
{
    bool idle = !Busy(n);
    if (idle == n.mediumIdle)
    {
        return;
    }
    n.mediumIdle = idle;
    SimTime now = Now();
    if (!idle)
    {
        n.busySince = now;
        if (n.accessPending && n.accessFire > now)
        {
            uint64_t elapsed = now > n.accessBase ? (now - n.accessBase).GetNs() / Slot().GetNs() : 0;
            n.slots -= static_cast<int64_t>(std::min<uint64_t>(elapsed, static_cast<uint64_t>(n.slots)));
            m_sim.Cancel(n.accessEv);
            n.accessPending = false;
        }
        return;
    }
    n.idleSince = now;
    TryAccess(n);
}

SimTime
Network::Impl::PollDue(NodeId sta) const
{
    SimTime due = m_heard[sta] ? m_lastHeard[sta] + m_cfg.bsrpInterval : SimTime();
    if (m_lastPolled[sta] > SimTime())
    {
        due = std::max(due, m_lastPolled[sta] + m_cfg.bsrpInterval);
    }
    return due;
}

bool
Network::Impl::AnyStale(const NodeState& ap) const
{
    SimTime now = Now();
    for (NodeId sta : m_topo.bsss[ap.bss].stas)
    {
        if (ap.bsr.count(sta))
        {
            continue;
        }
        if (PollDue(sta) <= now)
        {
            return true;
        }
    }
    return false;
}

std::optional<SimTime>
Network::Impl::NextStale(const NodeState& ap) const
{
    std::optional<SimTime> t;
    for (NodeId sta : m_topo.bsss[ap.bss].stas)
    {
        if (ap.bsr.count(sta))
        {
            continue;
        }
        SimTime due = PollDue(sta);
        if (!t || due < *t)
        {
            t = due;
        }
    }
    return t;
}

void
Network::Impl::ArmStaleCheck(NodeState& ap)
{
    auto t = NextStale(ap);
    if (!t || *t <= Now() || *t > m_end || ap.staleEvPending)
    {
        return;
    }
    ap.staleEvPending = true;
    NodeId id = ap.id;
    ap.staleEv = At(*t, EventKind::TimerExpiry, id,
                    [this, id] {
                        NodeState& a = m_nodes[id];
                        a.staleEvPending = false;
                        TryAccess(a);
                    },
                    "bsrp_due");
}

bool
Network::Impl::WantsAccess(NodeState& n)
{
    bool ul = m_cfg.direction == TrafficDirection::Uplink;
    if (n.isAp)
    {
        if (ul)
        {
            if (!m_feat.ofdma)
            {
                return false;
            }
            for (const auto& [sta, rec] : n.bsr)
            {
                if (rec.Total() > 0)
                {
                    return true;
                }
            }
            if (AnyStale(n))
            {
                return true;
            }
            ArmStaleCheck(n);
            return false;
        }
        for (uint32_t f : n.dlFlows)
        {
            if (HasData(f))
            {
                return true;
            }
        }
        return false;
    }
    if (!ul || !HasData(n.ulFlow))
    {
        return false;
    }
    if (m_feat.ofdma && n.muEdca.EdcaDisabled(AccessCategory::Be, Now()))
    {
        if (!n.muEdcaEvPending && n.muEdca.deadline[1])
        {
            n.muEdcaEvPending = true;
            NodeId id = n.id;
            n.muEdcaEv = At(*n.muEdca.deadline[1], EventKind::TimerExpiry, id,
                            [this, id] {
                                NodeState& m = m_nodes[id];
                                m.muEdcaEvPending = false;
                                TryAccess(m);
                            },
                            "mu_edca_expiry");
        }
        return false;
    }
    return true;
}

void
Network::Impl::TryAccess(NodeState& n)
{
    if (!n.mediumIdle || n.inTxop || n.accessPending || n.dozing || Now() >= m_end)
    {
        return;
    }
    bool want = WantsAccess(n);
    if (!want && n.slots <= 0)
    {
        return;
    }
    if (n.slots < 0)
    {
        n.slots = BackoffDraw(n.bo, m_rngMac);
    }
    SimTime aifsEnd = n.idleSince + m_cfg.mac.difs;
    SimTime base = std::max(aifsEnd, Now());
    n.accessBase = base;
    n.accessFire = base + Slot() * static_cast<uint64_t>(n.slots);
    n.accessPending = true;
    NodeId id = n.id;
    n.accessEv = At(n.accessFire, EventKind::BackoffSlot, id, [this, id] { OnAccess(id); }, "access");
}

void
Network::Impl::OnAccess(NodeId id)
{
    NodeState& n = m_nodes[id];
    n.accessPending = false;
    n.slots = 0;
    if (!WantsAccess(n))
    {
        return;
    }
    if (!n.mediumIdle && n.busySince != Now())
    {
        m_counters.busyStarts++;
    }
    StartTxop(n);
}

void
Network::Impl::StartTxop(NodeState& h)
{
    m_counters.txops++;
    h.inTxop = true;
    h.slots = -1;
    SimTime now = Now();
    h.txop = TxopCtx{};
    h.txop.end = now + m_cfg.mac.txopLimit;
    h.txop.powerDbm = h.txPowerDbm;
    if (m_feat.obssPd && h.srCapUntil > now && h.srCapDbm < h.txPowerDbm)
    {
        h.txop.powerDbm = h.srCapDbm;
        m_counters.srTxops++;
    }
    if (!h.isAp)
    {
        SuBegin(h.id, h.ulFlow);
        return;
    }
    if (!m_feat.ofdma)
    {
        SuBegin(h.id, PickDlFlow(h));
        return;
    }
    if (m_cfg.direction == TrafficDirection::Uplink)
    {
        h.txop.kind = TxopKind::UlMu;
        UlNext(h.id);
    }
    else
    {
        h.txop.kind = TxopKind::DlMu;
        DlRound(h.id);
    }
}

void
Network::Impl::EndTxop(NodeId id, bool failure)
{
    NodeState& h = m_nodes[id];
    if (failure)
    {
        BackoffOnFailure(h.bo);
    }
    m_counters.maxCwSeen = std::max(m_counters.maxCwSeen, h.bo.cw);
    h.inTxop = false;
    h.txop.kind = TxopKind::None;
    h.slots = BackoffDraw(h.bo, m_rngMac);
    TryAccess(h);
}

void
Network::Impl::Finish(NodeId id)
{
    NodeState& h = m_nodes[id];
    SimTime now = Now();
    if (now + CfEndDuration() <= h.txop.end)
    {
        auto p = Control(id, FrameType::CfEnd, kNoNode, FrameSizes::kCfEnd, id, SimTime(), h.txop.powerDbm);
        SimTime end = p->end;
        Transmit(std::move(p));
        At(end, EventKind::TimerExpiry, id, [this, id] { EndTxop(id, false); }, "txop_end");
        return;
    }
    EndTxop(id, false);
}

// ---------------------------------------------------------------- SU exchange

uint32_t
Network::Impl::PickDlFlow(NodeState& ap)
{
    size_t n = ap.dlFlows.size();
    uint32_t cur = ap.dlFlows[ap.rr % n];
    if (HasData(cur) && m_flows[cur].queue.front().retries > 0)
    {
        return cur;
    }
    for (size_t k = 1; k <= n; ++k)
    {
        uint32_t idx = static_cast<uint32_t>((ap.rr + k) % n);
        if (HasData(ap.dlFlows[idx]))
        {
            ap.rr = idx;
            return ap.dlFlows[idx];
        }
    }
    return cur;
}

void
Network::Impl::SuBegin(NodeId hId, uint32_t flow)
{
    NodeState& h = m_nodes[hId];
    h.txop.kind = TxopKind::Su;
    h.txop.flow = flow;
    h.txop.peer = m_flows[flow].stats.dst;
    auto p = Control(hId, FrameType::Rts, h.txop.peer, FrameSizes::kRts, hId, h.txop.end, h.txop.powerDbm);
    SimTime end = p->end;
    uint64_t id = Transmit(std::move(p));
    At(end + m_cfg.mac.sifs, EventKind::TimerExpiry, hId, [this, hId, id] { SuAfterRts(hId, id); }, "after_rts");
}

void
Network::Impl::SuAfterRts(NodeId hId, uint64_t rts)
{
    NodeState& h = m_nodes[hId];
    NodeState& r = m_nodes[h.txop.peer];
    if (r.lastRxId == rts && r.lastRxOk && CanRespond(r, hId))
    {
        auto p = Control(r.id, FrameType::Cts, hId, FrameSizes::kCts, hId, h.txop.end, r.txPowerDbm);
        SimTime end = p->end;
        uint64_t id = Transmit(std::move(p));
        At(end + m_cfg.mac.sifs, EventKind::TimerExpiry, hId, [this, hId, id] { SuAfterCts(hId, id); },
           "after_cts");
        return;
    }
    m_counters.ctsTimeouts++;
    At(Now() + CtsDuration() + Slot(), EventKind::TimerExpiry, hId, [this, hId] { SuFail(hId); }, "cts_timeout");
}

void
Network::Impl::SuAfterCts(NodeId hId, uint64_t cts)
{
    NodeState& h = m_nodes[hId];
    if (h.lastRxId == cts && h.lastRxOk)
    {
        SuSendData(hId);
        return;
    }
    m_counters.ctsTimeouts++;
    SuFail(hId);
}

void
Network::Impl::SuFail(NodeId hId)
{
    NodeState& h = m_nodes[hId];
    FlowState& f = m_flows[h.txop.flow];
    Materialize(h.txop.flow);
    if (!f.queue.empty())
    {
        Mpdu& head = f.queue.front();
        head.retries++;
        if (head.retries > m_cfg.mac.retryLimit)
        {
            f.stats.drops++;
            f.queueBytes -= head.payloadBytes;
            f.queue.pop_front();
        }
    }
    EndTxop(hId, true);
}

void
Network::Impl::SuSendData(NodeId hId)
{
    NodeState& h = m_nodes[hId];
    uint32_t fi = h.txop.flow;
    Materialize(fi);
    FlowState& f = m_flows[fi];
    if (f.queue.empty())
    {
        Finish(hId);
        return;
    }
    PpduKind kind = m_feat.he ? PpduKind::HeSu : PpduKind::Vht;
    LinkPlan lp = PlanSu(hId, h.txop.peer, h.txop.powerDbm, kind);
    uint32_t bitmap = m_feat.he ? 256 : 64;
    SimTime ba = BaDuration(bitmap);
    SimTime now = Now();
    SimTime maxPpdu = MaxPpduInTxop(h.txop.end + m_cfg.mac.sifs, now, m_cfg.mac, ba);
    size_t cap = m_feat.he ? m_cfg.heAmpduCap : m_cfg.acAmpduCap;
    size_t n = AmpduFit(lp.txv, f.queue, cap, maxPpdu, h.txop.first);
    if (n == 0)
    {
        Finish(hId);
        return;
    }
    auto p = std::make_unique<Ppdu>();
    p->type = FrameType::SuData;
    p->kind = kind;
    p->bss = h.bss;
    p->ta = hId;
    p->ra = h.txop.peer;
    p->holder = hId;
    p->start = now;
    p->dataStart = now + PreambleDuration(kind, lp.txv.nss);
    p->navUntil = h.txop.end;
    UserPayload u;
    u.src = hId;
    u.dst = h.txop.peer;
    u.flow = fi;
    u.tone = FullBandRu(m_cfg.bandwidthMhz);
    u.bandHz = m_feat.he ? RuBandwidthHz(u.tone) : ChannelHz();
    u.tx = lp.txv;
    u.powerDbm = h.txop.powerDbm;
    u.offsetDb = lp.offsetDb;
    uint64_t bytes = 0;
    for (size_t i = 0; i < n; ++i)
    {
        u.mpdus.push_back(f.queue[i]);
        bytes += AmpduSubframeBytes(MpduBytes(f.queue[i].payloadBytes));
        u.ends.push_back(bytes);
    }
    uint64_t remaining = f.queueBytes;
    for (size_t i = 0; i < n; ++i)
    {
        remaining -= f.queue[i].payloadBytes;
    }
    u.bsrBytes = remaining;
    p->end = now + PpduDuration(lp.txv, bytes);
    p->emitters.push_back(Emitter{hId, DbmToMw(h.txop.powerDbm)});
    h.txop.inFlight = u.mpdus;
    p->users.push_back(std::move(u));
    SimTime end = p->end;
    uint64_t id = Transmit(std::move(p));
    At(end + m_cfg.mac.sifs, EventKind::TimerExpiry, hId, [this, hId, id] { SuAfterData(hId, id); }, "after_data");
}

void
Network::Impl::SuAfterData(NodeId hId, uint64_t data)
{
    NodeState& h = m_nodes[hId];
    NodeState& r = m_nodes[h.txop.peer];
    uint32_t bitmap = m_feat.he ? 256 : 64;
    if (r.lastRxId == data && !r.lastRxUsers.empty() && !r.txing && !r.dozing)
    {
        std::vector<uint8_t> ok = r.lastRxUsers.front().ok;
        if (std::find(ok.begin(), ok.end(), 1) != ok.end())
        {
            auto p = Control(r.id, FrameType::Ba, hId, bitmap > 64 ? FrameSizes::kBa256 : FrameSizes::kBa64, hId,
                             h.txop.end, r.txPowerDbm);
            SimTime end = p->end;
            uint64_t id = Transmit(std::move(p));
            At(end + m_cfg.mac.sifs, EventKind::TimerExpiry, hId,
               [this, hId, id, ok] { SuAfterBa(hId, id, ok); }, "after_ba");
            return;
        }
    }
    At(Now() + BaDuration(bitmap) + Slot(), EventKind::TimerExpiry, hId, [this, hId] { SuAfterBa(hId, 0, {}); },
       "ba_timeout");
}

void
Network::Impl::SuAfterBa(NodeId hId, uint64_t ba, std::vector<uint8_t> ok)
{
    NodeState& h = m_nodes[hId];
    bool got = ba != 0 && h.lastRxId == ba && h.lastRxOk;
    std::vector<Mpdu> sent = std::move(h.txop.inFlight);
    h.txop.inFlight.clear();
    size_t okCount = got ? static_cast<size_t>(std::count(ok.begin(), ok.end(), 1)) : 0;
    ProcessAck(h.txop.flow, sent, got ? &ok : nullptr);
    LinkFeedback(hId, h.txop.peer, okCount, sent.size());
    if (!got)
    {
        m_counters.baTimeouts++;
        EndTxop(hId, true);
        return;
    }
    BackoffOnSuccess(h.bo);
    h.txop.first = false;
    SuSendData(hId);
}

// ---------------------------------------------------------------- UL MU

void
Network::Impl::UlNext(NodeId apId)
{
    NodeState& ap = m_nodes[apId];
    SimTime now = Now();
    if (!ap.txop.bsrpDone && AnyStale(ap))
    {
        std::vector<NodeId> stale;
        for (NodeId sta : m_topo.bsss[ap.bss].stas)
        {
            if (!ap.bsr.count(sta) && PollDue(sta) <= now)
            {
                stale.push_back(sta);
            }
        }
        std::stable_sort(stale.begin(), stale.end(), [&](NodeId a, NodeId b) {
            SimTime ta = m_heard[a] ? m_lastHeard[a] : SimTime();
            SimTime tb = m_heard[b] ? m_lastHeard[b] : SimTime();
            return ta < tb;
        });
        size_t k = std::min<size_t>(stale.size(), PositionCount(RuTone::T26, m_cfg.bandwidthMhz));
        stale.resize(k);
        for (NodeId sta : stale)
        {
            m_lastPolled[sta] = now;
        }
        ap.txop.bsrpDone = true;
        UlBsrp(apId, stale);
        return;
    }
    ap.txop.bsrpDone = true;
    for (const auto& [sta, rec] : ap.bsr)
    {
        if (rec.Total() > 0)
        {
            UlRound(apId);
            return;
        }
    }
    Finish(apId);
}

void
Network::Impl::UlBsrp(NodeId apId, std::vector<NodeId> targets)
{
    NodeState& ap = m_nodes[apId];
    SimTime now = Now();
    SimTime tfDur = TriggerFrameDuration(static_cast<uint32_t>(targets.size()));
    std::vector<LinkPlan> plans;
    SimTime data;
    for (NodeId sta : targets)
    {
        auto lp = PlanRu({{sta, apId}}, RuTone::T26, PpduKind::HeTb, 0.0, true).front();
        lp.txv.nss = 1;
        plans.push_back(lp);
        data = std::max(data, DataDuration(lp.txv, kQosNullBytes));
    }
    SimTime tbDur = PreambleDuration(PpduKind::HeTb, 1) + data;
    if (now + tfDur + m_cfg.mac.sifs + tbDur + m_cfg.mac.sifs > ap.txop.end)
    {
        UlNext(apId);
        return;
    }
    auto tf = Control(apId, FrameType::Trigger, kNoNode, TriggerFrameBytes(static_cast<uint32_t>(targets.size())),
                      apId, ap.txop.end, ap.txop.powerDbm);
    tf->addressed = targets;
    SimTime tfEnd = tf->end;
    uint64_t tfId = Transmit(std::move(tf));
    m_counters.bsrpRounds++;
    At(tfEnd + m_cfg.mac.sifs, EventKind::TimerExpiry, apId,
       [this, apId, tfId, targets, plans, tbDur] {
           NodeState& a = m_nodes[apId];
           auto p = std::make_unique<Ppdu>();
           p->type = FrameType::TbData;
           p->kind = PpduKind::HeTb;
           p->bss = a.bss;
           p->ta = kNoNode;
           p->ra = apId;
           p->holder = apId;
           p->start = Now();
           p->dataStart = Now() + PreambleDuration(PpduKind::HeTb, 1);
           p->end = Now() + tbDur;
           p->navUntil = a.txop.end;
           for (size_t i = 0; i < targets.size(); ++i)
           {
               NodeState& s = m_nodes[targets[i]];
               if (s.lastRxId != tfId || !s.lastRxOk || !CanRespond(s, apId))
               {
                   continue;
               }
               UserPayload u;
               u.src = s.id;
               u.dst = apId;
               u.tone = RuTone::T26;
               u.bandHz = RuBandwidthHz(RuTone::T26);
               u.tx = plans[i].txv;
               u.powerDbm = plans[i].powerDbm;
               u.offsetDb = plans[i].offsetDb;
               Materialize(s.ulFlow);
               u.bsrBytes = s.ulFlow == kNoFlow ? 0 : m_flows[s.ulFlow].queueBytes;
               u.ctrlBytes = kQosNullBytes;
               p->emitters.push_back(Emitter{s.id, DbmToMw(u.powerDbm)});
               p->users.push_back(std::move(u));
           }
           if (p->users.empty())
           {
               At(Now() + tbDur, EventKind::TimerExpiry, apId, [this, apId] { EndTxop(apId, true); },
                  "bsrp_timeout");
               return;
           }
           p->ta = p->users.front().src;
           std::vector<NodeId> senders;
           for (const auto& u : p->users)
           {
               senders.push_back(u.src);
           }
           std::vector<uint64_t> reports;
           for (const auto& u : p->users)
           {
               reports.push_back(u.bsrBytes);
           }
           SimTime end = p->end;
           uint64_t id = Transmit(std::move(p));
           At(end + m_cfg.mac.sifs, EventKind::TimerExpiry, apId,
              [this, apId, id, senders, reports] {
                  NodeState& a = m_nodes[apId];
                  size_t decoded = 0;
                  if (a.lastRxId == id)
                  {
                      for (const RxUser& ru : a.lastRxUsers)
                      {
                          if (!ru.ok.empty() && ru.ok[0])
                          {
                              NodeId sta = senders[ru.index];
                              BsrIngest(a.bsr, sta, static_cast<uint16_t>(sta), AccessCategory::Be,
                                        reports[ru.index], Now());
                              m_lastHeard[sta] = Now();
                              m_heard[sta] = true;
                              decoded++;
                          }
                      }
                  }
                  if (decoded == 0)
                  {
                      EndTxop(apId, true);
                      return;
                  }
                  UlNext(apId);
              },
              "after_bsrp");
       },
       "bsrp_tb");
}

void
Network::Impl::UlRound(NodeId apId)
{
    NodeState& ap = m_nodes[apId];
    SimTime now = Now();
    SchedulePolicy pol;
    pol.muMimo = m_feat.ulMuMimo;
    pol.usersPerMimoRu = m_cfg.muMimoUsersPerRu;
    pol.muMimoCandidate = [this, apId](NodeId sta) { return MuMimoCandidate(sta, apId); };
    std::vector<uint32_t> fixed = m_cfg.ulLayout.empty() ? DefaultLayoutTones(m_cfg.bandwidthMhz) : m_cfg.ulLayout;
    size_t cands = 0;
    for (const auto& [sta, rec] : ap.bsr)
    {
        cands += rec.Total() > 0 ? 1 : 0;
    }
    if (cands >= fixed.size())
    {
        pol.layoutTones = fixed;
    }
    TriggerFrame tf = BuildSchedule(ap.bsr, m_catalog, m_cfg.bandwidthMhz, pol, m_rngSched);
    if (tf.users.empty())
    {
        Finish(apId);
        return;
    }
    // group users by RU
    std::vector<std::pair<Ru, std::vector<NodeId>>> groups;
    for (const UserInfo& u : tf.users)
    {
        if (IsRandomAccessAid(u.aid12))
        {
            continue;
        }
        auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == u.ru; });
        if (it == groups.end())
        {
            groups.push_back({u.ru, {u.sta}});
        }
        else
        {
            it->second.push_back(u.sta);
        }
    }
    struct Sched
    {
        NodeId sta;
        Ru ru;
        LinkPlan plan;
    };
    std::vector<Sched> sched;
    uint32_t maxNssRu = 1;
    for (auto& [ru, stas] : groups)
    {
        std::vector<std::pair<NodeId, NodeId>> links;
        for (NodeId s : stas)
        {
            links.push_back({s, apId});
        }
        auto plans = PlanRu(links, ru.tone, PpduKind::HeTb, 0.0, true);
        uint32_t tot = 0;
        for (auto& lp : plans)
        {
            sched.push_back(Sched{lp.tx, ru, lp});
            tot += lp.txv.nss;
        }
        maxNssRu = std::max(maxNssRu, tot);
    }
    uint32_t nUsers = static_cast<uint32_t>(sched.size());
    SimTime tfDur = TriggerFrameDuration(nUsers);
    SimTime mbaDur = MultiStaBaDuration(nUsers);
    SimTime preamble = PreambleDuration(PpduKind::HeTb, maxNssRu);
    SimTime fixedCost = tfDur + m_cfg.mac.sifs + preamble + m_cfg.mac.sifs + mbaDur;
    if (now + fixedCost >= ap.txop.end)
    {
        Finish(apId);
        return;
    }
    SimTime budget = ap.txop.end - (now + fixedCost);
    SimTime want;
    SimTime minOne = SimTime::Max();
    uint64_t perMpdu = AmpduSubframeBytes(MpduBytes(m_cfg.packetBytes));
    for (const Sched& s : sched)
    {
        uint64_t bsrBytes = ap.bsr.count(s.sta) ? ap.bsr.at(s.sta).Total() : 0;
        uint64_t mpdus = std::min<uint64_t>((bsrBytes + m_cfg.packetBytes - 1) / m_cfg.packetBytes, m_cfg.heAmpduCap);
        mpdus = std::max<uint64_t>(mpdus, 1);
        want = std::max(want, DataDuration(s.plan.txv, mpdus * perMpdu));
        minOne = std::min(minOne, DataDuration(s.plan.txv, perMpdu));
    }
    if (minOne > budget)
    {
        Finish(apId);
        return;
    }
    SimTime dataDur = std::min(want, budget);
    SimTime ulDur = preamble + dataDur;
    m_counters.muRounds++;
    auto tfp = Control(apId, FrameType::Trigger, kNoNode, TriggerFrameBytes(nUsers), apId, ap.txop.end,
                       ap.txop.powerDbm);
    for (const Sched& s : sched)
    {
        tfp->addressed.push_back(s.sta);
    }
    SimTime tfEnd = tfp->end;
    uint64_t tfId = Transmit(std::move(tfp));
    At(tfEnd + m_cfg.mac.sifs, EventKind::TimerExpiry, apId,
       [this, apId, tfId, sched, preamble, dataDur, ulDur] {
           NodeState& a = m_nodes[apId];
           auto p = std::make_unique<Ppdu>();
           p->type = FrameType::TbData;
           p->kind = PpduKind::HeTb;
           p->bss = a.bss;
           p->ra = apId;
           p->holder = apId;
           p->start = Now();
           p->dataStart = Now() + preamble;
           p->end = Now() + ulDur;
           p->navUntil = a.txop.end;
           for (const Sched& s : sched)
           {
               NodeState& st = m_nodes[s.sta];
               if (st.lastRxId != tfId || !st.lastRxOk || !CanRespond(st, apId))
               {
                   continue;
               }
               UserPayload u;
               u.src = s.sta;
               u.dst = apId;
               u.flow = st.ulFlow;
               u.tone = s.ru.tone;
               u.bandHz = RuBandwidthHz(s.ru.tone);
               u.tx = s.plan.txv;
               u.powerDbm = s.plan.powerDbm;
               u.offsetDb = s.plan.offsetDb;
               if (st.ulFlow != kNoFlow)
               {
                   Materialize(st.ulFlow);
                   FlowState& f = m_flows[st.ulFlow];
                   size_t n = FitData(u.tx, f.queue, m_cfg.heAmpduCap, dataDur);
                   uint64_t bytes = 0;
                   uint64_t left = f.queueBytes;
                   for (size_t i = 0; i < n; ++i)
                   {
                       u.mpdus.push_back(f.queue[i]);
                       bytes += AmpduSubframeBytes(MpduBytes(f.queue[i].payloadBytes));
                       u.ends.push_back(bytes);
                       left -= f.queue[i].payloadBytes;
                   }
                   u.bsrBytes = left;
               }
               if (u.mpdus.empty())
               {
                   u.ctrlBytes = kQosNullBytes;
               }
               p->emitters.push_back(Emitter{s.sta, DbmToMw(u.powerDbm)});
               p->users.push_back(std::move(u));
           }
           if (p->users.empty())
           {
               At(Now() + ulDur, EventKind::TimerExpiry, apId, [this, apId] { EndTxop(apId, true); }, "tb_timeout");
               return;
           }
           p->ta = p->users.front().src;
           auto sent = std::make_shared<const std::vector<UserPayload>>(p->users);
           SimTime end = p->end;
           uint64_t id = Transmit(std::move(p));
           At(end + m_cfg.mac.sifs, EventKind::TimerExpiry, apId,
              [this, apId, id, sent] { UlAfterTb(apId, id, sent); }, "after_tb");
       },
       "tb");
}

void
Network::Impl::UlAfterTb(NodeId apId, uint64_t tb, std::shared_ptr<const std::vector<UserPayload>> users)
{
    NodeState& ap = m_nodes[apId];
    size_t n = users->size();
    std::vector<std::vector<uint8_t>> ok(n);
    std::vector<bool> decoded(n, false);
    if (ap.lastRxId == tb)
    {
        for (const RxUser& ru : ap.lastRxUsers)
        {
            ok[ru.index] = ru.ok;
            decoded[ru.index] = std::find(ru.ok.begin(), ru.ok.end(), 1) != ru.ok.end();
        }
    }
    size_t nDecoded = 0;
    std::vector<NodeId> acked;
    for (size_t i = 0; i < n; ++i)
    {
        const UserPayload& u = (*users)[i];
        if (!u.mpdus.empty())
        {
            LinkFeedback(u.src, apId, static_cast<size_t>(std::count(ok[i].begin(), ok[i].end(), 1)), u.mpdus.size());
        }
        if (decoded[i])
        {
            nDecoded++;
            acked.push_back(u.src);
            BsrIngest(ap.bsr, u.src, static_cast<uint16_t>(u.src), AccessCategory::Be, u.bsrBytes, Now());
            m_lastHeard[u.src] = Now();
            m_heard[u.src] = true;
        }
    }
    if (nDecoded == 0)
    {
        for (const UserPayload& u : *users)
        {
            if (!u.mpdus.empty())
            {
                ProcessAck(u.flow, u.mpdus, nullptr);
            }
        }
        EndTxop(apId, true);
        return;
    }
    BackoffOnSuccess(ap.bo);
    auto mba = Control(apId, FrameType::Mba, kNoNode, MultiStaBaBytes(static_cast<uint32_t>(nDecoded)), apId,
                       ap.txop.end, ap.txop.powerDbm);
    mba->addressed = acked;
    SimTime end = mba->end;
    uint64_t mbaId = Transmit(std::move(mba));
    At(end, EventKind::TimerExpiry, apId,
       [this, apId, mbaId, users, ok, decoded] {
           for (size_t i = 0; i < users->size(); ++i)
           {
               const UserPayload& u = (*users)[i];
               NodeState& st = m_nodes[u.src];
               bool heard = st.lastRxId == mbaId && st.lastRxOk;
               if (!u.mpdus.empty())
               {
                   ProcessAck(u.flow, u.mpdus, heard && decoded[i] ? &ok[i] : nullptr);
               }
               if (heard && decoded[i])
               {
                   MuEdcaApply(st.muEdca, Now());
               }
           }
           At(Now() + m_cfg.mac.sifs, EventKind::TimerExpiry, apId, [this, apId] { UlNext(apId); }, "after_mba");
       },
       "mba_end");
}

// ---------------------------------------------------------------- DL MU

void
Network::Impl::DlRound(NodeId apId)
{
    NodeState& ap = m_nodes[apId];
    SimTime now = Now();
    BsrTable pool;
    for (uint32_t f : ap.dlFlows)
    {
        if (HasData(f))
        {
            NodeId sta = m_flows[f].stats.sta;
            BsrRecord rec;
            rec.sta = sta;
            rec.aid = static_cast<uint16_t>(sta);
            rec.queuedBytes[1] = m_flows[f].queueBytes;
            rec.freshness = now;
            pool[sta] = rec;
        }
    }
    if (pool.empty())
    {
        Finish(apId);
        return;
    }
    SchedulePolicy pol;
    pol.muMimo = m_feat.dlMuMimo;
    pol.usersPerMimoRu = m_cfg.muMimoUsersPerRu;
    pol.muMimoCandidate = [this, apId](NodeId sta) { return MuMimoCandidate(apId, sta); };
    std::vector<uint32_t> fixed = m_cfg.dlLayout.empty() ? DefaultLayoutTones(m_cfg.bandwidthMhz) : m_cfg.dlLayout;
    if (pool.size() >= fixed.size())
    {
        pol.layoutTones = fixed;
    }
    TriggerFrame alloc = BuildSchedule(pool, m_catalog, m_cfg.bandwidthMhz, pol, m_rngSched);
    std::vector<std::pair<Ru, std::vector<NodeId>>> groups;
    for (const UserInfo& u : alloc.users)
    {
        if (IsRandomAccessAid(u.aid12))
        {
            continue;
        }
        auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == u.ru; });
        if (it == groups.end())
        {
            groups.push_back({u.ru, {u.sta}});
        }
        else
        {
            it->second.push_back(u.sta);
        }
    }
    if (groups.empty())
    {
        Finish(apId);
        return;
    }
    double ruPower = PerRuPowerDbm(ap.txop.powerDbm, static_cast<uint32_t>(groups.size()));
    auto users = std::make_shared<std::vector<UserPayload>>();
    std::vector<TxVector> baTx;
    std::vector<uint32_t> ruUsers;
    uint32_t maxNssRu = 1;
    for (auto& [ru, stas] : groups)
    {
        std::vector<std::pair<NodeId, NodeId>> links;
        for (NodeId s : stas)
        {
            links.push_back({apId, s});
        }
        auto plans = PlanRu(links, ru.tone, PpduKind::HeMu, ruPower, false);
        uint32_t tot = 0;
        for (const LinkPlan& lp : plans)
        {
            UserPayload u;
            u.src = apId;
            u.dst = lp.rx;
            u.flow = m_dlFlowOf[lp.rx];
            u.tone = ru.tone;
            u.bandHz = RuBandwidthHz(ru.tone);
            u.tx = lp.txv;
            u.powerDbm = lp.powerDbm;
            u.offsetDb = lp.offsetDb;
            users->push_back(std::move(u));
            TxVector b = lp.txv;
            b.kind = PpduKind::HeTb;
            b.nss = 1;
            baTx.push_back(b);
            ruUsers.push_back(static_cast<uint32_t>(plans.size()));
            tot += lp.txv.nss;
        }
        maxNssRu = std::max(maxNssRu, tot);
    }
    SimTime baDur;
    for (const TxVector& b : baTx)
    {
        baDur = std::max(baDur, OfdmaBaDuration(b, 256));
    }
    uint32_t sigB = HeSigBSymbols(static_cast<uint32_t>(users->size()), m_cfg.bandwidthMhz);
    SimTime preamble = PreambleDuration(PpduKind::HeMu, maxNssRu, sigB);
    SimTime fixedCost = preamble + m_cfg.mac.sifs + baDur;
    if (now + fixedCost >= ap.txop.end)
    {
        Finish(apId);
        return;
    }
    SimTime budget = ap.txop.end - (now + fixedCost);
    SimTime dataDur;
    std::vector<size_t> keep;
    for (size_t i = 0; i < users->size(); ++i)
    {
        UserPayload& u = (*users)[i];
        FlowState& f = m_flows[u.flow];
        size_t n = FitData(u.tx, f.queue, m_cfg.heAmpduCap, budget);
        if (n == 0)
        {
            continue;
        }
        uint64_t bytes = 0;
        for (size_t k = 0; k < n; ++k)
        {
            u.mpdus.push_back(f.queue[k]);
            bytes += AmpduSubframeBytes(MpduBytes(f.queue[k].payloadBytes));
            u.ends.push_back(bytes);
        }
        dataDur = std::max(dataDur, DataDuration(u.tx, bytes));
        keep.push_back(i);
    }
    if (keep.empty())
    {
        Finish(apId);
        return;
    }
    auto kept = std::make_shared<std::vector<UserPayload>>();
    std::vector<TxVector> keptBa;
    std::vector<uint32_t> keptRu;
    for (size_t i : keep)
    {
        kept->push_back((*users)[i]);
        keptBa.push_back(baTx[i]);
        keptRu.push_back(ruUsers[i]);
    }
    if (m_cfg.muRts && !ap.txop.protectedDone)
    {
        std::vector<NodeId> targets;
        for (const UserPayload& u : *kept)
        {
            if (std::find(targets.begin(), targets.end(), u.dst) == targets.end())
            {
                targets.push_back(u.dst);
            }
        }
        DlProtect(apId, targets);
        return;
    }
    m_counters.muRounds++;
    auto p = std::make_unique<Ppdu>();
    p->type = FrameType::MuData;
    p->kind = PpduKind::HeMu;
    p->bss = ap.bss;
    p->ta = apId;
    p->holder = apId;
    p->start = now;
    p->dataStart = now + preamble;
    p->end = now + preamble + dataDur;
    p->navUntil = ap.txop.end;
    p->emitters.push_back(Emitter{apId, DbmToMw(ap.txop.powerDbm)});
    p->users = *kept;
    SimTime end = p->end;
    uint64_t id = Transmit(std::move(p));
    At(end + m_cfg.mac.sifs, EventKind::TimerExpiry, apId,
       [this, apId, id, kept, keptBa, keptRu, baDur] { DlAfterData(apId, id, kept, keptBa, keptRu, baDur); },
       "after_mu_data");
}

void
Network::Impl::DlProtect(NodeId apId, std::vector<NodeId> targets)
{
    NodeState& ap = m_nodes[apId];
    ap.txop.protectedDone = true;
    SimTime rtsDur = MuRtsDuration(static_cast<uint32_t>(targets.size()));
    SimTime ctsDur = CtsDuration();
    if (Now() + rtsDur + ctsDur + m_cfg.mac.sifs * 2 >= ap.txop.end)
    {
        Finish(apId);
        return;
    }
    auto rts = Control(apId, FrameType::MuRts, kNoNode, 0, apId, ap.txop.end, ap.txop.powerDbm);
    rts->end = rts->start + rtsDur;
    rts->ctrlBytes = TriggerFrameBytes(static_cast<uint32_t>(targets.size()));
    rts->addressed = targets;
    SimTime rtsEnd = rts->end;
    uint64_t rtsId = Transmit(std::move(rts));
    At(rtsEnd + m_cfg.mac.sifs, EventKind::TimerExpiry, apId,
       [this, apId, rtsId, targets, ctsDur] {
           NodeState& a = m_nodes[apId];
           // responders send identical CTS frames at once
           auto cts = Control(apId, FrameType::Cts, apId, FrameSizes::kCts, apId, a.txop.end, a.txop.powerDbm);
           cts->emitters.clear();
           for (NodeId sta : targets)
           {
               NodeState& s = m_nodes[sta];
               if (s.lastRxId == rtsId && s.lastRxOk && CanRespond(s, apId))
               {
                   cts->emitters.push_back(Emitter{sta, DbmToMw(s.txPowerDbm)});
               }
           }
           if (cts->emitters.empty())
           {
               At(Now() + ctsDur, EventKind::TimerExpiry, apId, [this, apId] { EndTxop(apId, true); },
                  "mu_cts_timeout");
               return;
           }
           cts->ta = cts->emitters.front().node;
           SimTime end = cts->end;
           uint64_t ctsId = Transmit(std::move(cts));
           At(end + m_cfg.mac.sifs, EventKind::TimerExpiry, apId,
              [this, apId, ctsId] {
                  NodeState& b = m_nodes[apId];
                  if (b.lastRxId != ctsId || !b.lastRxOk)
                  {
                      m_counters.ctsTimeouts++;
                      EndTxop(apId, true);
                      return;
                  }
                  DlRound(apId);
              },
              "after_mu_cts");
       },
       "mu_rts_cts");
}

void
Network::Impl::DlAfterData(NodeId apId, uint64_t data, std::shared_ptr<const std::vector<UserPayload>> users,
                           std::vector<TxVector> baTx, std::vector<uint32_t> ruUsers, SimTime baDur)
{
    NodeState& ap = m_nodes[apId];
    size_t n = users->size();
    std::vector<std::vector<uint8_t>> staOk(n);
    auto p = std::make_unique<Ppdu>();
    p->type = FrameType::TbBa;
    p->kind = PpduKind::HeTb;
    p->bss = ap.bss;
    p->ra = apId;
    p->holder = apId;
    p->start = Now();
    p->dataStart = Now() + PreambleDuration(PpduKind::HeTb, 1);
    p->end = Now() + baDur;
    p->navUntil = ap.txop.end;
    std::vector<size_t> respIdx;
    for (size_t i = 0; i < n; ++i)
    {
        const UserPayload& d = (*users)[i];
        NodeState& st = m_nodes[d.dst];
        if (st.lastRxId != data || st.txing || st.dozing)
        {
            continue;
        }
        for (const RxUser& ru : st.lastRxUsers)
        {
            if (ru.index == i)
            {
                staOk[i] = ru.ok;
            }
        }
        if (std::find(staOk[i].begin(), staOk[i].end(), 1) == staOk[i].end())
        {
            continue;
        }
        UserPayload u;
        u.src = st.id;
        u.dst = apId;
        u.tone = d.tone;
        u.bandHz = d.bandHz;
        u.tx = baTx[i];
        u.powerDbm = st.txPowerDbm;
        u.offsetDb = StreamSinrOffsetDb(st.antennas, ap.antennas, 1, ruUsers[i]);
        u.ctrlBytes = FrameSizes::kBa256;
        p->emitters.push_back(Emitter{st.id, DbmToMw(st.txPowerDbm)});
        p->users.push_back(std::move(u));
        respIdx.push_back(i);
    }
    if (respIdx.empty())
    {
        At(Now() + baDur + Slot(), EventKind::TimerExpiry, apId,
           [this, apId, users] {
               for (const UserPayload& u : *users)
               {
                   ProcessAck(u.flow, u.mpdus, nullptr);
                   LinkFeedback(apId, u.dst, 0, u.mpdus.size());
               }
               m_counters.baTimeouts++;
               EndTxop(apId, true);
           },
           "mu_ba_timeout");
        return;
    }
    p->ta = p->users.front().src;
    SimTime end = p->end;
    uint64_t id = Transmit(std::move(p));
    At(end + m_cfg.mac.sifs, EventKind::TimerExpiry, apId,
       [this, apId, id, users, respIdx, staOk] { DlAfterBa(apId, id, users, respIdx, staOk); }, "after_mu_ba");
}

void
Network::Impl::DlAfterBa(NodeId apId, uint64_t ba, std::shared_ptr<const std::vector<UserPayload>> users,
                         std::vector<size_t> respIdx, std::vector<std::vector<uint8_t>> staOk)
{
    NodeState& ap = m_nodes[apId];
    std::vector<bool> got(users->size(), false);
    if (ap.lastRxId == ba)
    {
        for (const RxUser& ru : ap.lastRxUsers)
        {
            if (!ru.ok.empty() && ru.ok[0])
            {
                got[respIdx[ru.index]] = true;
            }
        }
    }
    bool any = false;
    for (size_t i = 0; i < users->size(); ++i)
    {
        const UserPayload& u = (*users)[i];
        if (got[i])
        {
            any = true;
            ProcessAck(u.flow, u.mpdus, &staOk[i]);
            LinkFeedback(apId, u.dst, static_cast<size_t>(std::count(staOk[i].begin(), staOk[i].end(), 1)),
                         u.mpdus.size());
        }
        else
        {
            ProcessAck(u.flow, u.mpdus, nullptr);
            LinkFeedback(apId, u.dst, 0, u.mpdus.size());
        }
    }
    if (!any)
    {
        m_counters.baTimeouts++;
        EndTxop(apId, true);
        return;
    }
    BackoffOnSuccess(ap.bo);
    DlRound(apId);
}

// ---------------------------------------------------------------- run

RunResult
Network::Impl::Run(std::ostream* trace)
{
    m_tracing = trace != nullptr;
    m_sim.SetTraceSink(trace);
    for (auto& n : m_nodes)
    {
        n.meter = EnergyMeter(SimTime(), RadioState::Awake);
    }
    for (uint32_t f = 0; f < m_flows.size(); ++f)
    {
        ArmArrival(f);
    }
    for (auto& n : m_nodes)
    {
        if (m_feat.ofdma && !n.isAp && m_cfg.muEdcaAtAssociation)
        {
            MuEdcaApply(n.muEdca, SimTime());
        }
        TryAccess(n);
    }
    m_sim.RunUntil(m_end);

    RunResult r;
    r.cfg = m_cfg;
    r.scheme = m_scheme;
    r.topology = m_topo;
    r.totalS = m_end.GetSeconds();
    r.windowS = (m_end - m_warmupEnd).GetSeconds();
    for (uint32_t f = 0; f < m_flows.size(); ++f)
    {
        Materialize(f);
        r.flows.push_back(m_flows[f].stats);
    }
    EnergyDraw draw;
    for (auto& n : m_nodes)
    {
        n.meter.Finish(m_end);
        NodeEnergy e;
        e.node = n.id;
        e.isAp = n.isAp;
        e.bss = n.bss;
        e.awakeS = (n.meter.AwakeTime() + n.meter.TxTime()).GetSeconds();
        e.txS = n.meter.TxTime().GetSeconds();
        e.dozeS = n.meter.DozeTime().GetSeconds();
        e.energy = n.meter.Energy(draw);
        r.energy.push_back(e);
    }
    m_counters.events = m_sim.ProcessedCount();
    m_counters.cancelledEvents = m_sim.CancelledCount();
    r.counters = m_counters;
    return r;
}

Network::Network(const ScenarioConfig& cfg, Scheme scheme)
    : m_impl(std::make_unique<Impl>(cfg, scheme))
{
}

Network::~Network() = default;

RunResult
Network::Run(std::ostream* trace)
{
    return m_impl->Run(trace);
}

RunResult
RunNetwork(const ScenarioConfig& cfg, Scheme scheme, std::ostream* trace)
{
    Network net(cfg, scheme);
    return net.Run(trace);
}

} // namespace axsim
