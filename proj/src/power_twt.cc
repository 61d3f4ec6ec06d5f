#include "axsim/power_twt.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace axsim
{

uint64_t
WakeInterval(uint64_t mantissa, uint32_t exponent)
{
    if (mantissa == 0)
    {
        return 0;
    }
    if (exponent >= 64 || mantissa > (std::numeric_limits<uint64_t>::max() >> exponent))
    {
        throw std::overflow_error("TWT wake interval overflows");
    }
    return mantissa << exponent;
}

void
ValidateTwtSp(const TwtSp& sp)
{
    if (sp.flowId > 3)
    {
        throw InvalidConfigError("TWT flow identifier " + std::to_string(sp.flowId) + " is reserved");
    }
    WakeInterval(sp.intervalMantissa, sp.intervalExponent);
}

TwtScheduleBook::TwtScheduleBook(SimTime beaconInterval)
    : m_beaconInterval(beaconInterval)
{
}

TwtReply
TwtScheduleBook::Negotiate(const TwtRequest& req, SimTime now)
{
    TwtReply reply;
    reply.interval = req.interval;
    if (req.listenInterval)
    {
        // next TBTT after now
        uint64_t bi = m_beaconInterval.GetNs();
        reply.nextBeacon = SimTime::Ns((now.GetNs() / bi + 1) * bi);
        if (req.interval.GetNs() == 0)
        {
            reply.interval = m_beaconInterval;
        }
    }
    if (req.interval.GetNs() != 0 && req.duration > req.interval)
    {
        reply.kind = TwtReplyKind::Reject;
        return reply;
    }
    SimTime start = std::max(req.wakeTime, now);
    bool moved = false;
    bool clash = true;
    while (clash)
    {
        clash = false;
        for (const auto& [s, e] : m_reserved)
        {
            if (start < e && s < start + req.duration)
            {
                start = e;
                moved = true;
                clash = true;
            }
        }
    }
    if (req.interval.GetNs() != 0 && start >= req.wakeTime + req.interval)
    {
        reply.kind = TwtReplyKind::Reject;
        return reply;
    }
    m_reserved.emplace_back(start, start + req.duration);
    reply.kind = moved ? TwtReplyKind::Alternative : TwtReplyKind::Accept;
    reply.wakeTime = start;
    return reply;
}

PowerAction
UoraTwtDoze(uint8_t spFlowId, bool cascade, bool done)
{
    if (spFlowId == 1 || done)
    {
        return PowerAction::Doze;
    }
    return cascade ? PowerAction::StayAwake : PowerAction::Doze;
}

PowerAction
PeriodicTwtTick(bool timReceived, bool timBit)
{
    if (!timReceived || timBit)
    {
        return PowerAction::StayAwake;
    }
    return PowerAction::Doze;
}

std::optional<SimTime>
IntraPpduDoze(FrameClass cls, bool involvesMe, SimTime ppduEnd, SimTime now)
{
    if (cls != FrameClass::IntraBss || involvesMe || ppduEnd <= now)
    {
        return std::nullopt;
    }
    return ppduEnd;
}

EnergyMeter::EnergyMeter(SimTime start, RadioState initial)
    : m_state(initial),
      m_since(start),
      m_start(start)
{
}

void
EnergyMeter::Set(RadioState s, SimTime now)
{
    if (now < m_since)
    {
        throw std::logic_error("energy meter moved backwards");
    }
    SimTime d = now - m_since;
    switch (m_state)
    {
    case RadioState::Awake:
        m_awake += d;
        break;
    case RadioState::Tx:
        m_tx += d;
        break;
    case RadioState::Doze:
        m_doze += d;
        break;
    }
    m_state = s;
    m_since = now;
}

void
EnergyMeter::Finish(SimTime now)
{
    Set(m_state, now);
}

SimTime
EnergyMeter::AwakeTime() const
{
    return m_awake;
}

SimTime
EnergyMeter::TxTime() const
{
    return m_tx;
}

SimTime
EnergyMeter::DozeTime() const
{
    return m_doze;
}

SimTime
EnergyMeter::Total() const
{
    return m_awake + m_tx + m_doze;
}

double
EnergyMeter::Energy(const EnergyDraw& d) const
{
    return m_awake.GetSeconds() * d.awake + m_tx.GetSeconds() * d.tx + m_doze.GetSeconds() * d.doze;
}

const char*
PowerSaveModeName(PowerSaveMode m)
{
    switch (m)
    {
    case PowerSaveMode::IndividualTwt:
        return "individual_twt";
    case PowerSaveMode::UoraTwt:
        return "uora_twt";
    case PowerSaveMode::PeriodicTwt:
        return "periodic_twt";
    case PowerSaveMode::IntraPpduOnly:
        return "intra_ppdu";
    }
    return "?";
}

double
PowerSaveReport::MeanDozeFraction() const
{
    if (nodes.empty() || totalS <= 0.0)
    {
        return 0.0;
    }
    double sum = 0.0;
    for (const PowerSaveNodeReport& n : nodes)
    {
        sum += n.dozeS / totalS;
    }
    return sum / static_cast<double>(nodes.size());
}

namespace
{

struct PsSta
{
    EnergyMeter meter;
    std::deque<SimTime> ul;
    std::deque<SimTime> dl;
    OboState obo;
};

class PowerSaveSim
{
  public:
    PowerSaveSim(const PowerSaveConfig& cfg, PowerSaveMode mode, std::ostream* trace);
    PowerSaveReport Run();

  private:
    void ScheduleTraffic();
    void Wake(NodeId i, SimTime t);
    void Doze(NodeId i, SimTime t);
    void Tx(NodeId i, SimTime start, SimTime dur);
    void Rx(NodeId i, SimTime t);
    /// Time the STA needs for one TF-triggered UL A-MPDU plus MBA.
    SimTime TriggeredUl() const;
    SimTime DlExchange(uint32_t nPackets) const;
    uint32_t TakeUl(PsSta& s, uint32_t max);
    uint32_t TakeDl(PsSta& s, uint32_t max);

    void IndividualSp(NodeId i, SimTime start);
    void BroadcastUoraSp(SimTime start);
    void PeriodicSp(SimTime start);
    void IntraArrival(NodeId i, bool uplink);

    PowerSaveConfig m_cfg;
    PowerSaveMode m_mode;
    Simulator m_sim;
    RngStream m_rng;
    std::vector<PsSta> m_sta;
    SimTime m_end;
    SimTime m_mediumFree;
    PowerSaveReport m_report;
    TxVector m_tb;
    TxVector m_dl;
};

PowerSaveSim::PowerSaveSim(const PowerSaveConfig& cfg, PowerSaveMode mode, std::ostream* trace)
    : m_cfg(cfg),
      m_mode(mode),
      m_rng(cfg.seed, std::string("power-save/") + PowerSaveModeName(mode)),
      m_end(SimTime::FromSeconds(cfg.durationS))
{
    m_sim.SetTraceSink(trace);
    RadioState init = mode == PowerSaveMode::IntraPpduOnly ? RadioState::Awake : RadioState::Doze;
    m_sta.resize(cfg.nSta + 1, PsSta{EnergyMeter(SimTime(), init), {}, {}, {}});
    m_tb.kind = PpduKind::HeTb;
    m_tb.mcs = Mcs::He(7);
    m_tb.dataSubcarriers = DataSubcarriers(RuTone::T106);
    m_dl.kind = PpduKind::HeSu;
    m_dl.mcs = Mcs::He(7);
    m_dl.dataSubcarriers = DataSubcarriers(RuTone::T242);
    m_report.mode = mode;
}

SimTime
PowerSaveSim::TriggeredUl() const
{
    uint64_t bytes = m_cfg.mpdusPerTb * AmpduSubframeBytes(MpduBytes(1500));
    return PpduDuration(m_tb, bytes);
}

SimTime
PowerSaveSim::DlExchange(uint32_t nPackets) const
{
    uint64_t bytes = nPackets * AmpduSubframeBytes(MpduBytes(1500));
    return PpduDuration(m_dl, bytes) + SimTime::Us(16) + BaDuration(64);
}

uint32_t
PowerSaveSim::TakeUl(PsSta& s, uint32_t max)
{
    uint32_t n = 0;
    while (n < max && !s.ul.empty())
    {
        s.ul.pop_front();
        ++n;
    }
    m_report.ulDelivered += n;
    return n;
}

uint32_t
PowerSaveSim::TakeDl(PsSta& s, uint32_t max)
{
    uint32_t n = 0;
    while (n < max && !s.dl.empty())
    {
        s.dl.pop_front();
        ++n;
    }
    m_report.dlDelivered += n;
    return n;
}

void
PowerSaveSim::Wake(NodeId i, SimTime t)
{
    m_sim.ScheduleAt(t, EventKind::TimerExpiry, i, [this, i] {
        if (m_sta[i].meter.State() == RadioState::Doze)
        {
            m_sta[i].meter.Set(RadioState::Awake, m_sim.Now());
        }
    }, "wake");
}

void
PowerSaveSim::Doze(NodeId i, SimTime t)
{
    m_sim.ScheduleAt(t, EventKind::TimerExpiry, i, [this, i] {
        m_sta[i].meter.Set(RadioState::Doze, m_sim.Now());
    }, "doze");
}

void
PowerSaveSim::Tx(NodeId i, SimTime start, SimTime dur)
{
    m_sim.ScheduleAt(start, EventKind::TxStart, i, [this, i] {
        if (m_sta[i].meter.State() == RadioState::Doze)
        {
            m_report.txWhileDozing++;
            return;
        }
        m_sta[i].meter.Set(RadioState::Tx, m_sim.Now());
    });
    m_sim.ScheduleAt(start + dur, EventKind::TxEnd, i, [this, i] {
        if (m_sta[i].meter.State() == RadioState::Tx)
        {
            m_sta[i].meter.Set(RadioState::Awake, m_sim.Now());
        }
    });
}

void
PowerSaveSim::Rx(NodeId i, SimTime t)
{
    m_sim.ScheduleAt(t, EventKind::TimerExpiry, i, [this, i] {
        if (m_sta[i].meter.State() == RadioState::Doze)
        {
            m_report.rxWhileDozing++;
        }
    }, "rx");
}

void
PowerSaveSim::ScheduleTraffic()
{
    auto gen = [this](NodeId i, double rate, bool ul) {
        if (rate <= 0.0)
        {
            return;
        }
        double t = 0.0;
        while (true)
        {
            t += -std::log(1.0 - m_rng.UniformReal()) / rate;
            if (t >= m_cfg.durationS)
            {
                break;
            }
            SimTime at = SimTime::FromSeconds(t);
            (ul ? m_report.ulOffered : m_report.dlOffered)++;
            m_sim.ScheduleAt(at, EventKind::TrafficArrival, i, [this, i, ul, at] {
                (ul ? m_sta[i].ul : m_sta[i].dl).push_back(at);
                if (m_mode == PowerSaveMode::IntraPpduOnly)
                {
                    IntraArrival(i, ul);
                }
            }, ul ? "ul" : "dl");
        }
    };
    for (NodeId i = 1; i <= m_cfg.nSta; ++i)
    {
        gen(i, m_cfg.ulPacketsPerS, true);
        gen(i, m_cfg.dlPacketsPerS, false);
    }
}

void
PowerSaveSim::IndividualSp(NodeId i, SimTime start)
{
    SimTime slot = SimTime::Ns(m_cfg.beaconInterval.GetNs() / m_cfg.nSta);
    SimTime cap = std::min(start + slot, m_end);
    SimTime sifs = SimTime::Us(16);
    PsSta& s = m_sta[i];
    Wake(i, start);
    SimTime t = start;
    while (!s.ul.empty())
    {
        SimTime tf = TriggerFrameDuration(1);
        SimTime ul = TriggeredUl();
        SimTime end = t + tf + sifs + ul + sifs + MultiStaBaDuration(1);
        if (end > cap)
        {
            break;
        }
        Rx(i, t);
        Tx(i, t + tf + sifs, ul);
        Rx(i, t + tf + sifs + ul + sifs);
        TakeUl(s, m_cfg.mpdusPerTb);
        t = end + sifs;
    }
    while (!s.dl.empty())
    {
        uint32_t n = std::min<uint32_t>(m_cfg.mpdusPerTb, static_cast<uint32_t>(s.dl.size()));
        SimTime ex = DlExchange(n);
        if (t + ex > cap)
        {
            break;
        }
        Rx(i, t);
        Tx(i, t + ex - BaDuration(64), BaDuration(64));
        TakeDl(s, n);
        t = t + ex + sifs;
    }
    SimTime spEnd = std::min(std::max(start + m_cfg.minWakeDuration, t), cap);
    Doze(i, spEnd);
}

void
PowerSaveSim::BroadcastUoraSp(SimTime start)
{
    SimTime sifs = SimTime::Us(16);
    SimTime spEnd = std::min(start + m_cfg.broadcastSpDuration, m_end);
    std::vector<NodeId> contenders;
    for (NodeId i = 1; i <= m_cfg.nSta; ++i)
    {
        if (!m_sta[i].ul.empty() || !m_sta[i].dl.empty())
        {
            contenders.push_back(i);
            Wake(i, start);
        }
    }
    SimTime tf = TriggerFrameDuration(m_cfg.raRus);
    SimTime ul = TriggeredUl();
    SimTime round = tf + sifs + ul + sifs + MultiStaBaDuration(m_cfg.raRus);
    SimTime t = start;
    while (!contenders.empty())
    {
        if (t + round > spEnd)
        {
            for (NodeId i : contenders)
            {
                Doze(i, t);
            }
            break;
        }
        std::vector<UoraCandidate> eligible;
        for (NodeId i : contenders)
        {
            Rx(i, t);
            if (UoraUpdate(m_sta[i].obo, m_cfg.raRus, m_rng))
            {
                eligible.push_back({i, false});
            }
        }
        UoraTransmitResult res = UoraTransmitPhase(eligible, m_cfg.raRus, m_rng);
        SimTime roundEnd = t + round;
        bool cascade = roundEnd + sifs + round <= spEnd;
        std::vector<NodeId> remaining;
        std::vector<NodeId> succeeded;
        for (const RaRuOutcome& o : res.perRu)
        {
            for (NodeId i : o.stas)
            {
                Tx(i, t + tf + sifs, ul);
                bool ok = o.kind == RaRuOutcomeKind::Success;
                OcwOnResult(m_sta[i].obo, ok);
                if (ok)
                {
                    TakeUl(m_sta[i], m_cfg.mpdusPerTb);
                    succeeded.push_back(i);
                }
            }
        }
        SimTime dlT = roundEnd + sifs;
        for (NodeId i : contenders)
        {
            PsSta& s = m_sta[i];
            bool won = std::find(succeeded.begin(), succeeded.end(), i) != succeeded.end();
            SimTime doneAt = roundEnd;
            if (won && !s.dl.empty())
            {
                // buffered DL follows right after the MBA
                uint32_t n = std::min<uint32_t>(m_cfg.mpdusPerTb, static_cast<uint32_t>(s.dl.size()));
                SimTime ex = DlExchange(n);
                if (dlT + ex <= spEnd)
                {
                    Rx(i, dlT);
                    Tx(i, dlT + ex - BaDuration(64), BaDuration(64));
                    TakeDl(s, n);
                    doneAt = dlT + ex;
                    dlT = dlT + ex + sifs;
                }
            }
            bool done = won && s.ul.empty() && s.dl.empty();
            if (UoraTwtDoze(2, cascade, done) == PowerAction::Doze)
            {
                Doze(i, doneAt);
            }
            else
            {
                remaining.push_back(i);
            }
        }
        contenders = remaining;
        t = std::max(roundEnd + sifs, dlT);
    }
}

void
PowerSaveSim::PeriodicSp(SimTime start)
{
    SimTime sifs = SimTime::Us(16);
    SimTime spEnd = std::min(start + m_cfg.periodicSpDuration, m_end);
    SimTime tim = LegacyFrameDuration(48);
    std::vector<NodeId> active;
    for (NodeId i = 1; i <= m_cfg.nSta; ++i)
    {
        PsSta& s = m_sta[i];
        Wake(i, start);
        Rx(i, start);
        bool received = !m_rng.Bernoulli(m_cfg.timLossProb);
        bool stay = PeriodicTwtTick(received, !s.dl.empty()) == PowerAction::StayAwake || !s.ul.empty();
        if (stay)
        {
            active.push_back(i);
            Doze(i, spEnd);
        }
        else
        {
            Doze(i, start + tim);
        }
    }
    SimTime t = start + tim + sifs;
    for (NodeId i : active)
    {
        PsSta& s = m_sta[i];
        while (!s.ul.empty())
        {
            SimTime tf = TriggerFrameDuration(1);
            SimTime ul = TriggeredUl();
            SimTime end = t + tf + sifs + ul + sifs + MultiStaBaDuration(1);
            if (end > spEnd)
            {
                break;
            }
            Tx(i, t + tf + sifs, ul);
            TakeUl(s, m_cfg.mpdusPerTb);
            t = end + sifs;
        }
        while (!s.dl.empty())
        {
            uint32_t n = std::min<uint32_t>(m_cfg.mpdusPerTb, static_cast<uint32_t>(s.dl.size()));
            SimTime ex = DlExchange(n);
            if (t + ex > spEnd)
            {
                break;
            }
            Rx(i, t);
            Tx(i, t + ex - BaDuration(64), BaDuration(64));
            TakeDl(s, n);
            t = t + ex + sifs;
        }
    }
}

void
PowerSaveSim::IntraArrival(NodeId i, bool uplink)
{
    SimTime sifs = SimTime::Us(16);
    SimTime slot = SimTime::Us(9);
    SimTime start = std::max(m_sim.Now(), m_mediumFree) + SimTime::Us(34) +
                    slot * m_rng.UniformInt(0, 15);
    SimTime data = PpduDuration(m_dl, AmpduSubframeBytes(MpduBytes(1500)));
    SimTime end = start + data + sifs + BaDuration(64);
    if (end > m_end)
    {
        return;
    }
    m_mediumFree = end;
    if (uplink)
    {
        Tx(i, start, data);
        Rx(i, start + data + sifs);
    }
    else
    {
        Rx(i, start);
        Tx(i, start + data + sifs, BaDuration(64));
    }
    // the packet is handed over once its exchange is booked
    m_sim.ScheduleAt(end, EventKind::TimerExpiry, i, [this, i, uplink] {
        uplink ? TakeUl(m_sta[i], 1) : TakeDl(m_sta[i], 1);
    }, "delivered");
    SimTime classified = start + PreambleDuration(PpduKind::HeSu);
    for (NodeId j = 1; j <= m_cfg.nSta; ++j)
    {
        if (j == i)
        {
            continue;
        }
        if (auto wake = IntraPpduDoze(FrameClass::IntraBss, false, end, classified))
        {
            Doze(j, classified);
            Wake(j, *wake);
        }
    }
}

PowerSaveReport
PowerSaveSim::Run()
{
    ScheduleTraffic();
    uint64_t bi = m_cfg.beaconInterval.GetNs();
    for (uint64_t k = 0; k * bi < m_end.GetNs(); ++k)
    {
        SimTime tbtt = SimTime::Ns(k * bi);
        switch (m_mode)
        {
        case PowerSaveMode::IndividualTwt: {
            uint64_t slot = bi / m_cfg.nSta;
            for (NodeId i = 1; i <= m_cfg.nSta; ++i)
            {
                SimTime at = tbtt + SimTime::Ns((i - 1) * slot);
                if (at < m_end)
                {
                    m_sim.ScheduleAt(at, EventKind::TwtSpStart, i, [this, i, at] { IndividualSp(i, at); });
                }
            }
            break;
        }
        case PowerSaveMode::UoraTwt:
            m_sim.ScheduleAt(tbtt, EventKind::TwtSpStart, 0, [this, tbtt] { BroadcastUoraSp(tbtt); });
            break;
        case PowerSaveMode::PeriodicTwt:
            m_sim.ScheduleAt(tbtt, EventKind::TwtSpStart, 0, [this, tbtt] { PeriodicSp(tbtt); });
            break;
        case PowerSaveMode::IntraPpduOnly:
            break;
        }
    }
    m_sim.RunUntil(m_end);
    m_report.totalS = m_end.GetSeconds();
    for (NodeId i = 1; i <= m_cfg.nSta; ++i)
    {
        EnergyMeter& m = m_sta[i].meter;
        m.Finish(m_end);
        PowerSaveNodeReport r;
        r.node = i;
        r.awakeS = (m.AwakeTime() + m.TxTime()).GetSeconds();
        r.txS = m.TxTime().GetSeconds();
        r.dozeS = m.DozeTime().GetSeconds();
        r.energy = m.Energy();
        m_report.nodes.push_back(r);
    }
    return m_report;
}

} // namespace

PowerSaveReport
RunPowerSave(const PowerSaveConfig& cfg, PowerSaveMode mode, std::ostream* trace)
{
    if (cfg.nSta == 0 || cfg.durationS <= 0.0 || cfg.raRus == 0 || cfg.mpdusPerTb == 0)
    {
        throw InvalidConfigError("power-save scenario needs STAs, RA RUs and a positive duration");
    }
    PowerSaveSim sim(cfg, mode, trace);
    return sim.Run();
}

} // namespace axsim
