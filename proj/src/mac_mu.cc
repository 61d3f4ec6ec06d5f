#include "axsim/mac_mu.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace axsim
{

uint32_t
TriggerFrame::RandomAccessRuCount() const
{
    uint32_t n = 0;
    for (const UserInfo& u : users)
    {
        if (u.aid12 == kAidRandomAccess)
        {
            ++n;
        }
    }
    return n;
}

uint32_t
TriggerFrame::ScheduledUserCount() const
{
    uint32_t n = 0;
    for (const UserInfo& u : users)
    {
        if (!IsRandomAccessAid(u.aid12))
        {
            ++n;
        }
    }
    return n;
}

std::vector<std::string>
ValidateTriggerFrame(const TriggerFrame& tf)
{
    std::vector<std::string> out;
    std::set<uint16_t> aids;
    std::map<uint32_t, uint32_t> usersPerRu;
    RuLayout layout;
    layout.bandwidthMhz = tf.bandwidthMhz;
    std::vector<Ru> distinct;
    for (size_t i = 0; i < tf.users.size(); ++i)
    {
        const UserInfo& u = tf.users[i];
        std::string where = "user " + std::to_string(i) + ": ";
        if (u.aid12 == kAidReserved || u.aid12 > kAidReserved)
        {
            out.push_back(where + "aid12 " + std::to_string(u.aid12) + " is reserved");
            continue;
        }
        if (IsRandomAccessAid(u.aid12))
        {
            if (u.ss)
            {
                out.push_back(where + "random-access RU carries a spatial stream allocation");
            }
        }
        else if (!aids.insert(u.aid12).second)
        {
            out.push_back(where + "aid12 " + std::to_string(u.aid12) + " addressed twice");
        }
        auto it = std::find(distinct.begin(), distinct.end(), u.ru);
        uint32_t idx = static_cast<uint32_t>(it - distinct.begin());
        if (it == distinct.end())
        {
            distinct.push_back(u.ru);
        }
        usersPerRu[idx]++;
    }
    for (const auto& [idx, n] : usersPerRu)
    {
        if (n < 2)
        {
            continue;
        }
        const Ru& ru = distinct[idx];
        if (!MuMimoAdmissible(ru.tone, n))
        {
            out.push_back("RU " + std::to_string(Tones(ru.tone)) + "@" + std::to_string(ru.position) +
                          " shared by " + std::to_string(n) + " users is not MU-MIMO admissible");
        }
        for (const UserInfo& u : tf.users)
        {
            if (u.ru == ru && (IsRandomAccessAid(u.aid12) || !u.ss))
            {
                out.push_back("shared RU user aid12 " + std::to_string(u.aid12) +
                              " lacks a spatial stream allocation");
            }
        }
    }
    layout.rus = distinct;
    for (const LayoutViolation& v : ValidateLayout(layout))
    {
        out.push_back("layout: " + v.message);
    }
    return out;
}

uint32_t
TriggerFrameBytes(uint32_t nUsers)
{
    // header 16 + common info 8 + FCS 4
    return 28 + 5 * nUsers;
}

uint32_t
MultiStaBaBytes(uint32_t nUsers)
{
    return 22 + 5 * nUsers;
}

SimTime
TriggerFrameDuration(uint32_t nUsers)
{
    return LegacyFrameDuration(TriggerFrameBytes(nUsers));
}

SimTime
MultiStaBaDuration(uint32_t nUsers)
{
    return LegacyFrameDuration(MultiStaBaBytes(nUsers));
}

bool
UoraUpdate(OboState& state, uint32_t nRaRus, RandomSource& rng, const UoraConfig& cfg)
{
    if (nRaRus == 0)
    {
        return false;
    }
    if (!state.obo)
    {
        state.obo = static_cast<uint32_t>(rng.UniformInt(0, state.ocw));
    }
    uint32_t obo = *state.obo;
    if (obo == 0)
    {
        return true;
    }
    if (obo < nRaRus)
    {
        state.obo = 0;
        return true;
    }
    state.obo = obo - nRaRus;
    if (obo == nRaRus)
    {
        return !cfg.strictBoundary;
    }
    return false;
}

UoraTransmitResult
UoraTransmitPhase(const std::vector<UoraCandidate>& eligible, uint32_t nRaRus, RandomSource& rng,
                  const std::function<bool(NodeId)>& decodes)
{
    UoraTransmitResult res;
    res.perRu.resize(nRaRus);
    if (nRaRus == 0)
    {
        for (const UoraCandidate& c : eligible)
        {
            res.deferred.push_back(c.sta);
        }
        return res;
    }
    for (const UoraCandidate& c : eligible)
    {
        uint32_t pick = static_cast<uint32_t>(rng.UniformInt(0, nRaRus - 1));
        res.picks[c.sta] = pick;
        if (c.channelBusy)
        {
            res.deferred.push_back(c.sta);
            continue;
        }
        res.perRu[pick].stas.push_back(c.sta);
    }
    for (RaRuOutcome& o : res.perRu)
    {
        if (o.stas.empty())
        {
            o.kind = RaRuOutcomeKind::Idle;
        }
        else if (o.stas.size() > 1)
        {
            o.kind = RaRuOutcomeKind::Collision;
        }
        else if (!decodes || decodes(o.stas.front()))
        {
            o.kind = RaRuOutcomeKind::Success;
        }
        else
        {
            o.kind = RaRuOutcomeKind::Error;
        }
    }
    return res;
}

void
OcwOnResult(OboState& state, bool acked)
{
    state.ocw = acked ? state.ocwMin : NextCw(state.ocw, state.ocwMax);
    state.obo.reset();
    state.pendingCandidate.reset();
}

namespace
{

template <typename T>
void
ShuffleWith(std::vector<T>& v, RandomSource& rng)
{
    for (size_t i = v.size(); i > 1; --i)
    {
        size_t j = static_cast<size_t>(rng.UniformInt(0, i - 1));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace

RuLayout
PickLayout(const std::vector<RuLayout>& catalog, uint32_t bandwidthMhz, const SchedulePolicy& policy,
           size_t candidates)
{
    if (!policy.layoutTones.empty())
    {
        return LayoutFromTones(bandwidthMhz, policy.layoutTones);
    }
    const RuLayout* best = nullptr;
    size_t want = std::max<size_t>(candidates, 1);
    for (const RuLayout& l : catalog)
    {
        if (l.rus.size() <= want && (!best || l.rus.size() > best->rus.size()))
        {
            best = &l;
        }
    }
    if (!best)
    {
        return LayoutFromTones(bandwidthMhz, {Tones(FullBandRu(bandwidthMhz))});
    }
    return *best;
}

TriggerFrame
BuildSchedule(const BsrTable& bsr, const std::vector<RuLayout>& catalog, uint32_t bandwidthMhz,
              const SchedulePolicy& policy, RandomSource& rng)
{
    TriggerFrame tf;
    tf.type = TriggerType::Basic;
    tf.bandwidthMhz = bandwidthMhz;

    std::vector<const BsrRecord*> pool;
    for (const auto& [sta, rec] : bsr)
    {
        if (rec.Total() > 0)
        {
            pool.push_back(&rec);
        }
    }
    if (pool.empty() && policy.raFraction <= 0.0)
    {
        return tf;
    }

    RuLayout layout = PickLayout(catalog, bandwidthMhz, policy, pool.size());
    size_t nRu = layout.rus.size();
    size_t nRa = static_cast<size_t>(std::lround(policy.raFraction * static_cast<double>(nRu)));
    nRa = std::min(nRa, nRu);
    if (policy.raFraction > 0.0 && nRa == 0)
    {
        nRa = 1;
    }

    // smallest RUs go to random access
    std::vector<size_t> order(nRu);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return Tones(layout.rus[a].tone) < Tones(layout.rus[b].tone);
    });
    std::vector<bool> isRa(nRu, false);
    for (size_t i = 0; i < nRa; ++i)
    {
        isRa[order[i]] = true;
    }

    ShuffleWith(pool, rng);
    size_t next = 0;
    for (size_t i = 0; i < nRu; ++i)
    {
        const Ru& ru = layout.rus[i];
        if (isRa[i])
        {
            UserInfo u;
            u.aid12 = kAidRandomAccess;
            u.ru = ru;
            tf.users.push_back(u);
            continue;
        }
        if (next >= pool.size())
        {
            continue;
        }
        uint32_t group = 1;
        if (policy.muMimo && policy.usersPerMimoRu > 1)
        {
            uint32_t byStreams = std::max<uint32_t>(1, policy.maxStreamsPerRu / std::max<uint32_t>(1, policy.streamsPerUser));
            uint32_t want = std::min(policy.usersPerMimoRu, byStreams);
            want = static_cast<uint32_t>(std::min<size_t>(want, pool.size() - next));
            auto ok = [&](size_t i) { return !policy.muMimoCandidate || policy.muMimoCandidate(pool[i]->sta); };
            if (want > 1 && MuMimoAdmissible(ru.tone, want) && ok(next))
            {
                // pull later candidates forward to fill the group
                group = 1;
                for (size_t j = next + 1; j < pool.size() && group < want; ++j)
                {
                    if (ok(j))
                    {
                        std::swap(pool[next + group], pool[j]);
                        group++;
                    }
                }
            }
        }
        for (uint32_t k = 0; k < group; ++k)
        {
            const BsrRecord* rec = pool[next++];
            UserInfo u;
            u.aid12 = rec->aid;
            u.sta = rec->sta;
            u.ru = ru;
            if (group > 1)
            {
                u.ss = SsAllocation{static_cast<uint8_t>(k * policy.streamsPerUser),
                                    static_cast<uint8_t>(policy.streamsPerUser)};
            }
            tf.users.push_back(u);
        }
    }
    return tf;
}

void
BsrIngest(BsrTable& table, NodeId sta, uint16_t aid, AccessCategory ac, uint64_t queuedBytes, SimTime now)
{
    BsrRecord& rec = table[sta];
    rec.sta = sta;
    rec.aid = aid;
    rec.queuedBytes[static_cast<size_t>(ac)] = queuedBytes;
    rec.freshness = now;
    if (rec.Total() == 0)
    {
        table.erase(sta);
    }
}

BsrpRoundResult
BsrpRound(BsrTable& table, const std::vector<BsrpTarget>& targets, SimTime now)
{
    BsrpRoundResult res;
    for (const BsrpTarget& t : targets)
    {
        if (!t.decoded)
        {
            continue;
        }
        BsrIngest(table, t.sta, t.aid, AccessCategory::Be, t.queuedBytes, now);
        res.updated.push_back(t.sta);
    }
    return res;
}

SubcarrierRange
NdpFeedbackEncode(int bit, uint32_t group)
{
    if (group >= 18)
    {
        throw std::out_of_range("NDP feedback group " + std::to_string(group) + " out of range");
    }
    if (bit != 0 && bit != 1)
    {
        throw std::invalid_argument("NDP feedback bit must be 0 or 1");
    }
    uint32_t first = group * 12 + (bit == 1 ? 6 : 0);
    return {first, first + 5};
}

UlMuRoundResult
UlMuRound(const TriggerFrame& tf, SimTime tfEnd, const std::vector<TbResponse>& responders,
          const MacTiming& timing, BackoffState& apBackoff)
{
    UlMuRoundResult res;
    SimTime start = tfEnd + timing.sifs;
    res.ppduEnd = start + tf.ulDuration;
    for (const TbResponse& r : responders)
    {
        if (r.dataAirtime > tf.ulDuration)
        {
            throw std::logic_error("HE-TB payload longer than ul_duration");
        }
        res.ends.push_back(res.ppduEnd);
        if (r.Decoded())
        {
            res.mba.bitmaps[r.sta] = r.mpduOk;
        }
    }
    if (res.mba.bitmaps.empty())
    {
        res.accessFailure = true;
        res.mbaEnd = res.ppduEnd;
        BackoffOnFailure(apBackoff);
        return res;
    }
    res.mbaEnd = res.ppduEnd + timing.sifs + MultiStaBaDuration(static_cast<uint32_t>(res.mba.bitmaps.size()));
    BackoffOnSuccess(apBackoff);
    return res;
}

double
PerRuPowerDbm(double totalDbm, uint32_t nRus)
{
    if (nRus == 0)
    {
        throw std::invalid_argument("power split over zero RUs");
    }
    return totalDbm - 10.0 * std::log10(static_cast<double>(nRus));
}

SimTime
OfdmaBaDuration(const TxVector& tx, uint32_t bitmapBits)
{
    uint32_t bytes = bitmapBits > 64 ? FrameSizes::kBa256 : FrameSizes::kBa64;
    return PreambleDuration(PpduKind::HeTb, tx.nss) + DataDuration(tx, bytes);
}

SimTime
MuBarDuration(uint32_t nUsers)
{
    return TriggerFrameDuration(nUsers);
}

SimTime
Eifs(const MacTiming& timing)
{
    return timing.sifs + LegacyFrameDuration(FrameSizes::kAck) + timing.difs;
}

DlMuRoundResult
DlMuRound(const std::vector<DlUser>& users, DlBaMode mode, SimTime start, SimTime preamble,
          SimTime baAirtime, const MacTiming& timing, BackoffState& apBackoff)
{
    DlMuRoundResult res;
    SimTime longest;
    for (const DlUser& u : users)
    {
        longest = std::max(longest, u.payloadAirtime);
    }
    res.ppduDuration = preamble + longest;
    SimTime t = start + res.ppduDuration;
    if (mode == DlBaMode::MuBar)
    {
        t += timing.sifs + MuBarDuration(static_cast<uint32_t>(users.size()));
    }
    for (const DlUser& u : users)
    {
        uint32_t ok = static_cast<uint32_t>(std::count(u.mpduOk.begin(), u.mpduOk.end(), true));
        if (ok > 0)
        {
            res.delivered[u.sta] = ok;
            if (u.baDecoded)
            {
                res.baReceived.push_back(u.sta);
            }
        }
    }
    if (res.baReceived.empty())
    {
        res.failure = true;
        res.end = t + Eifs(timing);
        BackoffOnFailure(apBackoff);
        return res;
    }
    res.end = t + timing.sifs + baAirtime;
    BackoffOnSuccess(apBackoff);
    return res;
}

std::vector<std::string>
ValidateCascadeAmpdu(const AmpduContent& c, bool ulRoundFollows)
{
    std::vector<std::string> out;
    if (c.acks > 1)
    {
        out.push_back("more than one acknowledgement in an A-MPDU");
    }
    if (c.dir == Direction::Uplink)
    {
        if (c.triggers > 0)
        {
            out.push_back("trigger frame inside an uplink A-MPDU");
        }
        return out;
    }
    if (ulRoundFollows && c.triggers == 0)
    {
        out.push_back("downlink A-MPDU lacks a trigger frame before an uplink round");
    }
    if (!ulRoundFollows && c.triggers > 0)
    {
        out.push_back("downlink A-MPDU carries a trigger frame but no uplink round follows");
    }
    return out;
}

CascadeLog
CascadedTxop(const CascadePlanInput& in)
{
    CascadeLog log;
    uint32_t dlLeft = in.dlRounds;
    uint32_t ulLeft = in.ulRounds;
    SimTime t;
    bool pendingUlAck = false;
    while (dlLeft > 0 || ulLeft > 0)
    {
        bool wantDl = dlLeft > 0;
        bool wantUl = ulLeft > 0;
        SimTime ulEnd = t + in.dlRoundAirtime + in.sifs + in.ulRoundAirtime;
        // UL data must still leave room for its acknowledgement
        SimTime need = wantUl ? ulEnd + in.sifs + in.finalAckAirtime : ulEnd;
        if (need > in.txopLimit)
        {
            log.budgetStopped = true;
            break;
        }
        CascadeRound dl;
        dl.dir = Direction::Downlink;
        dl.start = t;
        dl.end = t + in.dlRoundAirtime;
        dl.content = {Direction::Downlink, pendingUlAck ? 1u : 0u, wantDl ? in.dlMpdusPerRound : 0u,
                      wantUl ? 1u : 0u};
        CascadeRound ul;
        ul.dir = Direction::Uplink;
        ul.start = dl.end + in.sifs;
        ul.end = ulEnd;
        ul.content = {Direction::Uplink, wantDl ? 1u : 0u, wantUl ? in.ulMpdusPerRound : 0u, 0u};
        log.rounds.push_back(dl);
        log.rounds.push_back(ul);
        dlLeft -= wantDl ? 1 : 0;
        ulLeft -= wantUl ? 1 : 0;
        pendingUlAck = wantUl;
        t = ulEnd + in.sifs;
    }
    if (pendingUlAck)
    {
        CascadeRound mba;
        mba.dir = Direction::Downlink;
        mba.start = t;
        mba.end = t + in.finalAckAirtime;
        mba.content = {Direction::Downlink, 1, 0, 0};
        mba.finalAck = true;
        log.rounds.push_back(mba);
    }
    for (size_t i = 0; i < log.rounds.size(); ++i)
    {
        const CascadeRound& r = log.rounds[i];
        bool ulData = i + 1 < log.rounds.size() && log.rounds[i + 1].dir == Direction::Uplink &&
                      log.rounds[i + 1].content.dataMpdus > 0;
        for (std::string& v : ValidateCascadeAmpdu(r.content, ulData))
        {
            log.violations.push_back("round " + std::to_string(i) + ": " + v);
        }
    }
    return log;
}

SimTime
MuRtsDuration(uint32_t nUsers)
{
    return TriggerFrameDuration(nUsers);
}

MuRtsOutcome
MuRtsCts(const std::vector<MuRtsTarget>& targets, SubchannelMask channels, bool enabled, SimTime start,
         const MacTiming& timing, BackoffState& apBackoff)
{
    MuRtsOutcome res;
    if (!enabled)
    {
        res.success = true;
        res.bypassed = true;
        res.end = start;
        return res;
    }
    for (const MuRtsTarget& t : targets)
    {
        if (!t.responds)
        {
            continue;
        }
        SubchannelMask m = t.channels & channels;
        if (m == 0)
        {
            continue;
        }
        res.responders.push_back(t.sta);
        res.ctsChannels |= m;
        for (uint32_t b = 0; b < 8; ++b)
        {
            if (m & (1u << b))
            {
                res.ctsPerChannel[b]++;
            }
        }
    }
    res.end = start + MuRtsDuration(static_cast<uint32_t>(targets.size())) + timing.sifs + CtsDuration();
    res.success = res.ctsChannels != 0;
    if (!res.success)
    {
        BackoffOnFailure(apBackoff);
    }
    return res;
}

bool
MuEdcaState::Active(AccessCategory ac, SimTime now) const
{
    const auto& d = deadline[static_cast<size_t>(ac)];
    return d && now < *d;
}

bool
MuEdcaState::EdcaDisabled(AccessCategory ac, SimTime now) const
{
    return Active(ac, now) && params[static_cast<size_t>(ac)].aifsn == 0;
}

EdcaParams
MuEdcaState::Effective(AccessCategory ac, SimTime now, const EdcaParams& normal) const
{
    if (!Active(ac, now))
    {
        return normal;
    }
    const MuEdcaParams& p = params[static_cast<size_t>(ac)];
    return EdcaParams{p.aifsn, (1u << p.ecwMin) - 1, (1u << p.ecwMax) - 1};
}

void
MuEdcaApply(MuEdcaState& state, SimTime now)
{
    for (size_t i = 0; i < state.params.size(); ++i)
    {
        state.deadline[i] = now + state.params[i].timer;
    }
}

void
PrepareDraw(BackoffState& backoff, const MuEdcaState& mu, SimTime now, const EdcaParams& normal)
{
    EdcaParams e = mu.Effective(backoff.ac, now, normal);
    backoff.cwMin = e.cwMin;
    backoff.cwMax = e.cwMax;
    backoff.cw = std::clamp(backoff.cw, backoff.cwMin, backoff.cwMax);
}

} // namespace axsim
