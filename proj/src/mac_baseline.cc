#include "axsim/mac_baseline.h"

#include <algorithm>

namespace axsim
{

SimTime
MacTiming::Slot() const
{
    return SimTime::Ns((difs.GetNs() - sifs.GetNs()) / 2);
}

SimTime
MacTiming::Aifs(uint32_t aifsn) const
{
    return sifs + Slot() * aifsn;
}

void
MacTiming::Validate() const
{
    if (difs <= sifs)
    {
        throw InvalidConfigError("DIFS must exceed SIFS");
    }
    if ((difs.GetNs() - sifs.GetNs()) % 2 != 0)
    {
        throw InvalidConfigError("DIFS - SIFS must be two whole slots");
    }
    if (cwMin > cwMax)
    {
        throw InvalidConfigError("cw_min must not exceed cw_max");
    }
    if (txopLimit.GetNs() == 0)
    {
        throw InvalidConfigError("TXOP limit must be positive");
    }
}

uint32_t
NextCw(uint32_t cw, uint32_t cwMax)
{
    uint64_t next = 2 * (uint64_t{cw} + 1) - 1;
    return static_cast<uint32_t>(std::min<uint64_t>(next, cwMax));
}

uint32_t
BackoffDraw(BackoffState& state, RandomSource& rng)
{
    state.counter = static_cast<uint32_t>(rng.UniformInt(0, state.cw));
    return state.counter;
}

void
BackoffOnFailure(BackoffState& state)
{
    state.cw = NextCw(state.cw, state.cwMax);
}

void
BackoffOnSuccess(BackoffState& state)
{
    state.cw = state.cwMin;
}

ChannelState
CarrierSenseStep(double rxEnergyDbm, bool navBusy, double ccaThresholdDbm)
{
    if (navBusy || rxEnergyDbm >= ccaThresholdDbm)
    {
        return ChannelState::Busy;
    }
    return ChannelState::Idle;
}

SimTime
LegacyFrameDuration(uint64_t bytes, int mbps)
{
    TxVector tx = LegacyTxVector(mbps);
    return PreambleDuration(PpduKind::Legacy) + DataDuration(tx, bytes);
}

SimTime
RtsDuration()
{
    return LegacyFrameDuration(FrameSizes::kRts);
}

SimTime
CtsDuration()
{
    return LegacyFrameDuration(FrameSizes::kCts);
}

SimTime
BaDuration(uint32_t bitmapBits)
{
    return LegacyFrameDuration(bitmapBits > 64 ? FrameSizes::kBa256 : FrameSizes::kBa64);
}

SimTime
CfEndDuration()
{
    return LegacyFrameDuration(FrameSizes::kCfEnd);
}

uint64_t
MpduBytes(uint64_t payloadBytes)
{
    return payloadBytes + FrameSizes::kMpduOverhead;
}

uint64_t
AmpduSubframeBytes(uint64_t mpduBytes)
{
    uint64_t b = FrameSizes::kAmpduDelimiter + mpduBytes;
    return (b + 3) / 4 * 4;
}

SimTime
PpduDuration(const TxVector& tx, uint64_t psduBytes, uint32_t sigBSymbols)
{
    return PreambleDuration(tx.kind, tx.nss, sigBSymbols) + DataDuration(tx, psduBytes);
}

uint64_t
AmpduPsduBytes(const std::deque<Mpdu>& queue, size_t count)
{
    uint64_t total = 0;
    for (size_t i = 0; i < count && i < queue.size(); ++i)
    {
        total += AmpduSubframeBytes(MpduBytes(queue[i].payloadBytes));
    }
    return total;
}

size_t
AmpduFit(const TxVector& tx, const std::deque<Mpdu>& queue, size_t cap, SimTime maxAirtime,
         bool forceOne)
{
    size_t n = 0;
    uint64_t bytes = 0;
    while (n < queue.size() && n < cap)
    {
        uint64_t next = bytes + AmpduSubframeBytes(MpduBytes(queue[n].payloadBytes));
        if (PpduDuration(tx, next) > maxAirtime)
        {
            break;
        }
        bytes = next;
        ++n;
    }
    if (n == 0 && forceOne && !queue.empty() && cap > 0)
    {
        n = 1;
    }
    return n;
}

SimTime
MaxPpduInTxop(SimTime txopEnd, SimTime now, const MacTiming& timing, SimTime response)
{
    SimTime need = now + timing.sifs + timing.sifs + response;
    if (need >= txopEnd)
    {
        return SimTime();
    }
    return txopEnd - need;
}

SuTxopResult
SuTxopExchange(std::deque<Mpdu>& queue, BackoffState& backoff, const SuTxopParams& params,
               double ctsPer, double mpduPer, RandomSource& rng)
{
    SuTxopResult res;
    const MacTiming& t = params.timing;
    SimTime now;
    SimTime txopEnd = now + t.txopLimit;
    if (queue.empty())
    {
        return res;
    }
    if (params.useRts)
    {
        res.ledger.rts += RtsDuration();
        now += RtsDuration();
        if (rng.UniformReal() < ctsPer)
        {
            res.ctsTimeout = true;
            BackoffOnFailure(backoff);
            return res;
        }
        res.ledger.sifs += t.sifs;
        res.ledger.cts += CtsDuration();
        now += t.sifs + CtsDuration();
    }
    SimTime ba = BaDuration(params.baBitmapBits);
    bool first = true;
    while (!queue.empty())
    {
        SimTime maxPpdu = MaxPpduInTxop(txopEnd, now, t, ba);
        size_t n = AmpduFit(params.data, queue, params.maxMpdus, maxPpdu, first);
        if (n == 0)
        {
            break;
        }
        first = false;
        SimTime air = PpduDuration(params.data, AmpduPsduBytes(queue, n));
        res.ledger.sifs += t.sifs + t.sifs;
        res.ledger.data += air;
        res.ledger.ba += ba;
        res.ledger.ampduCount++;
        now += t.sifs + air + t.sifs + ba;

        std::vector<Mpdu> sent(queue.begin(), queue.begin() + n);
        queue.erase(queue.begin(), queue.begin() + n);
        std::vector<Mpdu> failed;
        for (Mpdu& m : sent)
        {
            if (rng.UniformReal() < mpduPer)
            {
                failed.push_back(m);
            }
            else
            {
                res.delivered.push_back(m);
            }
        }
        // failed MPDUs go back to the head, keeping their order
        for (auto it = failed.rbegin(); it != failed.rend(); ++it)
        {
            if (++it->retries > t.retryLimit)
            {
                res.dropped.push_back(*it);
            }
            else
            {
                queue.push_front(*it);
            }
        }
        if (failed.size() == sent.size())
        {
            res.baLost = true;
            BackoffOnFailure(backoff);
            return res;
        }
    }
    BackoffOnSuccess(backoff);
    return res;
}

} // namespace axsim
