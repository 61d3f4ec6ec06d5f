#ifndef AXSIM_MAC_BASELINE_H
#define AXSIM_MAC_BASELINE_H

#include "axsim/phy_model.h"
#include "axsim/sim_core.h"

#include <cstdint>
#include <deque>
#include <vector>

namespace axsim
{

enum class AccessCategory : uint8_t
{
    Bk = 0,
    Be = 1,
    Vi = 2,
    Vo = 3,
};

struct EdcaParams
{
    uint32_t aifsn{2};
    uint32_t cwMin{15};
    uint32_t cwMax{1023};
};

struct MacTiming
{
    SimTime sifs{SimTime::Us(16)};
    SimTime difs{SimTime::Us(34)};
    SimTime txopLimit{SimTime::Us(3008)};
    uint32_t cwMin{15};
    uint32_t cwMax{1023};
    uint32_t retryLimit{7};

    /// DIFS = SIFS + 2 slots.
    SimTime Slot() const;
    SimTime Aifs(uint32_t aifsn) const;
    void Validate() const;
};

struct BackoffState
{
    uint32_t cw{15};
    uint32_t counter{0};
    AccessCategory ac{AccessCategory::Be};
    uint32_t cwMin{15};
    uint32_t cwMax{1023};
};

/// cw <- min(2(cw+1)-1, cwMax)
uint32_t NextCw(uint32_t cw, uint32_t cwMax);

uint32_t BackoffDraw(BackoffState& state, RandomSource& rng);
void BackoffOnFailure(BackoffState& state);
void BackoffOnSuccess(BackoffState& state);

enum class ChannelState
{
    Idle,
    Busy,
};

inline constexpr double kCcaThresholdDbm = -82.0;

/// Busy at or above the threshold, or whenever the NAV is set.
ChannelState CarrierSenseStep(double rxEnergyDbm, bool navBusy,
                              double ccaThresholdDbm = kCcaThresholdDbm);

/// MAC frame sizes in bytes, FCS included.
struct FrameSizes
{
    static constexpr uint32_t kRts = 20;
    static constexpr uint32_t kCts = 14;
    static constexpr uint32_t kAck = 14;
    static constexpr uint32_t kCfEnd = 20;
    /// Compressed BA with a 64-bit bitmap.
    static constexpr uint32_t kBa64 = 32;
    /// Compressed BA with a 256-bit bitmap.
    static constexpr uint32_t kBa256 = 56;
    /// QoS data header + LLC/SNAP + FCS around each payload.
    static constexpr uint32_t kMpduOverhead = 38;
    static constexpr uint32_t kAmpduDelimiter = 4;
};

/// Non-HT PPDU at the given rate (control frames use 6 Mbps).
SimTime LegacyFrameDuration(uint64_t bytes, int mbps = 6);
SimTime RtsDuration();
SimTime CtsDuration();
SimTime BaDuration(uint32_t bitmapBits = 64);
SimTime CfEndDuration();

/// Delimiter plus MPDU, padded to a 4-byte boundary.
uint64_t AmpduSubframeBytes(uint64_t mpduBytes);
uint64_t MpduBytes(uint64_t payloadBytes);

SimTime PpduDuration(const TxVector& tx, uint64_t psduBytes, uint32_t sigBSymbols = 0);

struct Mpdu
{
    NodeId src{kNoNode};
    NodeId dst{kNoNode};
    uint32_t payloadBytes{1500};
    uint64_t seq{0};
    SimTime arrival;
    uint8_t retries{0};
};

struct Ampdu
{
    std::vector<Mpdu> mpdus;
    uint64_t psduBytes{0};
    SimTime airtime;
};

/**
 * Number of leading MPDUs of `queue` that fit in one A-MPDU under the cap
 * and the airtime bound. Returns at least one when the queue is non-empty
 * and `forceOne` is set, even if that single MPDU overruns the bound.
 */
size_t AmpduFit(const TxVector& tx, const std::deque<Mpdu>& queue, size_t cap, SimTime maxAirtime,
                bool forceOne = true);
uint64_t AmpduPsduBytes(const std::deque<Mpdu>& queue, size_t count);

/// Longest PPDU that still leaves SIFS + response inside the TXOP.
SimTime MaxPpduInTxop(SimTime txopEnd, SimTime now, const MacTiming& timing, SimTime response);

struct AirtimeLedger
{
    SimTime rts;
    SimTime cts;
    SimTime data;
    SimTime ba;
    SimTime sifs;
    uint32_t ampduCount{0};

    SimTime
    Total() const
    {
        return rts + cts + data + ba + sifs;
    }
};

struct SuTxopParams
{
    MacTiming timing;
    TxVector data;
    size_t maxMpdus{64};
    uint32_t baBitmapBits{64};
    bool useRts{true};
};

struct SuTxopResult
{
    std::vector<Mpdu> delivered;
    std::vector<Mpdu> dropped;
    AirtimeLedger ledger;
    bool ctsTimeout{false};
    bool baLost{false};
};

/**
 * Isolated RTS/CTS + (A-MPDU, BA)* exchange with independent per-frame error
 * draws. Failed MPDUs stay at the head of `queue` with their retry count
 * bumped; `backoff` is reset on success and doubled on CTS timeout or when
 * nothing in an A-MPDU is acknowledged.
 */
SuTxopResult SuTxopExchange(std::deque<Mpdu>& queue, BackoffState& backoff,
                            const SuTxopParams& params, double ctsPer, double mpduPer,
                            RandomSource& rng);

} // namespace axsim

#endif
