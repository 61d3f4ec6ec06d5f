#ifndef AXSIM_MAC_MU_H
#define AXSIM_MAC_MU_H

#include "axsim/mac_baseline.h"
#include "axsim/ru_plan.h"

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace axsim
{

enum class TriggerType : uint8_t
{
    Basic = 0,
    MuBar = 2,
    MuRts = 3,
    Bsrp = 4,
};

inline constexpr uint16_t kAidRandomAccess = 0;
inline constexpr uint16_t kAidUnassociatedRa = 2045;
inline constexpr uint16_t kAidReserved = 4095;

inline bool
IsRandomAccessAid(uint16_t aid)
{
    return aid == kAidRandomAccess || aid == kAidUnassociatedRa;
}

enum class MuMimoLtfMode : uint8_t
{
    Single = 0,
    Mu = 1,
};

struct SsAllocation
{
    uint8_t start{0};
    uint8_t count{1};
};

struct UserInfo
{
    uint16_t aid12{1};
    NodeId sta{kNoNode};
    Ru ru;
    std::optional<SsAllocation> ss;
    uint8_t mcsIndex{0};
};

struct TriggerFrame
{
    TriggerType type{TriggerType::Basic};
    bool cascade{false};
    MuMimoLtfMode ltfMode{MuMimoLtfMode::Single};
    uint32_t bandwidthMhz{20};
    std::vector<UserInfo> users;
    SimTime ulDuration;
    bool srpAllowed{false};
    double srpValueDbm{0.0};

    uint32_t RandomAccessRuCount() const;
    uint32_t ScheduledUserCount() const;
};

/// Empty result means the frame is well formed.
std::vector<std::string> ValidateTriggerFrame(const TriggerFrame& tf);

/// Control-frame sizes with 5-byte per-user fields.
uint32_t TriggerFrameBytes(uint32_t nUsers);
uint32_t MultiStaBaBytes(uint32_t nUsers);
SimTime TriggerFrameDuration(uint32_t nUsers);
SimTime MultiStaBaDuration(uint32_t nUsers);

// ---------------------------------------------------------------- UORA

struct OboState
{
    std::optional<uint32_t> obo;
    uint32_t ocw{7};
    uint32_t ocwMin{7};
    uint32_t ocwMax{31};
    /// RA RU index picked after a carrier-sense deferral.
    std::optional<uint32_t> pendingCandidate;
};

struct UoraConfig
{
    /// When set, obo == n_ra_rus leaves the STA at 0 but not eligible until the next TF.
    bool strictBoundary{false};
};

/// Returns whether the STA may pick an RA RU in this TF.
bool UoraUpdate(OboState& state, uint32_t nRaRus, RandomSource& rng, const UoraConfig& cfg = {});

struct UoraCandidate
{
    NodeId sta{kNoNode};
    /// Physical or virtual carrier sense reported busy during the SIFS after the TF.
    bool channelBusy{false};
};

enum class RaRuOutcomeKind
{
    Idle,
    Success,
    Collision,
    /// Single transmitter whose PPDU failed to decode.
    Error,
};

struct RaRuOutcome
{
    RaRuOutcomeKind kind{RaRuOutcomeKind::Idle};
    std::vector<NodeId> stas;
};

struct UoraTransmitResult
{
    std::vector<RaRuOutcome> perRu;
    std::vector<NodeId> deferred;
    std::map<NodeId, uint32_t> picks;
};

/**
 * Eligible STAs each pick one RA RU uniformly. Busy STAs defer and keep
 * obo = 0. A lone transmitter succeeds when `decodes` says so.
 */
UoraTransmitResult UoraTransmitPhase(const std::vector<UoraCandidate>& eligible, uint32_t nRaRus,
                                     RandomSource& rng,
                                     const std::function<bool(NodeId)>& decodes = {});

void OcwOnResult(OboState& state, bool acked);

// ---------------------------------------------------------------- scheduling

struct BsrRecord
{
    NodeId sta{kNoNode};
    uint16_t aid{0};
    std::array<uint64_t, 4> queuedBytes{0, 0, 0, 0};
    SimTime freshness;

    uint64_t
    Total() const
    {
        return queuedBytes[0] + queuedBytes[1] + queuedBytes[2] + queuedBytes[3];
    }
};

using BsrTable = std::map<NodeId, BsrRecord>;

struct SchedulePolicy
{
    /// Only `random_per_ru` exists today.
    std::string name{"random_per_ru"};
    /// Fraction of RUs (rounded) handed to UORA with aid12 = 0.
    double raFraction{0.0};
    bool muMimo{false};
    uint32_t usersPerMimoRu{2};
    uint32_t streamsPerUser{1};
    uint32_t maxStreamsPerRu{8};
    /// Fixed layout; when empty the widest catalog layout no larger than the
    /// candidate count is used.
    std::vector<uint32_t> layoutTones;
    /// STAs allowed to share an RU; unset means every STA.
    std::function<bool(NodeId)> muMimoCandidate;
};

/// Random-per-RU assignment. Returns a TF with no users when nothing can be scheduled.
TriggerFrame BuildSchedule(const BsrTable& bsr, const std::vector<RuLayout>& catalog,
                           uint32_t bandwidthMhz, const SchedulePolicy& policy, RandomSource& rng);

RuLayout PickLayout(const std::vector<RuLayout>& catalog, uint32_t bandwidthMhz,
                    const SchedulePolicy& policy, size_t candidates);

void BsrIngest(BsrTable& table, NodeId sta, uint16_t aid, AccessCategory ac, uint64_t queuedBytes,
               SimTime now);

struct BsrpTarget
{
    NodeId sta{kNoNode};
    uint16_t aid{0};
    uint64_t queuedBytes{0};
    bool decoded{true};
};

struct BsrpRoundResult
{
    std::vector<NodeId> updated;
    /// Always false: BSRP responses are not acknowledged.
    bool mbaSent{false};
};

BsrpRoundResult BsrpRound(BsrTable& table, const std::vector<BsrpTarget>& targets, SimTime now);

struct SubcarrierRange
{
    uint32_t first;
    uint32_t last;
};

/// Group of 12 tones: bit 0 lights the first six, bit 1 the last six.
SubcarrierRange NdpFeedbackEncode(int bit, uint32_t group);

// ---------------------------------------------------------------- UL MU

struct MultiStaBa
{
    std::map<NodeId, std::vector<bool>> bitmaps;
};

struct TbResponse
{
    NodeId sta{kNoNode};
    Ru ru;
    bool viaRandomAccess{false};
    SimTime dataAirtime;
    /// Per-MPDU decode results at the AP.
    std::vector<bool> mpduOk;

    bool
    Decoded() const
    {
        for (bool b : mpduOk)
        {
            if (b)
            {
                return true;
            }
        }
        return false;
    }
};

struct UlMuRoundResult
{
    bool accessFailure{false};
    MultiStaBa mba;
    SimTime ppduEnd;
    /// Per responder end time after padding.
    std::vector<SimTime> ends;
    SimTime mbaEnd;
};

/// PPDUs start SIFS after the TF ends; padding stretches each to ul_duration.
UlMuRoundResult UlMuRound(const TriggerFrame& tf, SimTime tfEnd, const std::vector<TbResponse>& responders,
                          const MacTiming& timing, BackoffState& apBackoff);

// ---------------------------------------------------------------- DL MU

enum class DlBaMode
{
    SigAIndicated,
    MuBar,
};

double PerRuPowerDbm(double totalDbm, uint32_t nRus);

struct DlUser
{
    NodeId sta{kNoNode};
    Ru ru;
    SimTime payloadAirtime;
    std::vector<bool> mpduOk;
    /// BA from this STA reached the AP.
    bool baDecoded{true};
};

struct DlMuRoundResult
{
    SimTime ppduDuration;
    SimTime end;
    bool failure{false};
    std::map<NodeId, uint32_t> delivered;
    std::vector<NodeId> baReceived;
};

/// HE-TB PPDU carrying one compressed BA on the STA's RU.
SimTime OfdmaBaDuration(const TxVector& tx, uint32_t bitmapBits = 256);
SimTime MuBarDuration(uint32_t nUsers);
SimTime Eifs(const MacTiming& timing);

/**
 * One HE-MU PPDU of length preamble + longest payload, then the OFDMA BA
 * either SIFS after the data or SIFS after a MU-BAR. With no BA back the
 * AP waits EIFS and doubles its cw.
 */
DlMuRoundResult DlMuRound(const std::vector<DlUser>& users, DlBaMode mode, SimTime start,
                          SimTime preamble, SimTime baAirtime, const MacTiming& timing,
                          BackoffState& apBackoff);

// ---------------------------------------------------------------- cascades

enum class Direction
{
    Downlink,
    Uplink,
};

struct AmpduContent
{
    Direction dir{Direction::Downlink};
    uint32_t acks{0};
    uint32_t dataMpdus{0};
    uint32_t triggers{0};
};

/// Checks one A-MPDU of a cascaded TXOP against the allowed content mix.
std::vector<std::string> ValidateCascadeAmpdu(const AmpduContent& c, bool ulRoundFollows);

struct CascadeRound
{
    Direction dir{Direction::Downlink};
    SimTime start;
    SimTime end;
    AmpduContent content;
    /// True for the trailing MBA-only frame.
    bool finalAck{false};
};

struct CascadePlanInput
{
    SimTime txopLimit{SimTime::Us(3008)};
    SimTime sifs{SimTime::Us(16)};
    SimTime dlRoundAirtime;
    SimTime ulRoundAirtime;
    SimTime finalAckAirtime;
    uint32_t dlRounds{0};
    uint32_t ulRounds{0};
    uint32_t dlMpdusPerRound{1};
    uint32_t ulMpdusPerRound{1};
};

struct CascadeLog
{
    std::vector<CascadeRound> rounds;
    std::vector<std::string> violations;
    bool budgetStopped{false};
};

/// Alternates DL and UL rounds until demand or the TXOP runs out. Rounds are
/// only started when they fit completely, including any closing MBA.
CascadeLog CascadedTxop(const CascadePlanInput& in);

// ---------------------------------------------------------------- MU-RTS

struct MuRtsTarget
{
    NodeId sta{kNoNode};
    SubchannelMask channels{1};
    /// STA decoded the MU-RTS and its NAV allowed a response.
    bool responds{true};
};

struct MuRtsOutcome
{
    bool success{false};
    bool bypassed{false};
    SubchannelMask ctsChannels{0};
    /// CTS copies per 20 MHz channel; identical content so they decode as one.
    std::map<uint32_t, uint32_t> ctsPerChannel;
    std::vector<NodeId> responders;
    SimTime end;
};

SimTime MuRtsDuration(uint32_t nUsers);

MuRtsOutcome MuRtsCts(const std::vector<MuRtsTarget>& targets, SubchannelMask channels, bool enabled,
                      SimTime start, const MacTiming& timing, BackoffState& apBackoff);

// ---------------------------------------------------------------- MU EDCA

struct MuEdcaParams
{
    /// 0 disables EDCA access while the timer runs.
    uint32_t aifsn{0};
    uint32_t ecwMin{4};
    uint32_t ecwMax{10};
    SimTime timer{SimTime::Ms(50)};
};

struct MuEdcaState
{
    std::array<MuEdcaParams, 4> params;
    std::array<std::optional<SimTime>, 4> deadline;

    bool Active(AccessCategory ac, SimTime now) const;
    bool EdcaDisabled(AccessCategory ac, SimTime now) const;
    /// Parameter set a fresh backoff draw should use at `now`.
    EdcaParams Effective(AccessCategory ac, SimTime now, const EdcaParams& normal) const;
};

/// Starts every AC's timer after an MBA-confirmed triggered UL.
void MuEdcaApply(MuEdcaState& state, SimTime now);

/// Loads cw bounds for the next draw; the running counter is left alone.
void PrepareDraw(BackoffState& backoff, const MuEdcaState& mu, SimTime now, const EdcaParams& normal);

} // namespace axsim

#endif
