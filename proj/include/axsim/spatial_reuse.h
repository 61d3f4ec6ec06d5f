#ifndef AXSIM_SPATIAL_REUSE_H
#define AXSIM_SPATIAL_REUSE_H

#include "axsim/phy_model.h"
#include "axsim/sim_core.h"

#include <cstdint>
#include <optional>
#include <set>
#include <vector>

namespace axsim
{

using MacAddress = uint64_t;

struct BssColor
{
    uint8_t value{1};
    bool disabled{false};
};

inline constexpr uint8_t kMaxBssColor = 63;

/// Throws InvalidConfigError outside [1, 63].
void ValidateBssColor(const BssColor& c);

enum class FrameClass
{
    IntraBss,
    InterBss,
    Unknown,
};

const char* FrameClassName(FrameClass c);

/// Fields a receiver could read out of a PPDU; absent ones are nullopt.
struct FrameObservation
{
    std::optional<uint8_t> color;
    std::optional<MacAddress> ra;
    std::optional<MacAddress> ta;
    std::optional<MacAddress> bssid;
    std::optional<uint16_t> groupId;
    std::optional<uint16_t> partialAid;
    bool controlWithoutTa{false};
    /// VHT MU or HE MU PPDU (trigger-based PPDUs excluded).
    bool muPpdu{false};
};

struct ClassifierContext
{
    MacAddress myBssid{0};
    BssColor myColor;
    bool isAp{false};
    /// Partial BSS color bit of the last HE Operation element.
    bool partialColor{false};
    std::vector<MacAddress> multiBssidSet;
    std::optional<MacAddress> txopHolder;
};

/// BSSID[39:47] as carried in a group-0 partial AID.
uint16_t PartialAidFromBssid(MacAddress bssid);

FrameClass ClassifyFrame(const FrameObservation& f, const ClassifierContext& ctx);

// ---------------------------------------------------------------- color

struct ConflictReport
{
    std::set<uint8_t> observedColors;
};

/// Report carrying every foreign color seen, if any of them equals ours.
std::optional<ConflictReport> ColorConflictWatch(const std::set<uint8_t>& observed, uint8_t myColor);

/// Counts consecutive beacon intervals with a conflict.
struct ConflictPersistence
{
    uint32_t threshold{3};
    uint32_t streak{0};

    /// True once the conflict has lasted `threshold` intervals.
    bool Observe(bool conflict);
};

/// Lowest color in [1, 63] that is neither observed nor current.
uint8_t ChooseNewColor(const std::set<uint8_t>& observed, uint8_t current);

struct ColorChangeState
{
    BssColor current;
    uint8_t pendingNew{1};
    uint32_t countdown{0};
    uint32_t announcements{0};
    bool done{false};
};

ColorChangeState StartColorChange(const BssColor& current, uint8_t pendingNew, uint32_t nColorChange);

struct BeaconColorFields
{
    uint8_t color{1};
    bool disabled{false};
    uint8_t newColor{0};
    uint32_t countdown{0};
};

/// Emits the next beacon's fields; the last announcement switches colors.
BeaconColorFields ColorChangeAdvance(ColorChangeState& state);

/// STA side: adopt the advertised color once it is enabled again.
void StaApplyBeacon(BssColor& staColor, const BeaconColorFields& f);

// ---------------------------------------------------------------- NAV

struct TwoNav
{
    SimTime intraBss;
    SimTime basic;

    void Update(FrameClass cls, SimTime now, SimTime duration);
    /// Intra-BSS CF-End clears only the intra-BSS NAV.
    void CfEnd(FrameClass cls, SimTime now);
    bool Idle(SimTime now) const;
    /// An intra-BSS trigger addressing this STA overrides the intra-BSS NAV.
    bool IdleForTrigger(SimTime now, bool addressedByIntraTrigger) const;
    SimTime Expiry() const;
};

/// Legacy single NAV; a CF-End from the holder that set it resets it.
struct SingleNav
{
    SimTime expiry;
    NodeId setter{kNoNode};

    void Update(NodeId from, SimTime now, SimTime duration);
    void CfEnd(NodeId from, SimTime now);
    bool Idle(SimTime now) const;
};

// ---------------------------------------------------------------- OBSS_PD

struct ObssPdConfig
{
    double levelMinDbm{-82.0};
    double levelMaxDbm{-62.0};
    double txPowerRefDbm{21.0};

    void Validate() const;
};

double ObssPdLevel(double txPowerDbm, const ObssPdConfig& cfg = {});

/// Largest whole-dBm power whose OBSS_PD level still exceeds `rxDbm`.
std::optional<double> MaxSrTxPowerDbm(double rxDbm, const ObssPdConfig& cfg = {});

enum class SrAction
{
    Defer,
    ContendNormally,
    ContendSr,
};

struct SrOutcome
{
    SrAction action{SrAction::Defer};
    double txPowerCapDbm{0.0};
    bool updateNav{false};
};

SrOutcome SrDecision(FrameClass cls, double rxDbm, const TwoNav& nav, SimTime now, double candidateTxDbm,
                     const ObssPdConfig& cfg = {}, double ccaDbm = -82.0);

// ---------------------------------------------------------------- SRP

struct SrpFields
{
    bool srpAllowed{false};
    double srpValueDbm{0.0};
};

struct SrpOutcome
{
    bool opportunity{false};
    double txPowerCapDbm{0.0};
    SimTime deadline;
};

SrpOutcome SrpGate(const SrpFields& tf, double rplDbm, double intendedTxDbm, SimTime ppduEnd);

/// SRP window opened by an inter-BSS trigger.
struct SrpSession
{
    bool active{false};
    SimTime deadline;

    void Open(const SrpOutcome& o);
    /// A trigger that disallows SRP suspends the window at once.
    void OnTrigger(const SrpFields& tf);
    bool CanTransmit(SimTime start, SimTime duration) const;
};

} // namespace axsim

#endif
