#ifndef AXSIM_POWER_TWT_H
#define AXSIM_POWER_TWT_H

#include "axsim/mac_mu.h"
#include "axsim/spatial_reuse.h"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace axsim
{

/// mantissa * 2^exponent; throws std::overflow_error past 64 bits.
uint64_t WakeInterval(uint64_t mantissa, uint32_t exponent);

struct TwtSp
{
    SimTime targetWakeTime;
    SimTime minWakeDuration;
    bool trigger{false};
    /// 0 unrestricted, 1 no random access, 2 random access offered, 3 TIM/FILS at SP start.
    uint8_t flowId{0};
    uint64_t intervalMantissa{0};
    uint32_t intervalExponent{0};
};

void ValidateTwtSp(const TwtSp& sp);

struct TwtRequest
{
    SimTime wakeTime;
    SimTime duration;
    SimTime interval;
    bool listenInterval{false};
};

enum class TwtReplyKind
{
    Accept,
    Reject,
    Alternative,
};

struct TwtReply
{
    TwtReplyKind kind{TwtReplyKind::Accept};
    SimTime wakeTime;
    SimTime interval;
    /// Filled for listen-interval negotiation.
    std::optional<SimTime> nextBeacon;
};

/// AP-side book of exclusive service periods.
class TwtScheduleBook
{
  public:
    explicit TwtScheduleBook(SimTime beaconInterval = SimTime::Us(102400));

    /// Accepts, or offers the next free slot after the clashing SPs.
    TwtReply Negotiate(const TwtRequest& req, SimTime now);

    const std::vector<std::pair<SimTime, SimTime>>&
    Reserved() const
    {
        return m_reserved;
    }

  private:
    SimTime m_beaconInterval;
    std::vector<std::pair<SimTime, SimTime>> m_reserved;
};

enum class PowerMode
{
    Awake,
    Doze,
};

enum class PowerAction
{
    StayAwake,
    Doze,
};

/**
 * Power decision for a UORA-mode STA after a trigger inside a broadcast SP.
 * `done` means the STA sent its data or has nothing left to send.
 */
PowerAction UoraTwtDoze(uint8_t spFlowId, bool cascade, bool done);

/// TIM bit at a periodic SP start; a lost TIM keeps the STA awake.
PowerAction PeriodicTwtTick(bool timReceived, bool timBit);

/// Wake time when the ongoing PPDU lets this STA doze.
std::optional<SimTime> IntraPpduDoze(FrameClass cls, bool involvesMe, SimTime ppduEnd, SimTime now);

struct EnergyDraw
{
    double awake{1.0};
    double tx{1.8};
    double doze{0.05};
};

enum class RadioState
{
    Awake,
    Tx,
    Doze,
};

/// Per-node time-in-state ledger.
class EnergyMeter
{
  public:
    explicit EnergyMeter(SimTime start = SimTime(), RadioState initial = RadioState::Awake);

    void Set(RadioState s, SimTime now);
    void Finish(SimTime now);

    RadioState
    State() const
    {
        return m_state;
    }

    SimTime AwakeTime() const;
    SimTime TxTime() const;
    SimTime DozeTime() const;
    SimTime Total() const;
    double Energy(const EnergyDraw& d = {}) const;

  private:
    RadioState m_state;
    SimTime m_since;
    SimTime m_start;
    SimTime m_awake;
    SimTime m_tx;
    SimTime m_doze;
};

// ---------------------------------------------------------------- scenario

enum class PowerSaveMode
{
    IndividualTwt,
    UoraTwt,
    PeriodicTwt,
    IntraPpduOnly,
};

const char* PowerSaveModeName(PowerSaveMode m);

struct PowerSaveConfig
{
    uint32_t nSta{16};
    double durationS{10.0};
    SimTime beaconInterval{SimTime::Us(102400)};
    /// Mean per-STA packet rates (Poisson).
    double ulPacketsPerS{4.0};
    double dlPacketsPerS{4.0};
    uint32_t raRus{4};
    uint32_t mpdusPerTb{4};
    SimTime minWakeDuration{SimTime::Us(1000)};
    SimTime broadcastSpDuration{SimTime::Us(20000)};
    SimTime periodicSpDuration{SimTime::Us(10000)};
    double timLossProb{0.05};
    uint64_t seed{1};
};

struct PowerSaveNodeReport
{
    NodeId node{0};
    double awakeS{0.0};
    double txS{0.0};
    double dozeS{0.0};
    double energy{0.0};
};

struct PowerSaveReport
{
    PowerSaveMode mode{PowerSaveMode::IndividualTwt};
    std::vector<PowerSaveNodeReport> nodes;
    uint64_t ulOffered{0};
    uint64_t ulDelivered{0};
    uint64_t dlOffered{0};
    uint64_t dlDelivered{0};
    /// Transmissions attempted by a dozing STA; must stay zero.
    uint64_t txWhileDozing{0};
    /// Frames aimed at a dozing STA; must stay zero.
    uint64_t rxWhileDozing{0};
    double totalS{0.0};

    double MeanDozeFraction() const;
};

PowerSaveReport RunPowerSave(const PowerSaveConfig& cfg, PowerSaveMode mode,
                             std::ostream* trace = nullptr);

} // namespace axsim

#endif
