#include "axsim/spatial_reuse.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace axsim
{

void
ValidateBssColor(const BssColor& c)
{
    if (c.value == 0 || c.value > kMaxBssColor)
    {
        throw InvalidConfigError("BSS color " + std::to_string(c.value) + " outside [1, 63]");
    }
}

const char*
FrameClassName(FrameClass c)
{
    switch (c)
    {
    case FrameClass::IntraBss:
        return "intra_bss";
    case FrameClass::InterBss:
        return "inter_bss";
    case FrameClass::Unknown:
        return "unknown";
    }
    return "?";
}

uint16_t
PartialAidFromBssid(MacAddress bssid)
{
    return static_cast<uint16_t>((bssid >> 39) & 0x1ff);
}

namespace
{

bool
AnyAddressIn(const FrameObservation& f, const std::vector<MacAddress>& set)
{
    auto in = [&](const std::optional<MacAddress>& a) {
        return a && std::find(set.begin(), set.end(), *a) != set.end();
    };
    return in(f.ra) || in(f.ta) || in(f.bssid);
}

} // namespace

FrameClass
ClassifyFrame(const FrameObservation& f, const ClassifierContext& ctx)
{
    if (f.color && *f.color != 0 && !ctx.myColor.disabled)
    {
        return *f.color == ctx.myColor.value ? FrameClass::IntraBss : FrameClass::InterBss;
    }
    if (AnyAddressIn(f, {ctx.myBssid}))
    {
        return FrameClass::IntraBss;
    }
    if (f.bssid)
    {
        return FrameClass::InterBss;
    }
    if (f.groupId && f.partialAid)
    {
        if (*f.groupId == 0)
        {
            return *f.partialAid == PartialAidFromBssid(ctx.myBssid) ? FrameClass::IntraBss
                                                                     : FrameClass::InterBss;
        }
        if (*f.groupId == 63 && ctx.partialColor)
        {
            // partial color: the four low bits of the color
            return (*f.partialAid & 0xf) == (ctx.myColor.value & 0xf) ? FrameClass::IntraBss
                                                                      : FrameClass::InterBss;
        }
    }
    if (f.controlWithoutTa && f.ra && ctx.txopHolder && *f.ra == *ctx.txopHolder)
    {
        return FrameClass::IntraBss;
    }
    if (!ctx.multiBssidSet.empty())
    {
        if (AnyAddressIn(f, ctx.multiBssidSet))
        {
            return FrameClass::IntraBss;
        }
        if (f.ra || f.ta || f.bssid)
        {
            return FrameClass::InterBss;
        }
    }
    if (ctx.isAp && f.muPpdu)
    {
        return FrameClass::InterBss;
    }
    return FrameClass::Unknown;
}

std::optional<ConflictReport>
ColorConflictWatch(const std::set<uint8_t>& observed, uint8_t myColor)
{
    if (observed.count(myColor) == 0)
    {
        return std::nullopt;
    }
    return ConflictReport{observed};
}

bool
ConflictPersistence::Observe(bool conflict)
{
    streak = conflict ? streak + 1 : 0;
    return streak >= threshold;
}

uint8_t
ChooseNewColor(const std::set<uint8_t>& observed, uint8_t current)
{
    for (uint8_t c = 1; c <= kMaxBssColor; ++c)
    {
        if (c != current && observed.count(c) == 0)
        {
            return c;
        }
    }
    throw std::runtime_error("no free BSS color");
}

ColorChangeState
StartColorChange(const BssColor& current, uint8_t pendingNew, uint32_t nColorChange)
{
    ValidateBssColor(BssColor{pendingNew, false});
    ColorChangeState s;
    s.current = current;
    s.pendingNew = pendingNew;
    s.countdown = nColorChange;
    return s;
}

BeaconColorFields
ColorChangeAdvance(ColorChangeState& state)
{
    BeaconColorFields f;
    state.announcements++;
    if (state.done)
    {
        f.color = state.current.value;
        return f;
    }
    if (state.countdown > 0)
    {
        f.color = state.current.value;
        f.disabled = true;
        f.newColor = state.pendingNew;
        f.countdown = state.countdown;
        state.current.disabled = true;
        state.countdown--;
        return f;
    }
    state.current = BssColor{state.pendingNew, false};
    state.done = true;
    f.color = state.pendingNew;
    return f;
}

void
StaApplyBeacon(BssColor& staColor, const BeaconColorFields& f)
{
    staColor.disabled = f.disabled;
    if (!f.disabled)
    {
        staColor.value = f.color;
    }
}

void
TwoNav::Update(FrameClass cls, SimTime now, SimTime duration)
{
    SimTime until = now + duration;
    SimTime& nav = cls == FrameClass::IntraBss ? intraBss : basic;
    nav = std::max(nav, until);
}

void
TwoNav::CfEnd(FrameClass cls, SimTime now)
{
    if (cls == FrameClass::IntraBss && intraBss > now)
    {
        intraBss = now;
    }
}

bool
TwoNav::Idle(SimTime now) const
{
    return intraBss <= now && basic <= now;
}

bool
TwoNav::IdleForTrigger(SimTime now, bool addressedByIntraTrigger) const
{
    if (addressedByIntraTrigger)
    {
        return basic <= now;
    }
    return Idle(now);
}

SimTime
TwoNav::Expiry() const
{
    return std::max(intraBss, basic);
}

void
SingleNav::Update(NodeId from, SimTime now, SimTime duration)
{
    SimTime until = now + duration;
    if (until > expiry)
    {
        expiry = until;
        setter = from;
    }
}

void
SingleNav::CfEnd(NodeId from, SimTime now)
{
    if (from == setter && expiry > now)
    {
        expiry = now;
    }
}

bool
SingleNav::Idle(SimTime now) const
{
    return expiry <= now;
}

void
ObssPdConfig::Validate() const
{
    if (levelMinDbm > levelMaxDbm)
    {
        throw InvalidConfigError("obss_pd level_min exceeds level_max");
    }
}

double
ObssPdLevel(double txPowerDbm, const ObssPdConfig& cfg)
{
    return std::max(cfg.levelMinDbm,
                    std::min(cfg.levelMaxDbm, cfg.levelMinDbm + (cfg.txPowerRefDbm - txPowerDbm)));
}

std::optional<double>
MaxSrTxPowerDbm(double rxDbm, const ObssPdConfig& cfg)
{
    if (rxDbm >= cfg.levelMaxDbm)
    {
        return std::nullopt;
    }
    double p = std::ceil(cfg.levelMinDbm + cfg.txPowerRefDbm - rxDbm) - 1.0;
    while (ObssPdLevel(p, cfg) <= rxDbm)
    {
        p -= 1.0;
    }
    return p;
}

SrOutcome
SrDecision(FrameClass cls, double rxDbm, const TwoNav& nav, SimTime now, double candidateTxDbm,
           const ObssPdConfig& cfg, double ccaDbm)
{
    SrOutcome o;
    if (!nav.Idle(now))
    {
        o.updateNav = true;
        return o;
    }
    if (rxDbm < ccaDbm)
    {
        o.action = SrAction::ContendNormally;
        return o;
    }
    if (cls != FrameClass::InterBss)
    {
        o.updateNav = true;
        return o;
    }
    if (rxDbm < ObssPdLevel(candidateTxDbm, cfg))
    {
        o.action = SrAction::ContendSr;
        o.txPowerCapDbm = candidateTxDbm;
        return o;
    }
    o.updateNav = true;
    return o;
}

SrpOutcome
SrpGate(const SrpFields& tf, double rplDbm, double intendedTxDbm, SimTime ppduEnd)
{
    SrpOutcome o;
    o.txPowerCapDbm = tf.srpValueDbm - rplDbm;
    o.deadline = ppduEnd;
    o.opportunity = tf.srpAllowed && intendedTxDbm <= o.txPowerCapDbm;
    return o;
}

void
SrpSession::Open(const SrpOutcome& o)
{
    active = o.opportunity;
    deadline = o.deadline;
}

void
SrpSession::OnTrigger(const SrpFields& tf)
{
    if (!tf.srpAllowed)
    {
        active = false;
    }
}

bool
SrpSession::CanTransmit(SimTime start, SimTime duration) const
{
    return active && start + duration <= deadline;
}

} // namespace axsim
