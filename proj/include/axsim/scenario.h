#ifndef AXSIM_SCENARIO_H
#define AXSIM_SCENARIO_H

#include "axsim/mac_baseline.h"
#include "axsim/mac_mu.h"
#include "axsim/phy_model.h"
#include "axsim/spatial_reuse.h"

#include <cstdint>
#include <string>
#include <vector>

namespace axsim
{

enum class ScenarioType
{
    IndoorSingle,
    OutdoorSingle,
    IndoorMulti,
    OutdoorMulti,
};

const char* ScenarioTypeName(ScenarioType t);
ScenarioType ParseScenarioType(const std::string& s);

inline bool
IsIndoor(ScenarioType t)
{
    return t == ScenarioType::IndoorSingle || t == ScenarioType::IndoorMulti;
}

inline bool
IsMulti(ScenarioType t)
{
    return t == ScenarioType::IndoorMulti || t == ScenarioType::OutdoorMulti;
}

enum class Scheme
{
    AcBaseline,
    AxOfdma,
    AxOfdmaMuMimo,
    AxNoSr,
    AxSr,
};

const char* SchemeName(Scheme s);
Scheme ParseScheme(const std::string& s);

/// What a scheme switches on.
struct SchemeFeatures
{
    bool he{false};
    bool ofdma{false};
    bool ulMuMimo{false};
    bool dlMuMimo{false};
    bool bssColor{false};
    bool twoNavs{false};
    bool obssPd{false};
};

SchemeFeatures FeaturesOf(Scheme s, bool dlMuMimoForMuMimoScheme = true);

enum class TrafficDirection
{
    Uplink,
    Downlink,
};

const char* TrafficDirectionName(TrafficDirection d);
TrafficDirection ParseTrafficDirection(const std::string& s);

struct SrConfig
{
    bool enabled{false};
    ObssPdConfig obssPd;
};

struct ScenarioConfig
{
    ScenarioType kind{ScenarioType::IndoorSingle};
    uint32_t bandwidthMhz{20};
    /// 0 picks the scenario default (1, 32 or 19).
    uint32_t nBss{0};
    uint32_t stasPerBss{64};
    double perStaRateBps{13e6};
    TrafficDirection direction{TrafficDirection::Uplink};
    uint32_t packetBytes{1500};

    RadioConfig apRadio{18.0, 8, 1.5, 5.57, 7.0};
    RadioConfig staRadio{18.0, 4, 1.5, 5.57, 7.0};
    /// Shadowing defaults to on outdoors and off indoors.
    PathLossParams pathLoss;

    MacTiming mac;
    SrConfig sr;
    double ccaDbm{kCcaThresholdDbm};
    /// Weakest PPDU a receiver will sync to; it holds the medium busy while decoding.
    double rxSensitivityDbm{-101.0};
    double preambleDetectSnrDb{4.0};
    /// Margin by which a later frame must exceed the locked one to take the receiver; 0 disables.
    double captureThresholdDb{10.0};

    // geometry
    double roomAreaM2{4.0};
    double roomGapM{1.0};
    uint32_t gridRows{4};
    uint32_t gridCols{8};
    double cellInradiusM{65.0};
    double apSpacingM{130.0};
    uint32_t hexRings{2};
    bool strongestApAssociation{false};

    // MAC features
    size_t acAmpduCap{64};
    size_t heAmpduCap{256};
    /// MU-RTS/CTS ahead of the first DL MU PPDU of a TXOP. DefaultConfig enables it for multi-BSS only.
    bool muRts{true};
    /// STAs of OFDMA schemes start under the MU EDCA set, so uplink waits for triggers until it lapses.
    bool muEdcaAtAssociation{true};
    double raFraction{0.0};
    bool dlMuMimo{true};
    uint32_t muMimoUsersPerRu{2};
    /// Link SNR on a 106-tone RU below which a STA is never grouped.
    double muMimoMinSnrDb{30.0};
    MuEdcaParams muEdca{0, 4, 10, SimTime::Us(2088960)};
    bool intraPpduDoze{true};
    /// Any overlapping frame above the CCA level corrupts the locked one.
    bool strictOverlapLoss{false};
    SimTime bsrpInterval{SimTime::Ms(20)};
    uint32_t maxQueuePackets{2000};
    double linkMarginUpDb{2.0};
    double linkMarginDownDb{0.25};
    bool uoraStrictBoundary{false};
    /// Fixed RU tone list per bandwidth; empty means the built-in default.
    std::vector<uint32_t> ulLayout;
    std::vector<uint32_t> dlLayout;

    uint64_t seed{1};
    double durationS{10.0};
    double warmupFraction{0.1};

    uint32_t BssCount() const;
    /// Throws InvalidConfigError on the first bad field.
    void Validate() const;
};

/// Defaults for a scenario kind; single-BSS kinds use 8/4 antennas, multi-BSS 2/2 at 20 MHz.
ScenarioConfig DefaultConfig(ScenarioType kind);

/// Default layout tones for a bandwidth.
std::vector<uint32_t> DefaultLayoutTones(uint32_t bandwidthMhz);

struct NodeSpec
{
    NodeId id{0};
    uint32_t bss{0};
    bool isAp{false};
    Vec3 pos;
    RadioConfig radio;
};

struct BssSpec
{
    NodeId ap{0};
    std::vector<NodeId> stas;
    BssColor color;
    Vec3 center;
};

struct Topology
{
    std::vector<NodeSpec> nodes;
    std::vector<BssSpec> bsss;
};

/// Side length of one single-BSS room block.
double RoomBlockSide(const ScenarioConfig& cfg);

/// Largest AP-to-STA distance possible in one room block (horizontal).
double IndoorMaxApStaDistance(const ScenarioConfig& cfg);

bool InsideHexagon(double dx, double dy, double inradius);

Topology GenerateTopology(const ScenarioConfig& cfg, RngStream& rng);

} // namespace axsim

#endif
