#ifndef AXSIM_PHY_MODEL_H
#define AXSIM_PHY_MODEL_H

#include "axsim/sim_core.h"

#include <array>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

namespace axsim
{

/// Raised for parameter combinations the standard does not allow.
class InvalidConfigError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

enum class ScenarioKind
{
    Indoor,
    Outdoor
};

struct Vec3
{
    double x{0.0};
    double y{0.0};
    double z{0.0};
};

double Distance(const Vec3& a, const Vec3& b);

struct RadioConfig
{
    double txPowerDbm{18.0};
    uint32_t antennas{1};
    double antennaHeightM{1.5};
    double frequencyGhz{5.57};
    double noiseFigureDb{7.0};

    void Validate() const;
};

struct PathLossParams
{
    double frequencyGhz{5.57};
    double indoorExponent{3.5};
    double outdoorExponent{3.0};
    double minDistanceM{0.1};
    bool shadowing{false};
    double indoorShadowingDb{5.0};
    double outdoorShadowingDb{8.0};
};

inline constexpr double kSpeedOfLight = 299792458.0;

double FreeSpaceLossDb(double distanceM, double frequencyGhz);

/// Log-distance loss without shadowing; d is clamped to minDistanceM.
double PathLossDb(const Vec3& tx, const Vec3& rx, ScenarioKind kind, const PathLossParams& p = {});

/// One lognormal shadowing draw for a link (zero when shadowing is off).
double ShadowingDb(ScenarioKind kind, const PathLossParams& p, RngStream& channelRng);

double RxPowerDbm(double txDbm, double lossDb);

double DbmToMw(double dbm);
double MwToDbm(double mw);
double DbToLinear(double db);
double LinearToDb(double lin);

/// signal / (sum of interferers + noise), all summed in mW.
double SinrDb(double signalDbm, std::span<const double> interferersDbm, double noiseDbm);

double NoiseFloorDbm(double bandwidthHz, double noiseFigureDb = 7.0);

struct Mcs
{
    uint8_t index{0};
    uint8_t bitsPerSymbol{1};
    uint8_t rateNum{1};
    uint8_t rateDen{2};
    bool dcm{false};

    double
    CodingRate() const
    {
        return static_cast<double>(rateNum) / rateDen;
    }

    /// HE MCS 0..11. Throws InvalidConfigError for DCM on an index outside {0,1,3,4}.
    static Mcs He(int index, bool dcm = false);
    /// VHT MCS 0..9 (same constellation table, no 1024-QAM, no DCM).
    static Mcs Vht(int index);
    /// Non-HT rate from the 6..54 Mbps set.
    static Mcs Legacy(int mbps);
};

bool DcmAllowedIndex(int index);

struct OfdmNumerology
{
    double subcarrierSpacingHz;
    double symbolUs;

    static OfdmNumerology He();
    static OfdmNumerology Legacy();
    bool GiValid(double giUs) const;
};

/// data_sc * bits * rate * nss / (symbol + gi), halved with DCM.
double OfdmRate(const OfdmNumerology& num, const Mcs& mcs, uint32_t dataSubcarriers, uint32_t nss,
                double giUs);
double HeRate(const Mcs& mcs, uint32_t dataSubcarriers, uint32_t nss, double giUs);

double SpectralEfficiency(double giUs, const OfdmNumerology& num);

std::complex<double> DcmRotation(uint32_t k, uint32_t nSd);

/// Per-index SINR bonus applied when DCM is on.
struct DcmGainTable
{
    std::array<double, 12> bonusDb{3.5, 3.5, 3.5, 3.5, 3.5, 3.5, 3.5, 3.5, 3.5, 3.5, 3.5, 3.5};
};

double EffectiveSinr(double sinrDb, const Mcs& mcs, const DcmGainTable& gains = {});

/**
 * Logistic SINR to PER mapping at a reference length, extended to other
 * lengths by assuming independent bit errors.
 */
struct PerModel
{
    PerModel();

    double RefPer(double effSinrDb, const Mcs& mcs) const;
    double Per(double effSinrDb, const Mcs& mcs, uint64_t frameBits) const;
    /// ln(1 - PER) for the given length; stays finite for PER close to 1.
    double LogSuccess(double effSinrDb, const Mcs& mcs, double frameBits) const;

    /// Highest index meeting the PER target at reference length; 10/11 need >= 242 tones.
    Mcs SelectMcs(double effSinrDb, uint32_t ruTones, int maxIndex = 11) const;
    /// Lowest SINR at which SelectMcs returns `index` (or better).
    double RequiredSinr(int index) const;

    double
    Threshold(int index) const
    {
        return thresholdDb.at(index);
    }

    /// T(mcs) in dB; default 2 + 2.5 * index.
    std::array<double, 12> thresholdDb;
    double slopeDb{1.0};
    double refBits{1500.0 * 8.0};
    double target{0.1};
};

enum class PpduKind
{
    HeSu,
    HeMu,
    HeTb,
    HeErSu,
    Legacy,
    /// 802.11ac data PPDU, used only by the baseline scheme.
    Vht,
};

std::string_view PpduKindName(PpduKind kind);

/// Number of long training symbols for a stream count.
uint32_t LtfCount(uint32_t nss);

/// HE-SIG-B symbol count for an HE MU PPDU with the given user count.
uint32_t HeSigBSymbols(uint32_t nUsers, uint32_t bandwidthMhz);

SimTime PreambleDuration(PpduKind kind, uint32_t nssTotal = 1, uint32_t sigBSymbols = 0);

/// Everything needed to turn payload bytes into OFDM symbols.
struct TxVector
{
    PpduKind kind{PpduKind::Legacy};
    Mcs mcs;
    uint32_t dataSubcarriers{48};
    uint32_t nss{1};
    double giUs{0.8};

    OfdmNumerology Numerology() const;
    double Rate() const;
    double BitsPerSymbol() const;
    SimTime SymbolDuration() const;
};

TxVector LegacyTxVector(int mbps = 6);

/// Payload time: ceil((service + 8*bytes + tail) / bits-per-symbol) symbols.
SimTime DataDuration(const TxVector& tx, uint64_t bytes);
uint64_t DataSymbols(const TxVector& tx, uint64_t bytes);
/// Largest byte count that fits in the given number of symbols.
uint64_t BytesInSymbols(const TxVector& tx, uint64_t symbols);

/// SINR offset for one stream of a MIMO link.
/// Array gain nTx*nRx spread over the user's streams and all streams on the
/// RU, minus a fixed penalty when several users share the RU.
double StreamSinrOffsetDb(uint32_t nTx, uint32_t nRx, uint32_t nssUser, uint32_t nssTotalOnRu,
                          double muPenaltyDb = 3.0);

inline constexpr double kErSuBonusDb = 3.0;

enum class ChannelCoding
{
    Bcc,
    Ldpc
};

/// Metadata only; the rate formula is the same for both.
ChannelCoding CodingFor(uint32_t bandwidthMhz);

} // namespace axsim

#endif
