#include "axsim/phy_model.h"

#include <algorithm>
#include <cmath>

namespace axsim
{

namespace
{

struct McsRow
{
    uint8_t bits;
    uint8_t num;
    uint8_t den;
};

constexpr std::array<McsRow, 12> kMcsTable{{
    {1, 1, 2},
    {2, 1, 2},
    {2, 3, 4},
    {4, 1, 2},
    {4, 3, 4},
    {6, 2, 3},
    {6, 3, 4},
    {6, 5, 6},
    {8, 3, 4},
    {8, 5, 6},
    {10, 3, 4},
    {10, 5, 6},
}};

// log(1 + e^x) without overflow
double
Softplus(double x)
{
    if (x > 30.0)
    {
        return x;
    }
    if (x < -30.0)
    {
        return std::exp(x);
    }
    return std::log1p(std::exp(x));
}

} // namespace

double
Distance(const Vec3& a, const Vec3& b)
{
    double dx = a.x - b.x;
    double dy = a.y - b.y;
    double dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void
RadioConfig::Validate() const
{
    if (!(txPowerDbm >= -10.0 && txPowerDbm <= 30.0))
    {
        throw InvalidConfigError("tx_power must lie in [-10, 30] dBm");
    }
    if (antennas < 1)
    {
        throw InvalidConfigError("antennas must be >= 1");
    }
    if (!(frequencyGhz > 0.0))
    {
        throw InvalidConfigError("frequency must be positive");
    }
}

double
FreeSpaceLossDb(double distanceM, double frequencyGhz)
{
    return 20.0 * std::log10(4.0 * M_PI * distanceM * frequencyGhz * 1e9 / kSpeedOfLight);
}

double
PathLossDb(const Vec3& tx, const Vec3& rx, ScenarioKind kind, const PathLossParams& p)
{
    double d = std::max(Distance(tx, rx), p.minDistanceM);
    double n = kind == ScenarioKind::Indoor ? p.indoorExponent : p.outdoorExponent;
    return FreeSpaceLossDb(1.0, p.frequencyGhz) + 10.0 * n * std::log10(d);
}

double
ShadowingDb(ScenarioKind kind, const PathLossParams& p, RngStream& channelRng)
{
    if (!p.shadowing)
    {
        return 0.0;
    }
    double sigma = kind == ScenarioKind::Indoor ? p.indoorShadowingDb : p.outdoorShadowingDb;
    return channelRng.Normal(0.0, sigma);
}

double
RxPowerDbm(double txDbm, double lossDb)
{
    return txDbm - lossDb;
}

double
DbmToMw(double dbm)
{
    return std::pow(10.0, dbm / 10.0);
}

double
MwToDbm(double mw)
{
    return 10.0 * std::log10(mw);
}

double
DbToLinear(double db)
{
    return std::pow(10.0, db / 10.0);
}

double
LinearToDb(double lin)
{
    return 10.0 * std::log10(lin);
}

double
SinrDb(double signalDbm, std::span<const double> interferersDbm, double noiseDbm)
{
    double denom = DbmToMw(noiseDbm);
    for (double i : interferersDbm)
    {
        denom += DbmToMw(i);
    }
    return LinearToDb(DbmToMw(signalDbm) / denom);
}

double
NoiseFloorDbm(double bandwidthHz, double noiseFigureDb)
{
    return -174.0 + 10.0 * std::log10(bandwidthHz) + noiseFigureDb;
}

bool
DcmAllowedIndex(int index)
{
    return index == 0 || index == 1 || index == 3 || index == 4;
}

Mcs
Mcs::He(int index, bool dcm)
{
    if (index < 0 || index > 11)
    {
        throw InvalidConfigError("HE MCS index must be 0..11");
    }
    if (dcm && !DcmAllowedIndex(index))
    {
        throw InvalidConfigError("DCM only allowed with MCS 0, 1, 3, 4");
    }
    const McsRow& r = kMcsTable[index];
    return Mcs{static_cast<uint8_t>(index), r.bits, r.num, r.den, dcm};
}

Mcs
Mcs::Vht(int index)
{
    if (index < 0 || index > 9)
    {
        throw InvalidConfigError("VHT MCS index must be 0..9");
    }
    const McsRow& r = kMcsTable[index];
    return Mcs{static_cast<uint8_t>(index), r.bits, r.num, r.den, false};
}

Mcs
Mcs::Legacy(int mbps)
{
    switch (mbps)
    {
    case 6:
        return Mcs{0, 1, 1, 2, false};
    case 9:
        return Mcs{1, 1, 3, 4, false};
    case 12:
        return Mcs{2, 2, 1, 2, false};
    case 18:
        return Mcs{3, 2, 3, 4, false};
    case 24:
        return Mcs{4, 4, 1, 2, false};
    case 36:
        return Mcs{5, 4, 3, 4, false};
    case 48:
        return Mcs{6, 6, 2, 3, false};
    case 54:
        return Mcs{7, 6, 3, 4, false};
    default:
        throw InvalidConfigError("not a non-HT rate: " + std::to_string(mbps));
    }
}

OfdmNumerology
OfdmNumerology::He()
{
    return OfdmNumerology{78125.0, 12.8};
}

OfdmNumerology
OfdmNumerology::Legacy()
{
    return OfdmNumerology{312500.0, 3.2};
}

bool
OfdmNumerology::GiValid(double giUs) const
{
    auto eq = [](double a, double b) { return std::fabs(a - b) < 1e-9; };
    if (symbolUs > 10.0)
    {
        return eq(giUs, 0.8) || eq(giUs, 1.6) || eq(giUs, 3.2);
    }
    return eq(giUs, 0.8);
}

double
OfdmRate(const OfdmNumerology& num, const Mcs& mcs, uint32_t dataSubcarriers, uint32_t nss,
         double giUs)
{
    if (nss < 1 || nss > 8)
    {
        throw InvalidConfigError("nss must be 1..8");
    }
    if (!num.GiValid(giUs))
    {
        throw InvalidConfigError("guard interval not valid for numerology");
    }
    if (mcs.dcm && (!DcmAllowedIndex(mcs.index) || nss > 2))
    {
        throw InvalidConfigError("DCM requires MCS 0/1/3/4 and at most 2 spatial streams");
    }
    double bits = static_cast<double>(dataSubcarriers) * mcs.bitsPerSymbol * mcs.CodingRate() * nss;
    if (mcs.dcm)
    {
        bits /= 2.0;
    }
    return bits / ((num.symbolUs + giUs) * 1e-6);
}

double
HeRate(const Mcs& mcs, uint32_t dataSubcarriers, uint32_t nss, double giUs)
{
    return OfdmRate(OfdmNumerology::He(), mcs, dataSubcarriers, nss, giUs);
}

double
SpectralEfficiency(double giUs, const OfdmNumerology& num)
{
    if (!num.GiValid(giUs))
    {
        throw InvalidConfigError("guard interval not valid for numerology");
    }
    return num.symbolUs / (num.symbolUs + giUs);
}

std::complex<double>
DcmRotation(uint32_t k, uint32_t nSd)
{
    if (nSd % 2 != 0)
    {
        throw InvalidConfigError("DCM needs an even number of data subcarriers");
    }
    if (k >= nSd / 2)
    {
        throw InvalidConfigError("DCM subcarrier index out of the lower half");
    }
    return ((k + nSd / 2) % 2 == 0) ? std::complex<double>(1.0, 0.0)
                                    : std::complex<double>(-1.0, 0.0);
}

double
EffectiveSinr(double sinrDb, const Mcs& mcs, const DcmGainTable& gains)
{
    if (!mcs.dcm)
    {
        return sinrDb;
    }
    return sinrDb + gains.bonusDb.at(mcs.index);
}

PerModel::PerModel()
{
    for (int i = 0; i < 12; ++i)
    {
        thresholdDb[i] = 2.0 + 2.5 * i;
    }
}

double
PerModel::RefPer(double effSinrDb, const Mcs& mcs) const
{
    double x = (effSinrDb - thresholdDb.at(mcs.index)) / slopeDb;
    // 1 / (1 + e^x)
    return std::exp(-Softplus(x));
}

double
PerModel::LogSuccess(double effSinrDb, const Mcs& mcs, double frameBits) const
{
    double x = (effSinrDb - thresholdDb.at(mcs.index)) / slopeDb;
    // ln(1 - 1/(1+e^x)) = -ln(1 + e^-x)
    return -Softplus(-x) * (frameBits / refBits);
}

double
PerModel::Per(double effSinrDb, const Mcs& mcs, uint64_t frameBits) const
{
    return -std::expm1(LogSuccess(effSinrDb, mcs, static_cast<double>(frameBits)));
}

Mcs
PerModel::SelectMcs(double effSinrDb, uint32_t ruTones, int maxIndex) const
{
    for (int i = std::min(maxIndex, 11); i >= 0; --i)
    {
        if (i >= 10 && ruTones < 242)
        {
            continue;
        }
        if (RefPer(effSinrDb, Mcs::He(i)) <= target)
        {
            return Mcs::He(i);
        }
    }
    return Mcs::He(0);
}

double
PerModel::RequiredSinr(int index) const
{
    return thresholdDb.at(index) + slopeDb * std::log((1.0 - target) / target);
}

std::string_view
PpduKindName(PpduKind kind)
{
    switch (kind)
    {
    case PpduKind::HeSu:
        return "HE-SU";
    case PpduKind::HeMu:
        return "HE-MU";
    case PpduKind::HeTb:
        return "HE-TB";
    case PpduKind::HeErSu:
        return "HE-ER-SU";
    case PpduKind::Legacy:
        return "legacy";
    case PpduKind::Vht:
        return "VHT";
    }
    return "?";
}

uint32_t
LtfCount(uint32_t nss)
{
    if (nss <= 2)
    {
        return std::max<uint32_t>(nss, 1);
    }
    return (nss + 1) / 2 * 2;
}

uint32_t
HeSigBSymbols(uint32_t nUsers, uint32_t bandwidthMhz)
{
    uint32_t channels = bandwidthMhz >= 40 ? 2 : 1;
    uint32_t perChannel = (nUsers + channels - 1) / channels;
    uint32_t common = 18 + 8 * std::max<uint32_t>(1, bandwidthMhz / 40);
    uint32_t bits = common + 52 * ((perChannel + 1) / 2);
    // MCS0 on 52 data subcarriers: 26 bits per symbol
    return (bits + 25) / 26;
}

SimTime
PreambleDuration(PpduKind kind, uint32_t nssTotal, uint32_t sigBSymbols)
{
    uint32_t ltf = LtfCount(nssTotal);
    switch (kind)
    {
    case PpduKind::Legacy:
        return SimTime::Us(20);
    case PpduKind::Vht:
        return SimTime::Us(36 + 4 * ltf);
    case PpduKind::HeSu:
        return SimTime::Us(36 + 8 * ltf);
    case PpduKind::HeErSu:
        return SimTime::Us(44 + 8 * ltf);
    case PpduKind::HeMu:
        return SimTime::Us(36 + 4 * sigBSymbols + 8 * ltf);
    case PpduKind::HeTb:
        return SimTime::Us(40 + 8 * ltf);
    }
    return SimTime::Us(20);
}

OfdmNumerology
TxVector::Numerology() const
{
    if (kind == PpduKind::Legacy || kind == PpduKind::Vht)
    {
        return OfdmNumerology::Legacy();
    }
    return OfdmNumerology::He();
}

double
TxVector::Rate() const
{
    return OfdmRate(Numerology(), mcs, dataSubcarriers, nss, giUs);
}

double
TxVector::BitsPerSymbol() const
{
    double bits = static_cast<double>(dataSubcarriers) * mcs.bitsPerSymbol * mcs.CodingRate() * nss;
    return mcs.dcm ? bits / 2.0 : bits;
}

SimTime
TxVector::SymbolDuration() const
{
    return SimTime::Ns(static_cast<uint64_t>(std::llround((Numerology().symbolUs + giUs) * 1000.0)));
}

TxVector
LegacyTxVector(int mbps)
{
    TxVector tx;
    tx.kind = PpduKind::Legacy;
    tx.mcs = Mcs::Legacy(mbps);
    tx.dataSubcarriers = 48;
    tx.nss = 1;
    tx.giUs = 0.8;
    return tx;
}

uint64_t
DataSymbols(const TxVector& tx, uint64_t bytes)
{
    double bits = 16.0 + 8.0 * static_cast<double>(bytes) + 6.0;
    double perSym = tx.BitsPerSymbol();
    // a tiny slack keeps exact multiples from rounding up on fractional code rates
    return static_cast<uint64_t>(std::ceil(bits / perSym - 1e-9));
}

SimTime
DataDuration(const TxVector& tx, uint64_t bytes)
{
    return tx.SymbolDuration() * DataSymbols(tx, bytes);
}

uint64_t
BytesInSymbols(const TxVector& tx, uint64_t symbols)
{
    double bits = static_cast<double>(symbols) * tx.BitsPerSymbol() - 22.0;
    if (bits < 8.0)
    {
        return 0;
    }
    return static_cast<uint64_t>(std::floor(bits / 8.0 + 1e-9));
}

double
StreamSinrOffsetDb(uint32_t nTx, uint32_t nRx, uint32_t nssUser, uint32_t nssTotalOnRu,
                   double muPenaltyDb)
{
    nssTotalOnRu = std::max(nssTotalOnRu, nssUser);
    double gain = LinearToDb(static_cast<double>(nTx) * nRx /
                             (static_cast<double>(nssUser) * nssTotalOnRu));
    if (nssTotalOnRu > nssUser)
    {
        gain -= muPenaltyDb;
    }
    return gain;
}

ChannelCoding
CodingFor(uint32_t bandwidthMhz)
{
    return bandwidthMhz <= 20 ? ChannelCoding::Bcc : ChannelCoding::Ldpc;
}

} // namespace axsim
