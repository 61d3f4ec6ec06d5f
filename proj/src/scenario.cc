#include "axsim/scenario.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace axsim
{

const char*
ScenarioTypeName(ScenarioType t)
{
    switch (t)
    {
    case ScenarioType::IndoorSingle:
        return "indoor_single";
    case ScenarioType::OutdoorSingle:
        return "outdoor_single";
    case ScenarioType::IndoorMulti:
        return "indoor_multi";
    case ScenarioType::OutdoorMulti:
        return "outdoor_multi";
    }
    return "?";
}

ScenarioType
ParseScenarioType(const std::string& s)
{
    for (auto t : {ScenarioType::IndoorSingle, ScenarioType::OutdoorSingle, ScenarioType::IndoorMulti,
                   ScenarioType::OutdoorMulti})
    {
        if (s == ScenarioTypeName(t))
        {
            return t;
        }
    }
    throw InvalidConfigError("unknown scenario kind '" + s + "'");
}

const char*
SchemeName(Scheme s)
{
    switch (s)
    {
    case Scheme::AcBaseline:
        return "ac_baseline";
    case Scheme::AxOfdma:
        return "ax_ofdma";
    case Scheme::AxOfdmaMuMimo:
        return "ax_ofdma_mumimo";
    case Scheme::AxNoSr:
        return "ax_no_sr";
    case Scheme::AxSr:
        return "ax_sr";
    }
    return "?";
}

Scheme
ParseScheme(const std::string& s)
{
    for (auto k : {Scheme::AcBaseline, Scheme::AxOfdma, Scheme::AxOfdmaMuMimo, Scheme::AxNoSr, Scheme::AxSr})
    {
        if (s == SchemeName(k))
        {
            return k;
        }
    }
    throw InvalidConfigError("unknown scheme '" + s + "'");
}

SchemeFeatures
FeaturesOf(Scheme s, bool dlMuMimoForMuMimoScheme)
{
    SchemeFeatures f;
    switch (s)
    {
    case Scheme::AcBaseline:
        break;
    case Scheme::AxOfdma:
        f.he = true;
        f.ofdma = true;
        f.twoNavs = true;
        break;
    case Scheme::AxNoSr:
        f.he = true;
        f.ofdma = true;
        break;
    case Scheme::AxOfdmaMuMimo:
        f.he = true;
        f.ofdma = true;
        f.twoNavs = true;
        f.ulMuMimo = true;
        f.dlMuMimo = dlMuMimoForMuMimoScheme;
        break;
    case Scheme::AxSr:
        f.he = true;
        f.ofdma = true;
        f.bssColor = true;
        f.twoNavs = true;
        f.obssPd = true;
        break;
    }
    return f;
}

const char*
TrafficDirectionName(TrafficDirection d)
{
    return d == TrafficDirection::Uplink ? "ul" : "dl";
}

TrafficDirection
ParseTrafficDirection(const std::string& s)
{
    if (s == "ul" || s == "uplink")
    {
        return TrafficDirection::Uplink;
    }
    if (s == "dl" || s == "downlink")
    {
        return TrafficDirection::Downlink;
    }
    throw InvalidConfigError("direction must be ul or dl, got '" + s + "'");
}

uint32_t
ScenarioConfig::BssCount() const
{
    switch (kind)
    {
    case ScenarioType::IndoorSingle:
    case ScenarioType::OutdoorSingle:
        return 1;
    case ScenarioType::IndoorMulti:
        return gridRows * gridCols;
    case ScenarioType::OutdoorMulti:
        return 1 + 3 * hexRings * (hexRings + 1);
    }
    return 1;
}

void
ScenarioConfig::Validate() const
{
    if (bandwidthMhz != 20 && bandwidthMhz != 40 && bandwidthMhz != 80 && bandwidthMhz != 160)
    {
        throw InvalidConfigError("bandwidth must be 20, 40, 80 or 160 MHz");
    }
    if (nBss != 0 && nBss != BssCount())
    {
        throw InvalidConfigError("n_bss " + std::to_string(nBss) + " does not match the layout (" +
                                 std::to_string(BssCount()) + ")");
    }
    if (stasPerBss == 0 || stasPerBss > 2007)
    {
        throw InvalidConfigError("stas_per_bss must lie in [1, 2007]");
    }
    if (!(perStaRateBps >= 0.0))
    {
        throw InvalidConfigError("per_sta_rate must be non-negative");
    }
    if (packetBytes == 0 || packetBytes > 2304)
    {
        throw InvalidConfigError("packet_bytes must lie in [1, 2304]");
    }
    apRadio.Validate();
    staRadio.Validate();
    mac.Validate();
    sr.obssPd.Validate();
    if (!(rxSensitivityDbm <= ccaDbm))
    {
        throw InvalidConfigError("rx_sensitivity must not exceed the CCA threshold");
    }
    if (!(preambleDetectSnrDb > -20.0 && preambleDetectSnrDb < 40.0))
    {
        throw InvalidConfigError("preamble_detect_snr out of range");
    }
    if (!(captureThresholdDb >= 0.0 && captureThresholdDb < 60.0))
    {
        throw InvalidConfigError("capture_threshold out of range");
    }
    if (!(roomAreaM2 > 0.0) || roomGapM < 0.0)
    {
        throw InvalidConfigError("room geometry must be positive");
    }
    if (gridRows == 0 || gridCols == 0)
    {
        throw InvalidConfigError("grid must have at least one block");
    }
    if (!(cellInradiusM > 0.0) || !(apSpacingM > 0.0))
    {
        throw InvalidConfigError("cell sizes must be positive");
    }
    if (acAmpduCap == 0 || acAmpduCap > 64)
    {
        throw InvalidConfigError("ac A-MPDU cap must lie in [1, 64]");
    }
    if (heAmpduCap == 0 || heAmpduCap > 256)
    {
        throw InvalidConfigError("HE A-MPDU cap must lie in [1, 256]");
    }
    if (raFraction < 0.0 || raFraction > 1.0)
    {
        throw InvalidConfigError("ra_fraction must lie in [0, 1]");
    }
    if (muMimoUsersPerRu < 2 || muMimoUsersPerRu > 8)
    {
        throw InvalidConfigError("mu_mimo_users_per_ru must lie in [2, 8]");
    }
    if (!(durationS > 0.0))
    {
        throw InvalidConfigError("duration must be positive");
    }
    if (warmupFraction < 0.0 || warmupFraction >= 1.0)
    {
        throw InvalidConfigError("warmup_fraction must lie in [0, 1)");
    }
    for (const auto* tones : {&ulLayout, &dlLayout})
    {
        if (!tones->empty())
        {
            RuLayout l = LayoutFromTones(bandwidthMhz, *tones);
            auto v = ValidateLayout(l);
            if (!v.empty())
            {
                throw InvalidConfigError("RU layout: " + v.front().message);
            }
        }
    }
}

ScenarioConfig
DefaultConfig(ScenarioType kind)
{
    ScenarioConfig c;
    c.kind = kind;
    c.pathLoss.shadowing = !IsIndoor(kind);
    // a lone BSS has no hidden OBSS transmitter to silence
    c.muRts = IsMulti(kind);
    if (IsMulti(kind))
    {
        c.bandwidthMhz = 20;
        c.perStaRateBps = 3e6;
        c.apRadio.antennas = 2;
        c.staRadio.antennas = 2;
        c.sr.enabled = true;
        c.sr.obssPd = ObssPdConfig{-82.0, -62.0, 21.0};
    }
    if (kind == ScenarioType::IndoorMulti)
    {
        c.gridRows = 4;
        c.gridCols = 8;
    }
    if (kind == ScenarioType::OutdoorMulti)
    {
        c.hexRings = 2;
    }
    return c;
}

std::vector<uint32_t>
DefaultLayoutTones(uint32_t bandwidthMhz)
{
    switch (bandwidthMhz)
    {
    case 20:
        return {106, 26, 106};
    case 40:
        return {242, 242};
    case 80:
        return {242, 242, 242, 242};
    default:
        return std::vector<uint32_t>(8, 242);
    }
}

double
RoomBlockSide(const ScenarioConfig& cfg)
{
    double room = std::sqrt(cfg.roomAreaM2);
    return 4.0 * room + 3.0 * cfg.roomGapM;
}

double
IndoorMaxApStaDistance(const ScenarioConfig& cfg)
{
    double half = RoomBlockSide(cfg) / 2.0;
    return std::sqrt(2.0) * half;
}

bool
InsideHexagon(double dx, double dy, double inradius)
{
    // flat sides face the six neighbours at 0, 60 and 120 degrees
    const double c = 0.5;
    const double s = std::sqrt(3.0) / 2.0;
    return std::abs(dx) <= inradius && std::abs(c * dx + s * dy) <= inradius &&
           std::abs(-c * dx + s * dy) <= inradius;
}

namespace
{

std::vector<Vec3>
BssCenters(const ScenarioConfig& cfg)
{
    std::vector<Vec3> centers;
    switch (cfg.kind)
    {
    case ScenarioType::IndoorSingle:
    case ScenarioType::OutdoorSingle:
        centers.push_back(Vec3{0.0, 0.0, 0.0});
        break;
    case ScenarioType::IndoorMulti: {
        double pitch = RoomBlockSide(cfg) + cfg.roomGapM;
        for (uint32_t r = 0; r < cfg.gridRows; ++r)
        {
            for (uint32_t c = 0; c < cfg.gridCols; ++c)
            {
                centers.push_back(Vec3{c * pitch, r * pitch, 0.0});
            }
        }
        break;
    }
    case ScenarioType::OutdoorMulti: {
        int n = static_cast<int>(cfg.hexRings);
        double d = cfg.apSpacingM;
        // center first, then ring by ring
        for (int ring = 0; ring <= n; ++ring)
        {
            for (int q = -n; q <= n; ++q)
            {
                for (int r = -n; r <= n; ++r)
                {
                    int s = -q - r;
                    int dist = std::max({std::abs(q), std::abs(r), std::abs(s)});
                    if (dist != ring)
                    {
                        continue;
                    }
                    centers.push_back(Vec3{d * (q + r / 2.0), d * (r * std::sqrt(3.0) / 2.0), 0.0});
                }
            }
        }
        break;
    }
    }
    return centers;
}

Vec3
IndoorStaPosition(const ScenarioConfig& cfg, const Vec3& center, uint32_t room, RngStream& rng)
{
    double side = std::sqrt(cfg.roomAreaM2);
    double half = RoomBlockSide(cfg) / 2.0;
    uint32_t row = room / 4;
    uint32_t col = room % 4;
    double x0 = center.x - half + col * (side + cfg.roomGapM);
    double y0 = center.y - half + row * (side + cfg.roomGapM);
    return Vec3{x0 + rng.UniformReal() * side, y0 + rng.UniformReal() * side, cfg.staRadio.antennaHeightM};
}

Vec3
HexStaPosition(const ScenarioConfig& cfg, const Vec3& center, RngStream& rng)
{
    double r = cfg.cellInradiusM;
    double circum = r * 2.0 / std::sqrt(3.0);
    while (true)
    {
        double dx = (rng.UniformReal() * 2.0 - 1.0) * r;
        double dy = (rng.UniformReal() * 2.0 - 1.0) * circum;
        if (InsideHexagon(dx, dy, r))
        {
            return Vec3{center.x + dx, center.y + dy, cfg.staRadio.antennaHeightM};
        }
    }
}

} // namespace

Topology
GenerateTopology(const ScenarioConfig& cfg, RngStream& rng)
{
    cfg.Validate();
    Topology topo;
    auto centers = BssCenters(cfg);
    bool indoor = IsIndoor(cfg.kind);
    NodeId next = 0;
    for (size_t b = 0; b < centers.size(); ++b)
    {
        BssSpec bss;
        bss.center = centers[b];
        bss.color = BssColor{static_cast<uint8_t>(b % kMaxBssColor + 1), false};
        bss.ap = next++;
        NodeSpec ap;
        ap.id = bss.ap;
        ap.bss = static_cast<uint32_t>(b);
        ap.isAp = true;
        ap.pos = Vec3{centers[b].x, centers[b].y, cfg.apRadio.antennaHeightM};
        ap.radio = cfg.apRadio;
        topo.nodes.push_back(ap);
        for (uint32_t i = 0; i < cfg.stasPerBss; ++i)
        {
            NodeSpec sta;
            sta.id = next++;
            sta.bss = static_cast<uint32_t>(b);
            sta.radio = cfg.staRadio;
            // four STAs per room, rooms filled round-robin
            sta.pos = indoor ? IndoorStaPosition(cfg, centers[b], i % 16, rng) : HexStaPosition(cfg, centers[b], rng);
            bss.stas.push_back(sta.id);
            topo.nodes.push_back(sta);
        }
        topo.bsss.push_back(bss);
    }
    if (cfg.strongestApAssociation && topo.bsss.size() > 1)
    {
        for (auto& b : topo.bsss)
        {
            b.stas.clear();
        }
        ScenarioKind env = indoor ? ScenarioKind::Indoor : ScenarioKind::Outdoor;
        for (auto& n : topo.nodes)
        {
            if (n.isAp)
            {
                continue;
            }
            double best = std::numeric_limits<double>::infinity();
            for (size_t b = 0; b < topo.bsss.size(); ++b)
            {
                double loss = PathLossDb(topo.nodes[topo.bsss[b].ap].pos, n.pos, env, cfg.pathLoss);
                if (loss < best)
                {
                    best = loss;
                    n.bss = static_cast<uint32_t>(b);
                }
            }
            topo.bsss[n.bss].stas.push_back(n.id);
        }
    }
    return topo;
}

} // namespace axsim
