#include "axsim/config_io.h"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace axsim
{

using nlohmann::json;

namespace
{

/// Walks one JSON object, remembering which keys were read.
class Section
{
  public:
    Section(const json& j, std::string path)
        : m_j(j),
          m_path(std::move(path))
    {
        if (!m_j.is_object())
        {
            throw InvalidConfigError(Where("") + " must be an object");
        }
    }

    bool
    Has(const std::string& key)
    {
        m_seen.insert(key);
        return m_j.contains(key);
    }

    template <typename T>
    void
    Get(const std::string& key, T& out)
    {
        if (!Has(key))
        {
            return;
        }
        const json& v = m_j.at(key);
        try
        {
            if constexpr (std::is_same_v<T, bool>)
            {
                if (!v.is_boolean())
                {
                    throw InvalidConfigError("");
                }
                out = v.get<bool>();
            }
            else if constexpr (std::is_integral_v<T>)
            {
                if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<int64_t>() < 0))
                {
                    throw InvalidConfigError("");
                }
                out = v.get<T>();
            }
            else if constexpr (std::is_floating_point_v<T>)
            {
                if (!v.is_number() || !std::isfinite(v.get<double>()))
                {
                    throw InvalidConfigError("");
                }
                out = v.get<T>();
            }
            else
            {
                if (!v.is_string())
                {
                    throw InvalidConfigError("");
                }
                out = v.get<std::string>();
            }
        }
        catch (const std::exception&)
        {
            throw InvalidConfigError(Where(key) + " has the wrong type");
        }
    }

    void
    GetMicros(const std::string& key, SimTime& out)
    {
        double us = out.GetMicros();
        Get(key, us);
        if (us < 0.0)
        {
            throw InvalidConfigError(Where(key) + " must not be negative");
        }
        out = SimTime::FromMicros(us);
    }

    template <typename F>
    void
    Child(const std::string& key, F&& f)
    {
        if (!Has(key))
        {
            return;
        }
        Section s(m_j.at(key), Where(key));
        f(s);
        s.Finish();
    }

    const json&
    Raw(const std::string& key) const
    {
        return m_j.at(key);
    }

    std::string
    Where(const std::string& key) const
    {
        if (key.empty())
        {
            return m_path.empty() ? "config" : m_path;
        }
        return m_path.empty() ? key : m_path + "." + key;
    }

    void
    Finish() const
    {
        for (auto it = m_j.begin(); it != m_j.end(); ++it)
        {
            if (!m_seen.count(it.key()))
            {
                throw InvalidConfigError("unknown key " + Where(it.key()));
            }
        }
    }

  private:
    const json& m_j;
    std::string m_path;
    std::set<std::string> m_seen;
};

void
ReadRadio(Section& s, RadioConfig& r)
{
    s.Get("tx_power_dbm", r.txPowerDbm);
    s.Get("antennas", r.antennas);
    s.Get("antenna_height_m", r.antennaHeightM);
    s.Get("frequency_ghz", r.frequencyGhz);
    s.Get("noise_figure_db", r.noiseFigureDb);
}

json
WriteRadio(const RadioConfig& r)
{
    return json{{"tx_power_dbm", r.txPowerDbm},
                {"antennas", r.antennas},
                {"antenna_height_m", r.antennaHeightM},
                {"frequency_ghz", r.frequencyGhz},
                {"noise_figure_db", r.noiseFigureDb}};
}

std::vector<uint32_t>
ReadTones(const Section& s, const std::string& key)
{
    const json& v = s.Raw(key);
    if (!v.is_array())
    {
        throw InvalidConfigError(s.Where(key) + " must be an array of tone counts");
    }
    std::vector<uint32_t> out;
    for (const json& e : v)
    {
        if (!e.is_number_unsigned())
        {
            throw InvalidConfigError(s.Where(key) + " must be an array of tone counts");
        }
        out.push_back(e.get<uint32_t>());
    }
    return out;
}

template <typename E, typename P>
E
ParseEnum(const std::string& where, const std::string& name, P parse)
{
    try
    {
        return parse(name);
    }
    catch (const std::exception& e)
    {
        throw InvalidConfigError(where + ": " + e.what());
    }
}

void
ReadBody(Section& top, ScenarioConfig& c, ExperimentSpec& spec)
{
    std::string dir;
    top.Get("direction", dir);
    if (!dir.empty())
    {
        c.direction = ParseEnum<TrafficDirection>(top.Where("direction"), dir, ParseTrafficDirection);
    }
    top.Get("bw_mhz", c.bandwidthMhz);
    top.Get("n_bss", c.nBss);
    top.Get("stas_per_bss", c.stasPerBss);
    double mbps = c.perStaRateBps / 1e6;
    top.Get("per_sta_rate_mbps", mbps);
    c.perStaRateBps = mbps * 1e6;
    top.Get("packet_bytes", c.packetBytes);
    top.Get("seed", c.seed);
    top.Get("duration_s", c.durationS);
    top.Get("warmup_fraction", c.warmupFraction);

    top.Child("radio", [&](Section& s) {
        s.Child("ap", [&](Section& r) { ReadRadio(r, c.apRadio); });
        s.Child("sta", [&](Section& r) { ReadRadio(r, c.staRadio); });
    });
    top.Child("path_loss", [&](Section& s) {
        s.Get("frequency_ghz", c.pathLoss.frequencyGhz);
        s.Get("indoor_exponent", c.pathLoss.indoorExponent);
        s.Get("outdoor_exponent", c.pathLoss.outdoorExponent);
        s.Get("min_distance_m", c.pathLoss.minDistanceM);
        s.Get("shadowing", c.pathLoss.shadowing);
        s.Get("indoor_shadowing_db", c.pathLoss.indoorShadowingDb);
        s.Get("outdoor_shadowing_db", c.pathLoss.outdoorShadowingDb);
    });
    top.Child("phy", [&](Section& s) {
        s.Get("cca_dbm", c.ccaDbm);
        s.Get("rx_sensitivity_dbm", c.rxSensitivityDbm);
        s.Get("preamble_detect_snr_db", c.preambleDetectSnrDb);
        s.Get("capture_threshold_db", c.captureThresholdDb);
        s.Get("link_margin_up_db", c.linkMarginUpDb);
        s.Get("link_margin_down_db", c.linkMarginDownDb);
        s.Get("strict_overlap_loss", c.strictOverlapLoss);
    });
    top.Child("mac", [&](Section& s) {
        s.GetMicros("sifs_us", c.mac.sifs);
        s.GetMicros("difs_us", c.mac.difs);
        s.GetMicros("txop_limit_us", c.mac.txopLimit);
        s.Get("cw_min", c.mac.cwMin);
        s.Get("cw_max", c.mac.cwMax);
        s.Get("retry_limit", c.mac.retryLimit);
        s.Get("ac_ampdu_cap", c.acAmpduCap);
        s.Get("he_ampdu_cap", c.heAmpduCap);
        s.Get("max_queue_packets", c.maxQueuePackets);
    });
    top.Child("sr", [&](Section& s) {
        s.Get("enabled", c.sr.enabled);
        s.Child("obss_pd", [&](Section& o) {
            o.Get("level_min_dbm", c.sr.obssPd.levelMinDbm);
            o.Get("level_max_dbm", c.sr.obssPd.levelMaxDbm);
            o.Get("tx_power_ref_dbm", c.sr.obssPd.txPowerRefDbm);
        });
    });
    top.Child("geometry", [&](Section& s) {
        s.Get("room_area_m2", c.roomAreaM2);
        s.Get("room_gap_m", c.roomGapM);
        s.Get("grid_rows", c.gridRows);
        s.Get("grid_cols", c.gridCols);
        s.Get("cell_inradius_m", c.cellInradiusM);
        s.Get("ap_spacing_m", c.apSpacingM);
        s.Get("hex_rings", c.hexRings);
        s.Get("strongest_ap_association", c.strongestApAssociation);
    });
    top.Child("mu", [&](Section& s) {
        s.Get("mu_rts", c.muRts);
        s.Get("mu_edca_at_association", c.muEdcaAtAssociation);
        s.Get("ra_fraction", c.raFraction);
        s.Get("dl_mu_mimo", c.dlMuMimo);
        s.Get("users_per_ru", c.muMimoUsersPerRu);
        s.Get("mu_mimo_min_snr_db", c.muMimoMinSnrDb);
        s.Get("intra_ppdu_doze", c.intraPpduDoze);
        s.GetMicros("bsrp_interval_us", c.bsrpInterval);
        s.Get("uora_strict_boundary", c.uoraStrictBoundary);
        if (s.Has("ul_layout"))
        {
            c.ulLayout = ReadTones(s, "ul_layout");
        }
        if (s.Has("dl_layout"))
        {
            c.dlLayout = ReadTones(s, "dl_layout");
        }
        s.Child("mu_edca", [&](Section& e) {
            e.Get("aifsn", c.muEdca.aifsn);
            e.Get("ecw_min", c.muEdca.ecwMin);
            e.Get("ecw_max", c.muEdca.ecwMax);
            e.GetMicros("timer_us", c.muEdca.timer);
        });
    });
    top.Child("experiment", [&](Section& s) {
        if (s.Has("schemes"))
        {
            const json& v = s.Raw("schemes");
            if (!v.is_array() || v.empty())
            {
                throw InvalidConfigError(s.Where("schemes") + " must be a non-empty array of names");
            }
            for (const json& e : v)
            {
                if (!e.is_string())
                {
                    throw InvalidConfigError(s.Where("schemes") + " must be a non-empty array of names");
                }
                spec.schemes.push_back(ParseEnum<Scheme>(s.Where("schemes"), e.get<std::string>(), ParseScheme));
            }
        }
        if (s.Has("per_sta_rates_mbps"))
        {
            const json& v = s.Raw("per_sta_rates_mbps");
            if (!v.is_array())
            {
                throw InvalidConfigError(s.Where("per_sta_rates_mbps") + " must be an array");
            }
            for (const json& e : v)
            {
                if (!e.is_number() || e.get<double>() <= 0.0)
                {
                    throw InvalidConfigError(s.Where("per_sta_rates_mbps") + " entries must be positive numbers");
                }
                spec.perStaRatesBps.push_back(e.get<double>() * 1e6);
            }
        }
        if (s.Has("seeds"))
        {
            const json& v = s.Raw("seeds");
            if (!v.is_array())
            {
                throw InvalidConfigError(s.Where("seeds") + " must be an array");
            }
            for (const json& e : v)
            {
                if (!e.is_number_unsigned())
                {
                    throw InvalidConfigError(s.Where("seeds") + " entries must be non-negative integers");
                }
                spec.seeds.push_back(e.get<uint64_t>());
            }
        }
    });
}

} // namespace

ExperimentSpec
ParseExperimentSpec(const std::string& text)
{
    json j;
    try
    {
        j = json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        throw InvalidConfigError(std::string("malformed JSON: ") + e.what());
    }
    Section top(j, "");
    std::string kind = "indoor_single";
    top.Get("scenario", kind);
    ExperimentSpec spec;
    spec.cfg = DefaultConfig(ParseEnum<ScenarioType>(top.Where("scenario"), kind, ParseScenarioType));
    ReadBody(top, spec.cfg, spec);
    top.Finish();
    spec.cfg.Validate();
    return spec;
}

ExperimentSpec
LoadExperimentSpec(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw InvalidConfigError("cannot open " + path);
    }
    std::ostringstream os;
    os << in.rdbuf();
    return ParseExperimentSpec(os.str());
}

std::string
ConfigToJson(const ScenarioConfig& c)
{
    json j;
    j["scenario"] = ScenarioTypeName(c.kind);
    j["direction"] = TrafficDirectionName(c.direction);
    j["bw_mhz"] = c.bandwidthMhz;
    j["n_bss"] = c.nBss;
    j["stas_per_bss"] = c.stasPerBss;
    j["per_sta_rate_mbps"] = c.perStaRateBps / 1e6;
    j["packet_bytes"] = c.packetBytes;
    j["seed"] = c.seed;
    j["duration_s"] = c.durationS;
    j["warmup_fraction"] = c.warmupFraction;
    j["radio"] = {{"ap", WriteRadio(c.apRadio)}, {"sta", WriteRadio(c.staRadio)}};
    j["path_loss"] = {{"frequency_ghz", c.pathLoss.frequencyGhz},
                      {"indoor_exponent", c.pathLoss.indoorExponent},
                      {"outdoor_exponent", c.pathLoss.outdoorExponent},
                      {"min_distance_m", c.pathLoss.minDistanceM},
                      {"shadowing", c.pathLoss.shadowing},
                      {"indoor_shadowing_db", c.pathLoss.indoorShadowingDb},
                      {"outdoor_shadowing_db", c.pathLoss.outdoorShadowingDb}};
    j["phy"] = {{"cca_dbm", c.ccaDbm},
                {"rx_sensitivity_dbm", c.rxSensitivityDbm},
                {"preamble_detect_snr_db", c.preambleDetectSnrDb},
                {"capture_threshold_db", c.captureThresholdDb},
                {"link_margin_up_db", c.linkMarginUpDb},
                {"link_margin_down_db", c.linkMarginDownDb},
                {"strict_overlap_loss", c.strictOverlapLoss}};
    j["mac"] = {{"sifs_us", c.mac.sifs.GetMicros()},
                {"difs_us", c.mac.difs.GetMicros()},
                {"txop_limit_us", c.mac.txopLimit.GetMicros()},
                {"cw_min", c.mac.cwMin},
                {"cw_max", c.mac.cwMax},
                {"retry_limit", c.mac.retryLimit},
                {"ac_ampdu_cap", c.acAmpduCap},
                {"he_ampdu_cap", c.heAmpduCap},
                {"max_queue_packets", c.maxQueuePackets}};
    j["sr"] = {{"enabled", c.sr.enabled},
               {"obss_pd",
                {{"level_min_dbm", c.sr.obssPd.levelMinDbm},
                 {"level_max_dbm", c.sr.obssPd.levelMaxDbm},
                 {"tx_power_ref_dbm", c.sr.obssPd.txPowerRefDbm}}}};
    j["geometry"] = {{"room_area_m2", c.roomAreaM2},
                     {"room_gap_m", c.roomGapM},
                     {"grid_rows", c.gridRows},
                     {"grid_cols", c.gridCols},
                     {"cell_inradius_m", c.cellInradiusM},
                     {"ap_spacing_m", c.apSpacingM},
                     {"hex_rings", c.hexRings},
                     {"strongest_ap_association", c.strongestApAssociation}};
    j["mu"] = {{"mu_rts", c.muRts},
               {"mu_edca_at_association", c.muEdcaAtAssociation},
               {"ra_fraction", c.raFraction},
               {"dl_mu_mimo", c.dlMuMimo},
               {"users_per_ru", c.muMimoUsersPerRu},
               {"mu_mimo_min_snr_db", c.muMimoMinSnrDb},
               {"intra_ppdu_doze", c.intraPpduDoze},
               {"bsrp_interval_us", c.bsrpInterval.GetMicros()},
               {"uora_strict_boundary", c.uoraStrictBoundary},
               {"ul_layout", c.ulLayout},
               {"dl_layout", c.dlLayout},
               {"mu_edca",
                {{"aifsn", c.muEdca.aifsn},
                 {"ecw_min", c.muEdca.ecwMin},
                 {"ecw_max", c.muEdca.ecwMax},
                 {"timer_us", c.muEdca.timer.GetMicros()}}}};
    return j.dump(2);
}

} // namespace axsim
