#include "axsim/experiment.h"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <iomanip>
#include <sstream>
#include <thread>

namespace axsim
{

namespace
{

double
MeanStaEnergy(const MetricsReport& r)
{
    double sum = 0.0;
    size_t n = 0;
    for (const NodeEnergy& e : r.energy)
    {
        if (!e.isAp)
        {
            sum += e.energy;
            n++;
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

ResultRow
MeanRow(const std::vector<ResultRow>& rows)
{
    ResultRow m = rows.front();
    double k = static_cast<double>(rows.size());
    m.offeredMbps = m.thptMbps = m.p5Mbps = m.delayMs = m.per = m.energyUnits = 0.0;
    for (const ResultRow& r : rows)
    {
        m.offeredMbps += r.offeredMbps / k;
        m.thptMbps += r.thptMbps / k;
        m.p5Mbps += r.p5Mbps / k;
        m.delayMs += r.delayMs / k;
        m.per += r.per / k;
        m.energyUnits += r.energyUnits / k;
    }
    return m;
}

struct Cell
{
    size_t scheme;
    size_t rate;
    size_t seed;
};

/// Runs cells on a small worker pool; out[i] belongs to cells[i].
std::vector<ResultRow>
RunCells(const ScenarioConfig& base, const std::vector<Scheme>& schemes, const SweepOptions& opt,
         const std::vector<Cell>& cells)
{
    std::vector<ResultRow> out(cells.size());
    std::vector<std::exception_ptr> errs(cells.size());
    std::atomic<size_t> next{0};
    auto work = [&] {
        for (size_t i = next++; i < cells.size(); i = next++)
        {
            try
            {
                ScenarioConfig c = base;
                c.perStaRateBps = opt.perStaRatesBps[cells[i].rate];
                c.seed = opt.seeds[cells[i].seed];
                Scheme s = schemes[cells[i].scheme];
                out[i] = MakeRow(c, s, RunScenario(c, s));
            }
            catch (...)
            {
                errs[i] = std::current_exception();
            }
        }
    };
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    unsigned n = opt.threads > 0 ? opt.threads : hw;
    n = static_cast<unsigned>(std::min<size_t>(n, cells.size()));
    if (n <= 1)
    {
        work();
    }
    else
    {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < n; ++t)
        {
            pool.emplace_back(work);
        }
        for (auto& t : pool)
        {
            t.join();
        }
    }
    for (auto& e : errs)
    {
        if (e)
        {
            std::rethrow_exception(e);
        }
    }
    return out;
}

SweepResult
Assemble(Scheme scheme, const SweepOptions& opt, const std::vector<ResultRow>& rows, size_t offset)
{
    SweepResult s;
    s.scheme = scheme;
    size_t nSeeds = opt.seeds.size();
    std::vector<double> offered;
    std::vector<double> delivered;
    for (size_t r = 0; r < opt.perStaRatesBps.size(); ++r)
    {
        SweepPoint p;
        p.perStaRateBps = opt.perStaRatesBps[r];
        for (size_t k = 0; k < nSeeds; ++k)
        {
            p.perSeed.push_back(rows[offset + r * nSeeds + k]);
        }
        p.mean = MeanRow(p.perSeed);
        offered.push_back(p.mean.offeredMbps);
        delivered.push_back(p.mean.thptMbps);
        s.saturationMbps = std::max(s.saturationMbps, p.mean.thptMbps);
        s.points.push_back(std::move(p));
    }
    s.knee = FindKnee(offered, delivered);
    return s;
}

void
CheckOptions(const SweepOptions& opt)
{
    if (opt.perStaRatesBps.empty())
    {
        throw InvalidConfigError("sweep needs at least one rate");
    }
    if (opt.seeds.empty())
    {
        throw InvalidConfigError("sweep needs at least one seed");
    }
}

std::string
Fixed(double v, int digits)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

} // namespace

ResultRow
MakeRow(const ScenarioConfig& cfg, Scheme scheme, const MetricsReport& r)
{
    ResultRow row;
    row.scenario = ScenarioTypeName(cfg.kind);
    row.scheme = SchemeName(scheme);
    row.bwMhz = cfg.bandwidthMhz;
    row.direction = TrafficDirectionName(cfg.direction);
    row.offeredMbps = r.offeredBps / 1e6;
    row.thptMbps = r.aggregateBps / 1e6;
    row.p5Mbps = r.p5Bps / 1e6;
    row.delayMs = r.meanDelayS * 1e3;
    row.per = r.per;
    row.energyUnits = MeanStaEnergy(r);
    return row;
}

MetricsReport
RunScenario(const ScenarioConfig& cfg, Scheme scheme, std::ostream* trace)
{
    cfg.Validate();
    return BuildReport(RunNetwork(cfg, scheme, trace));
}

std::vector<double>
DefaultSweepRates(ScenarioType kind, uint32_t bandwidthMhz, size_t points)
{
    double lo;
    double hi;
    if (IsMulti(kind))
    {
        lo = 0.05e6;
        hi = 3e6;
    }
    else
    {
        double scale = bandwidthMhz >= 160 ? 8.0 : bandwidthMhz >= 80 ? 4.0 : bandwidthMhz >= 40 ? 2.0 : 1.0;
        lo = 1e6 * scale;
        hi = 13e6 * scale;
    }
    std::vector<double> v;
    if (points <= 1)
    {
        v.push_back(hi);
        return v;
    }
    for (size_t i = 0; i < points; ++i)
    {
        v.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
    }
    return v;
}

std::optional<size_t>
FindKnee(const std::vector<double>& offered, const std::vector<double>& delivered)
{
    for (size_t i = 0; i < offered.size() && i < delivered.size(); ++i)
    {
        if (offered[i] > 0.0 && delivered[i] < 0.98 * offered[i])
        {
            return i;
        }
    }
    return std::nullopt;
}

SweepResult
Sweep(const ScenarioConfig& base, Scheme scheme, const SweepOptions& opt)
{
    return Compare(base, {scheme}, opt).entries.front().sweep;
}

CompareResult
Compare(const ScenarioConfig& base, const std::vector<Scheme>& schemes, const SweepOptions& opt)
{
    CheckOptions(opt);
    if (schemes.empty())
    {
        throw InvalidConfigError("compare needs at least one scheme");
    }
    base.Validate();
    std::vector<Cell> cells;
    for (size_t s = 0; s < schemes.size(); ++s)
    {
        for (size_t r = 0; r < opt.perStaRatesBps.size(); ++r)
        {
            for (size_t k = 0; k < opt.seeds.size(); ++k)
            {
                cells.push_back(Cell{s, r, k});
            }
        }
    }
    std::vector<ResultRow> rows = RunCells(base, schemes, opt, cells);
    CompareResult c;
    c.cfg = base;
    size_t per = opt.perStaRatesBps.size() * opt.seeds.size();
    for (size_t s = 0; s < schemes.size(); ++s)
    {
        CompareEntry e;
        e.scheme = schemes[s];
        e.sweep = Assemble(schemes[s], opt, rows, s * per);
        c.entries.push_back(std::move(e));
    }
    double ref = c.entries.front().sweep.saturationMbps;
    for (CompareEntry& e : c.entries)
    {
        e.ratio = ref > 0.0 ? e.sweep.saturationMbps / ref : 0.0;
    }
    return c;
}

void
WriteCsvHeader(std::ostream& os)
{
    os << "scenario,scheme,bw_mhz,direction,offered_mbps,thpt_mbps,p5_mbps,delay_ms,per,energy_units\n";
}

void
WriteCsvRow(std::ostream& os, const ResultRow& r)
{
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.4f,%.6f,%.6f", r.offeredMbps, r.thptMbps, r.p5Mbps, r.delayMs,
                  r.per, r.energyUnits);
    os << r.scenario << ',' << r.scheme << ',' << r.bwMhz << ',' << r.direction << ',' << buf << '\n';
}

void
WriteCsv(std::ostream& os, const std::vector<ResultRow>& rows)
{
    WriteCsvHeader(os);
    for (const ResultRow& r : rows)
    {
        WriteCsvRow(os, r);
    }
}

std::string
SummaryJson(const CompareResult& c)
{
    nlohmann::ordered_json j;
    j["scenario"] = ScenarioTypeName(c.cfg.kind);
    j["bw_mhz"] = c.cfg.bandwidthMhz;
    j["direction"] = TrafficDirectionName(c.cfg.direction);
    j["baseline"] = SchemeName(c.entries.front().scheme);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const CompareEntry& e : c.entries)
    {
        nlohmann::ordered_json r;
        r["scheme"] = SchemeName(e.scheme);
        r["saturation_mbps"] = e.sweep.saturationMbps;
        r["percent_of_baseline"] = 100.0 * e.ratio;
        if (e.sweep.knee)
        {
            r["knee_per_sta_mbps"] = e.sweep.points[*e.sweep.knee].perStaRateBps / 1e6;
        }
        else
        {
            r["knee_per_sta_mbps"] = nullptr;
        }
        rows.push_back(r);
    }
    j["schemes"] = rows;
    return j.dump(2);
}

std::string
SummaryText(const CompareResult& c)
{
    std::ostringstream os;
    os << ScenarioTypeName(c.cfg.kind) << ' ' << c.cfg.bandwidthMhz << " MHz " << TrafficDirectionName(c.cfg.direction)
       << '\n';
    for (const CompareEntry& e : c.entries)
    {
        os << "  " << std::left << std::setw(18) << SchemeName(e.scheme) << std::right << std::setw(12)
           << Fixed(e.sweep.saturationMbps, 1) << " Mbps" << std::setw(9) << Fixed(100.0 * e.ratio, 0) << "%\n";
    }
    return os.str();
}

void
WriteEnergyCsv(std::ostream& os, const MetricsReport& r)
{
    os << "node,awake_s,doze_s,energy_units\n";
    char buf[128];
    for (const NodeEnergy& e : r.energy)
    {
        std::snprintf(buf, sizeof(buf), "%u,%.6f,%.6f,%.6f\n", e.node, e.awakeS, e.dozeS, e.energy);
        os << buf;
    }
}

} // namespace axsim
