// axsim: command-line front end for the 802.11ax network simulator.

#include "axsim/config_io.h"
#include "axsim/experiment.h"
#include "axsim/ru_plan.h"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

using namespace axsim;

namespace
{

struct CommonOpts
{
    std::string config;
    std::string scenario;
    std::string direction;
    uint32_t bw{0};
    double rateMbps{0.0};
    double durationS{0.0};
    uint64_t seed{0};
    bool seedSet{false};
};

void
AddCommon(CLI::App* app, CommonOpts& o)
{
    app->add_option("-c,--config", o.config, "JSON config file");
    app->add_option("--scenario", o.scenario, "indoor_single|outdoor_single|indoor_multi|outdoor_multi");
    app->add_option("--direction", o.direction, "ul|dl");
    app->add_option("--bw", o.bw, "Bandwidth in MHz (20, 40, 80, 160)");
    app->add_option("--rate", o.rateMbps, "Offered load per STA in Mbps");
    app->add_option("--duration", o.durationS, "Simulated seconds");
    app->add_option("--seed", o.seed, "Base seed")->each([&o](const std::string&) { o.seedSet = true; });
}

ExperimentSpec
Resolve(const CommonOpts& o)
{
    ExperimentSpec spec;
    if (!o.config.empty())
    {
        spec = LoadExperimentSpec(o.config);
    }
    else
    {
        spec.cfg = DefaultConfig(o.scenario.empty() ? ScenarioType::IndoorSingle : ParseScenarioType(o.scenario));
    }
    ScenarioConfig& c = spec.cfg;
    if (!o.config.empty() && !o.scenario.empty() && ParseScenarioType(o.scenario) != c.kind)
    {
        throw InvalidConfigError("--scenario disagrees with the config file");
    }
    if (!o.direction.empty())
    {
        c.direction = ParseTrafficDirection(o.direction);
    }
    if (o.bw != 0)
    {
        c.bandwidthMhz = o.bw;
    }
    if (o.rateMbps > 0.0)
    {
        c.perStaRateBps = o.rateMbps * 1e6;
    }
    if (o.durationS > 0.0)
    {
        c.durationS = o.durationS;
    }
    if (o.seedSet)
    {
        c.seed = o.seed;
    }
    c.Validate();
    return spec;
}

/// Writes to a file, or stdout when the path is empty or "-".
std::unique_ptr<std::ostream>
OpenOut(const std::string& path)
{
    if (path.empty() || path == "-")
    {
        return nullptr;
    }
    auto f = std::make_unique<std::ofstream>(path);
    if (!*f)
    {
        throw std::runtime_error("cannot write " + path);
    }
    return f;
}

std::vector<Scheme>
ParseSchemes(const std::vector<std::string>& names)
{
    std::vector<Scheme> out;
    for (const auto& n : names)
    {
        out.push_back(ParseScheme(n));
    }
    return out;
}

std::vector<Scheme>
DefaultSchemes(ScenarioType kind)
{
    if (IsMulti(kind))
    {
        return {Scheme::AcBaseline, Scheme::AxNoSr, Scheme::AxSr};
    }
    return {Scheme::AcBaseline, Scheme::AxOfdma, Scheme::AxOfdmaMuMimo};
}

} // namespace

int
main(int argc, char** argv)
{
    CLI::App app{"Discrete-event 802.11ax WLAN simulator"};
    app.require_subcommand(1);

    CommonOpts runOpts;
    std::string runScheme = "ax_ofdma";
    std::string runOut;
    std::string runEnergy;
    std::string runTrace;
    CLI::App* run = app.add_subcommand("run", "Simulate one configuration and print a CSV row");
    AddCommon(run, runOpts);
    run->add_option("-s,--scheme", runScheme, "Access scheme");
    run->add_option("-o,--output", runOut, "CSV output path");
    run->add_option("--energy", runEnergy, "Per-node energy CSV path");
    run->add_option("--trace", runTrace, "Event trace path");

    CommonOpts cmpOpts;
    std::vector<std::string> cmpSchemes;
    std::vector<double> cmpRates;
    std::vector<uint64_t> cmpSeeds;
    unsigned cmpThreads = 0;
    size_t cmpPoints = 7;
    std::string cmpOut;
    std::string cmpJson;
    CLI::App* cmp = app.add_subcommand("compare", "Sweep several schemes and report saturation ratios");
    AddCommon(cmp, cmpOpts);
    cmp->add_option("--schemes", cmpSchemes, "Schemes; the first is the 100% reference")->delimiter(',');
    cmp->add_option("--rates", cmpRates, "Per-STA loads in Mbps")->delimiter(',');
    cmp->add_option("--seeds", cmpSeeds, "Seeds to average over")->delimiter(',');
    cmp->add_option("--points", cmpPoints, "Ladder length when --rates is absent");
    cmp->add_option("-j,--threads", cmpThreads, "Worker threads (0 = all cores)");
    cmp->add_option("-o,--output", cmpOut, "CSV of every seed-averaged point");
    cmp->add_option("--json", cmpJson, "Summary JSON path");

    CommonOpts swOpts;
    std::string swScheme = "ax_ofdma";
    std::vector<double> swRates;
    std::vector<uint64_t> swSeeds;
    unsigned swThreads = 0;
    size_t swPoints = 7;
    std::string swOut;
    CLI::App* sweep = app.add_subcommand("sweep", "Offered-load sweep for one scheme");
    AddCommon(sweep, swOpts);
    sweep->add_option("-s,--scheme", swScheme, "Access scheme");
    sweep->add_option("--rates", swRates, "Per-STA loads in Mbps")->delimiter(',');
    sweep->add_option("--seeds", swSeeds, "Seeds to average over")->delimiter(',');
    sweep->add_option("--points", swPoints, "Ladder length when --rates is absent");
    sweep->add_option("-j,--threads", swThreads, "Worker threads (0 = all cores)");
    sweep->add_option("-o,--output", swOut, "CSV output path");

    std::string valPath;
    bool valPrint = false;
    CLI::App* val = app.add_subcommand("validate-config", "Check a config file; exit 1 on the first problem");
    val->add_option("config", valPath, "JSON config file")->required();
    val->add_flag("--print", valPrint, "Print the resolved config");

    uint32_t dumpBw = 20;
    CLI::App* dump = app.add_subcommand("dump-layouts", "List the RU layouts for a bandwidth");
    dump->add_option("--bw", dumpBw, "Bandwidth in MHz");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*run)
        {
            ExperimentSpec spec = Resolve(runOpts);
            Scheme scheme = ParseScheme(runScheme);
            std::unique_ptr<std::ostream> trace = OpenOut(runTrace);
            MetricsReport r = RunScenario(spec.cfg, scheme, trace.get());
            auto out = OpenOut(runOut);
            std::vector<ResultRow> rows{MakeRow(spec.cfg, scheme, r)};
            WriteCsv(out ? *out : std::cout, rows);
            if (!runEnergy.empty())
            {
                auto e = OpenOut(runEnergy);
                WriteEnergyCsv(e ? *e : std::cout, r);
            }
            return 0;
        }
        if (*cmp || *sweep)
        {
            bool isCmp = static_cast<bool>(*cmp);
            ExperimentSpec spec = Resolve(isCmp ? cmpOpts : swOpts);
            SweepOptions opt;
            std::vector<double>& rates = isCmp ? cmpRates : swRates;
            std::vector<uint64_t>& seeds = isCmp ? cmpSeeds : swSeeds;
            for (double m : rates)
            {
                opt.perStaRatesBps.push_back(m * 1e6);
            }
            if (opt.perStaRatesBps.empty())
            {
                opt.perStaRatesBps = spec.perStaRatesBps;
            }
            if (opt.perStaRatesBps.empty())
            {
                opt.perStaRatesBps = DefaultSweepRates(spec.cfg.kind, spec.cfg.bandwidthMhz,
                                                       isCmp ? cmpPoints : swPoints);
            }
            opt.seeds = !seeds.empty() ? seeds : !spec.seeds.empty() ? spec.seeds : std::vector<uint64_t>{spec.cfg.seed};
            opt.threads = isCmp ? cmpThreads : swThreads;

            std::vector<Scheme> schemes;
            if (isCmp)
            {
                schemes = !cmpSchemes.empty()     ? ParseSchemes(cmpSchemes)
                          : !spec.schemes.empty() ? spec.schemes
                                                  : DefaultSchemes(spec.cfg.kind);
            }
            else
            {
                schemes = {ParseScheme(swScheme)};
            }
            CompareResult res = Compare(spec.cfg, schemes, opt);
            std::vector<ResultRow> rows;
            for (const CompareEntry& e : res.entries)
            {
                for (const SweepPoint& p : e.sweep.points)
                {
                    rows.push_back(p.mean);
                }
            }
            auto out = OpenOut(isCmp ? cmpOut : swOut);
            if (isCmp)
            {
                if (out)
                {
                    WriteCsv(*out, rows);
                }
                std::cout << SummaryText(res);
                if (!cmpJson.empty())
                {
                    auto j = OpenOut(cmpJson);
                    (j ? *j : std::cout) << SummaryJson(res) << '\n';
                }
            }
            else
            {
                WriteCsv(out ? *out : std::cout, rows);
                const SweepResult& s = res.entries.front().sweep;
                std::cerr << "saturation " << s.saturationMbps << " Mbps";
                if (s.knee)
                {
                    std::cerr << ", knee at " << s.points[*s.knee].perStaRateBps / 1e6 << " Mbps/STA";
                }
                std::cerr << '\n';
            }
            return 0;
        }
        if (*val)
        {
            ExperimentSpec spec = LoadExperimentSpec(valPath);
            if (valPrint)
            {
                std::cout << ConfigToJson(spec.cfg) << '\n';
            }
            else
            {
                std::cout << "ok\n";
            }
            return 0;
        }
        if (*dump)
        {
            std::cout << DumpCatalog(dumpBw);
            return 0;
        }
    }
    catch (const InvalidConfigError& e)
    {
        std::cerr << "invalid config: " << e.what() << '\n';
        return 1;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
