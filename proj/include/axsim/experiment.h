#ifndef AXSIM_EXPERIMENT_H
#define AXSIM_EXPERIMENT_H

#include "axsim/metrics.h"
#include "axsim/scenario.h"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace axsim
{

/// One row of the results table.
struct ResultRow
{
    std::string scenario;
    std::string scheme;
    uint32_t bwMhz{0};
    std::string direction;
    double offeredMbps{0.0};
    double thptMbps{0.0};
    double p5Mbps{0.0};
    double delayMs{0.0};
    double per{0.0};
    double energyUnits{0.0};
};

ResultRow MakeRow(const ScenarioConfig& cfg, Scheme scheme, const MetricsReport& r);

/// Validates, simulates and summarises one configuration.
MetricsReport RunScenario(const ScenarioConfig& cfg, Scheme scheme, std::ostream* trace = nullptr);

struct SweepPoint
{
    double perStaRateBps{0.0};
    /// Seed-averaged row.
    ResultRow mean;
    std::vector<ResultRow> perSeed;
};

struct SweepResult
{
    Scheme scheme{Scheme::AcBaseline};
    std::vector<SweepPoint> points;
    /// First point where delivered falls below 98% of offered.
    std::optional<size_t> knee;
    /// Largest seed-averaged throughput over the sweep.
    double saturationMbps{0.0};
};

struct SweepOptions
{
    std::vector<double> perStaRatesBps;
    std::vector<uint64_t> seeds{1};
    /// 0 uses the hardware concurrency.
    unsigned threads{0};
};

/// Per-STA rates for a scenario and bandwidth (1–13, 4–52, 8–104 Mbps ladders; 0.05–3 Mbps multi-BSS).
std::vector<double> DefaultSweepRates(ScenarioType kind, uint32_t bandwidthMhz, size_t points = 7);

/// Index of the first point whose delivered throughput is below 98% of its offered load.
std::optional<size_t> FindKnee(const std::vector<double>& offered, const std::vector<double>& delivered);

SweepResult Sweep(const ScenarioConfig& base, Scheme scheme, const SweepOptions& opt);

struct CompareEntry
{
    Scheme scheme{Scheme::AcBaseline};
    SweepResult sweep;
    /// Saturation throughput relative to the first scheme.
    double ratio{1.0};
};

struct CompareResult
{
    ScenarioConfig cfg;
    std::vector<CompareEntry> entries;
};

/// Runs every (scheme, rate, seed) cell; results are merged in key order regardless of thread timing.
CompareResult Compare(const ScenarioConfig& base, const std::vector<Scheme>& schemes, const SweepOptions& opt);

void WriteCsvHeader(std::ostream& os);
void WriteCsvRow(std::ostream& os, const ResultRow& row);
void WriteCsv(std::ostream& os, const std::vector<ResultRow>& rows);

/// Ratio table as JSON text, baseline = 100%.
std::string SummaryJson(const CompareResult& c);
/// Same table as aligned text.
std::string SummaryText(const CompareResult& c);

/// Energy ledger rows: node,awake_s,doze_s,energy_units.
void WriteEnergyCsv(std::ostream& os, const MetricsReport& r);

} // namespace axsim

#endif
