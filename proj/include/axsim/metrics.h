#ifndef AXSIM_METRICS_H
#define AXSIM_METRICS_H

#include "axsim/network.h"

#include <cstdint>
#include <utility>
#include <vector>

namespace axsim
{

struct StaMetrics
{
    NodeId sta{kNoNode};
    uint32_t bss{0};
    uint64_t deliveredBytes{0};
    double thptBps{0.0};
    double offeredBps{0.0};
    double meanDelayS{0.0};
    double per{0.0};
};

struct BssMetrics
{
    uint32_t bss{0};
    uint64_t deliveredBytes{0};
    double thptBps{0.0};
};

/// Post-warm-up summary of one run.
struct MetricsReport
{
    double windowS{0.0};
    std::vector<StaMetrics> perSta;
    std::vector<BssMetrics> perBss;
    double aggregateBps{0.0};
    double offeredBps{0.0};
    /// 5th percentile of the per-STA throughput vector.
    double p5Bps{0.0};
    double meanDelayS{0.0};
    double per{0.0};
    std::vector<NodeEnergy> energy;
    double totalEnergy{0.0};
};

MetricsReport BuildReport(const RunResult& run);

/// Nearest-rank percentile: the smallest sample with at least `fraction` of samples at or below it.
double Percentile(std::vector<double> values, double fraction);

struct CdfPoint
{
    double value{0.0};
    double fraction{0.0};
};

/// Empirical CDF; one point per distinct value.
std::vector<CdfPoint> CdfCurve(std::vector<double> values);

std::vector<double> PerStaThroughputs(const MetricsReport& r);

} // namespace axsim

#endif
