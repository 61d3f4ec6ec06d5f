#include "axsim/metrics.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace axsim
{

MetricsReport
BuildReport(const RunResult& run)
{
    MetricsReport r;
    r.windowS = run.windowS;
    double w = run.windowS > 0.0 ? run.windowS : 1.0;

    std::map<NodeId, StaMetrics> sta;
    std::map<NodeId, uint64_t> packets;
    std::map<NodeId, double> delay;
    std::map<NodeId, std::pair<uint64_t, uint64_t>> tries;
    std::map<NodeId, uint64_t> offered;
    for (const NodeSpec& n : run.topology.nodes)
    {
        if (!n.isAp)
        {
            StaMetrics m;
            m.sta = n.id;
            m.bss = n.bss;
            sta[n.id] = m;
        }
    }
    uint64_t delivered = 0;
    uint64_t offeredBytes = 0;
    uint64_t deliveredPackets = 0;
    double delaySum = 0.0;
    uint64_t attempts = 0;
    uint64_t failures = 0;
    for (const FlowStats& f : run.flows)
    {
        StaMetrics& m = sta[f.sta];
        m.sta = f.sta;
        m.bss = f.bss;
        m.deliveredBytes += f.deliveredBytes;
        packets[f.sta] += f.deliveredPackets;
        delay[f.sta] += f.delaySumS;
        tries[f.sta].first += f.mpduAttempts;
        tries[f.sta].second += f.mpduFailures;
        offered[f.sta] += f.offeredBytes;
        delivered += f.deliveredBytes;
        offeredBytes += f.offeredBytes;
        deliveredPackets += f.deliveredPackets;
        delaySum += f.delaySumS;
        attempts += f.mpduAttempts;
        failures += f.mpduFailures;
    }
    std::map<uint32_t, uint64_t> bssBytes;
    for (const BssSpec& b : run.topology.bsss)
    {
        bssBytes[static_cast<uint32_t>(&b - run.topology.bsss.data())] = 0;
    }
    for (auto& [id, m] : sta)
    {
        m.thptBps = 8.0 * static_cast<double>(m.deliveredBytes) / w;
        m.offeredBps = 8.0 * static_cast<double>(offered[id]) / w;
        m.meanDelayS = packets[id] > 0 ? delay[id] / static_cast<double>(packets[id]) : 0.0;
        m.per = tries[id].first > 0 ? static_cast<double>(tries[id].second) / static_cast<double>(tries[id].first) : 0.0;
        bssBytes[m.bss] += m.deliveredBytes;
        r.perSta.push_back(m);
    }
    for (const auto& [bss, bytes] : bssBytes)
    {
        BssMetrics b;
        b.bss = bss;
        b.deliveredBytes = bytes;
        b.thptBps = 8.0 * static_cast<double>(bytes) / w;
        r.perBss.push_back(b);
    }
    r.aggregateBps = 8.0 * static_cast<double>(delivered) / w;
    r.offeredBps = 8.0 * static_cast<double>(offeredBytes) / w;
    r.p5Bps = r.perSta.empty() ? 0.0 : Percentile(PerStaThroughputs(r), 0.05);
    r.meanDelayS = deliveredPackets > 0 ? delaySum / static_cast<double>(deliveredPackets) : 0.0;
    r.per = attempts > 0 ? static_cast<double>(failures) / static_cast<double>(attempts) : 0.0;
    r.energy = run.energy;
    for (const NodeEnergy& e : run.energy)
    {
        r.totalEnergy += e.energy;
    }
    return r;
}

double
Percentile(std::vector<double> values, double fraction)
{
    if (values.empty())
    {
        throw std::invalid_argument("percentile of an empty sample");
    }
    if (!(fraction > 0.0 && fraction <= 1.0))
    {
        throw std::invalid_argument("percentile fraction must lie in (0, 1]");
    }
    std::sort(values.begin(), values.end());
    double rank = std::ceil(fraction * static_cast<double>(values.size()) - 1e-9);
    size_t idx = static_cast<size_t>(std::max(rank, 1.0)) - 1;
    return values[std::min(idx, values.size() - 1)];
}

std::vector<CdfPoint>
CdfCurve(std::vector<double> values)
{
    std::vector<CdfPoint> out;
    if (values.empty())
    {
        return out;
    }
    std::sort(values.begin(), values.end());
    double n = static_cast<double>(values.size());
    for (size_t i = 0; i < values.size(); ++i)
    {
        if (i + 1 < values.size() && values[i + 1] == values[i])
        {
            continue;
        }
        out.push_back(CdfPoint{values[i], static_cast<double>(i + 1) / n});
    }
    return out;
}

std::vector<double>
PerStaThroughputs(const MetricsReport& r)
{
    std::vector<double> v;
    v.reserve(r.perSta.size());
    for (const StaMetrics& s : r.perSta)
    {
        v.push_back(s.thptBps);
    }
    return v;
}

} // namespace axsim
