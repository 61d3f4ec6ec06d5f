#ifndef AXSIM_NETWORK_H
#define AXSIM_NETWORK_H

#include "axsim/scenario.h"

#include <cstdint>
#include <memory>
#include <ostream>
#include <vector>

namespace axsim
{

/// Per-flow counters. "Window" counters cover the post-warm-up interval only.
struct FlowStats
{
    NodeId src{kNoNode};
    NodeId dst{kNoNode};
    NodeId sta{kNoNode};
    uint32_t bss{0};
    uint64_t offeredPackets{0};
    uint64_t offeredBytes{0};
    uint64_t deliveredPackets{0};
    uint64_t deliveredBytes{0};
    /// Whole-run totals, used for conservation checks.
    uint64_t offeredTotal{0};
    uint64_t deliveredTotal{0};
    double delaySumS{0.0};
    uint64_t mpduAttempts{0};
    uint64_t mpduFailures{0};
    uint64_t drops{0};
};

struct NodeEnergy
{
    NodeId node{kNoNode};
    bool isAp{false};
    uint32_t bss{0};
    /// Includes time spent transmitting.
    double awakeS{0.0};
    double txS{0.0};
    double dozeS{0.0};
    double energy{0.0};
};

struct NetworkCounters
{
    uint64_t events{0};
    uint64_t cancelledEvents{0};
    uint64_t ppdus{0};
    uint64_t txops{0};
    uint64_t srTxops{0};
    uint64_t muRounds{0};
    uint64_t bsrpRounds{0};
    uint64_t ctsTimeouts{0};
    uint64_t baTimeouts{0};
    /// Access grants that fired while carrier sense reported busy (must stay 0).
    uint64_t busyStarts{0};
    /// Emissions by a dozing node (must stay 0).
    uint64_t txWhileDozing{0};
    uint32_t maxCwSeen{0};
};

struct RunResult
{
    ScenarioConfig cfg;
    Scheme scheme{Scheme::AcBaseline};
    Topology topology;
    std::vector<FlowStats> flows;
    std::vector<NodeEnergy> energy;
    NetworkCounters counters;
    double windowS{0.0};
    double totalS{0.0};
};

/**
 * Event-driven model of one or more co-channel BSSs: shared medium with
 * per-MPDU SINR reception, CSMA/CA with NAV, and the scheme's access modes
 * (RTS/CTS SU exchanges, triggered UL OFDMA, DL OFDMA, OBSS_PD reuse).
 */
class Network
{
  public:
    Network(const ScenarioConfig& cfg, Scheme scheme);
    ~Network();
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    /// Runs to cfg.durationS; `trace` receives one line per processed event.
    RunResult Run(std::ostream* trace = nullptr);

  private:
    class Impl;
    std::unique_ptr<Impl> m_impl;
};

RunResult RunNetwork(const ScenarioConfig& cfg, Scheme scheme, std::ostream* trace = nullptr);

} // namespace axsim

#endif
