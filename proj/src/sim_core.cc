#include "axsim/sim_core.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace axsim
{

SimTime
SimTime::FromSeconds(double s)
{
    if (!(s >= 0.0))
    {
        throw std::invalid_argument("negative time");
    }
    return SimTime(static_cast<uint64_t>(std::ceil(s * 1e9 - 1e-6)));
}

SimTime
SimTime::FromMicros(double us)
{
    if (!(us >= 0.0))
    {
        throw std::invalid_argument("negative time");
    }
    return SimTime(static_cast<uint64_t>(std::ceil(us * 1e3 - 1e-6)));
}

std::ostream&
operator<<(std::ostream& os, SimTime t)
{
    return os << t.GetNs() << "ns";
}

std::string_view
EventKindName(EventKind kind)
{
    switch (kind)
    {
    case EventKind::TxStart:
        return "tx-start";
    case EventKind::TxEnd:
        return "tx-end";
    case EventKind::BackoffSlot:
        return "backoff-slot";
    case EventKind::TimerExpiry:
        return "timer-expiry";
    case EventKind::TrafficArrival:
        return "traffic-arrival";
    case EventKind::Beacon:
        return "beacon";
    case EventKind::TwtSpStart:
        return "twt-sp-start";
    }
    return "unknown";
}

EventId
Simulator::Schedule(SimEvent event)
{
    if (event.fireTime < m_now)
    {
        std::ostringstream msg;
        msg << "past event: fire time " << event.fireTime.GetNs() << " ns precedes now "
            << m_now.GetNs() << " ns (" << EventKindName(event.kind) << ")";
        throw PastEventError(msg.str());
    }
    uint64_t seq = m_scheduled++;
    m_state.push_back(kPending);
    m_heap.push_back(Entry{event.fireTime.GetNs(), seq, event.kind, event.target,
                           std::move(event.detail), std::move(event.action)});
    std::push_heap(m_heap.begin(), m_heap.end(), Later{});
    return seq;
}

EventId
Simulator::ScheduleAt(SimTime t, EventKind kind, NodeId target, std::function<void()> action,
                      std::string detail)
{
    SimEvent ev;
    ev.fireTime = t;
    ev.kind = kind;
    ev.target = target;
    ev.detail = std::move(detail);
    ev.action = std::move(action);
    return Schedule(std::move(ev));
}

EventId
Simulator::ScheduleIn(SimTime delay, EventKind kind, NodeId target, std::function<void()> action,
                      std::string detail)
{
    return ScheduleAt(m_now + delay, kind, target, std::move(action), std::move(detail));
}

void
Simulator::Cancel(EventId id)
{
    if (id < m_state.size() && m_state[id] == kPending)
    {
        m_state[id] = kCancelled;
        ++m_cancelled;
    }
}

bool
Simulator::IsPending(EventId id) const
{
    return id < m_state.size() && m_state[id] == kPending;
}

void
Simulator::Stop()
{
    m_stop = true;
}

uint64_t
Simulator::RunUntil(SimTime end)
{
    if (end < m_now)
    {
        throw PastEventError("run_until target precedes now");
    }
    uint64_t count = 0;
    m_stop = false;
    while (!m_heap.empty() && m_heap.front().time <= end.GetNs())
    {
        std::pop_heap(m_heap.begin(), m_heap.end(), Later{});
        Entry e = std::move(m_heap.back());
        m_heap.pop_back();
        if (m_state[e.seq] == kCancelled)
        {
            continue;
        }
        m_state[e.seq] = kDone;
        m_now = SimTime::Ns(e.time);
        ++m_processed;
        ++count;
        if (m_trace)
        {
            *m_trace << e.time << '\t' << EventKindName(e.kind) << '\t';
            if (e.target == kNoNode)
            {
                *m_trace << '-';
            }
            else
            {
                *m_trace << e.target;
            }
            *m_trace << '\t' << e.detail << '\n';
        }
        if (e.action)
        {
            e.action();
        }
        if (m_stop)
        {
            return count;
        }
    }
    m_now = end;
    return count;
}

uint64_t
SplitMix64(uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

uint64_t
HashLabel(std::string_view label)
{
    // FNV-1a
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : label)
    {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

RngStream::RngStream(uint64_t seed, std::string_view streamId)
    : m_seed(seed),
      m_streamId(streamId),
      m_engine(SplitMix64(SplitMix64(seed) ^ HashLabel(streamId)))
{
}

uint64_t
RngStream::UniformInt(uint64_t lo, uint64_t hi)
{
    if (hi < lo)
    {
        throw std::invalid_argument("UniformInt: empty range");
    }
    uint64_t span = hi - lo;
    if (span == UINT64_MAX)
    {
        return m_engine();
    }
    uint64_t range = span + 1;
    // Rejection keeps the draw exactly uniform.
    uint64_t limit = UINT64_MAX - (UINT64_MAX % range + 1) % range;
    uint64_t x;
    do
    {
        x = m_engine();
    } while (x > limit);
    return lo + x % range;
}

double
RngStream::UniformReal()
{
    return static_cast<double>(m_engine() >> 11) * 0x1.0p-53;
}

double
RngStream::Normal(double mean, double sigma)
{
    if (m_haveSpare)
    {
        m_haveSpare = false;
        return mean + sigma * m_spare;
    }
    double u1;
    do
    {
        u1 = UniformReal();
    } while (u1 <= 0.0);
    double u2 = UniformReal();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * M_PI * u2;
    m_spare = r * std::sin(theta);
    m_haveSpare = true;
    return mean + sigma * r * std::cos(theta);
}

bool
RngStream::Bernoulli(double p)
{
    if (p <= 0.0)
    {
        return false;
    }
    if (p >= 1.0)
    {
        return true;
    }
    return UniformReal() < p;
}

ScriptedRandom::ScriptedRandom(std::vector<uint64_t> ints, std::vector<double> reals)
    : m_ints(std::move(ints)),
      m_reals(std::move(reals))
{
}

uint64_t
ScriptedRandom::UniformInt(uint64_t lo, uint64_t hi)
{
    if (m_nextInt >= m_ints.size())
    {
        throw std::out_of_range("scripted random: integer script exhausted");
    }
    uint64_t v = m_ints[m_nextInt++];
    if (v < lo || v > hi)
    {
        throw std::out_of_range("scripted random: value outside requested range");
    }
    return v;
}

double
ScriptedRandom::UniformReal()
{
    if (m_nextReal >= m_reals.size())
    {
        return 0.5;
    }
    return m_reals[m_nextReal++];
}

} // namespace axsim
