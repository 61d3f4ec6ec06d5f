#ifndef AXSIM_SIM_CORE_H
#define AXSIM_SIM_CORE_H

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace axsim
{

using NodeId = uint32_t;
constexpr NodeId kNoNode = 0xffffffffu;

/**
 * Simulated time as an unsigned count of nanoseconds.
 */
class SimTime
{
  public:
    constexpr SimTime() = default;

    static constexpr SimTime
    Ns(uint64_t ns)
    {
        return SimTime(ns);
    }

    static constexpr SimTime
    Us(uint64_t us)
    {
        return SimTime(us * 1000);
    }

    static constexpr SimTime
    Ms(uint64_t ms)
    {
        return SimTime(ms * 1000000);
    }

    /// Rounds up to the next whole nanosecond.
    static SimTime FromSeconds(double s);
    static SimTime FromMicros(double us);

    static constexpr SimTime
    Max()
    {
        return SimTime(UINT64_MAX);
    }

    constexpr uint64_t
    GetNs() const
    {
        return m_ns;
    }

    constexpr double
    GetMicros() const
    {
        return static_cast<double>(m_ns) * 1e-3;
    }

    constexpr double
    GetSeconds() const
    {
        return static_cast<double>(m_ns) * 1e-9;
    }

    constexpr auto operator<=>(const SimTime&) const = default;

    constexpr SimTime
    operator+(SimTime o) const
    {
        return SimTime(m_ns + o.m_ns);
    }

    /// Saturates at zero; callers comparing intervals should check ordering first.
    constexpr SimTime
    operator-(SimTime o) const
    {
        return SimTime(m_ns > o.m_ns ? m_ns - o.m_ns : 0);
    }

    constexpr SimTime&
    operator+=(SimTime o)
    {
        m_ns += o.m_ns;
        return *this;
    }

    constexpr SimTime
    operator*(uint64_t k) const
    {
        return SimTime(m_ns * k);
    }

  private:
    constexpr explicit SimTime(uint64_t ns)
        : m_ns(ns)
    {
    }

    uint64_t m_ns{0};
};

std::ostream& operator<<(std::ostream& os, SimTime t);

enum class EventKind : uint8_t
{
    TxStart,
    TxEnd,
    BackoffSlot,
    TimerExpiry,
    TrafficArrival,
    Beacon,
    TwtSpStart,
};

std::string_view EventKindName(EventKind kind);

struct SimEvent
{
    SimTime fireTime;
    uint64_t seq{0};
    EventKind kind{EventKind::TimerExpiry};
    NodeId target{kNoNode};
    std::string detail;
    std::function<void()> action;
};

/// Thrown when an event is scheduled before the current time.
class PastEventError : public std::logic_error
{
  public:
    using std::logic_error::logic_error;
};

using EventId = uint64_t;

/**
 * Ordered event queue plus virtual clock.
 *
 * Events fire in (fireTime, seq) order, seq being the insertion counter.
 * Cancelled events stay in the heap and are discarded when they surface.
 */
class Simulator
{
  public:
    Simulator() = default;
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    SimTime
    Now() const
    {
        return m_now;
    }

    EventId Schedule(SimEvent event);
    EventId ScheduleAt(SimTime t, EventKind kind, NodeId target, std::function<void()> action,
                       std::string detail = {});
    EventId ScheduleIn(SimTime delay, EventKind kind, NodeId target, std::function<void()> action,
                       std::string detail = {});

    void Cancel(EventId id);
    bool IsPending(EventId id) const;

    /// Processes every event with fireTime <= end, then sets Now() to end.
    uint64_t RunUntil(SimTime end);

    /// Stops RunUntil after the current event; the clock stays at that event.
    void Stop();

    uint64_t
    ScheduledCount() const
    {
        return m_scheduled;
    }

    uint64_t
    ProcessedCount() const
    {
        return m_processed;
    }

    uint64_t
    CancelledCount() const
    {
        return m_cancelled;
    }

    uint64_t
    PendingCount() const
    {
        return m_scheduled - m_processed - m_cancelled;
    }

    /// Writes one `time_ns\tkind\tnode\tdetail` line per processed event.
    void
    SetTraceSink(std::ostream* os)
    {
        m_trace = os;
    }

  private:
    struct Entry
    {
        uint64_t time;
        uint64_t seq;
        EventKind kind;
        NodeId target;
        std::string detail;
        std::function<void()> action;
    };

    struct Later
    {
        bool
        operator()(const Entry& a, const Entry& b) const
        {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };

    enum State : uint8_t
    {
        kPending,
        kDone,
        kCancelled
    };

    SimTime m_now;
    std::vector<Entry> m_heap;
    std::vector<uint8_t> m_state;
    uint64_t m_scheduled{0};
    uint64_t m_processed{0};
    uint64_t m_cancelled{0};
    bool m_stop{false};
    std::ostream* m_trace{nullptr};
};

/**
 * Source of uniform randomness. Protocol functions take this interface so
 * tests can substitute scripted draws.
 */
class RandomSource
{
  public:
    virtual ~RandomSource() = default;
    /// Uniform integer in [lo, hi], inclusive.
    virtual uint64_t UniformInt(uint64_t lo, uint64_t hi) = 0;
    /// Uniform real in [0, 1).
    virtual double UniformReal() = 0;
};

/**
 * Seeded stream tied to one purpose label. The engine is mt19937_64 and the
 * distributions are written out here, so outputs do not depend on the
 * standard library's distribution implementations.
 */
class RngStream : public RandomSource
{
  public:
    RngStream(uint64_t seed, std::string_view streamId);

    uint64_t UniformInt(uint64_t lo, uint64_t hi) override;
    double UniformReal() override;
    double Normal(double mean, double sigma);
    bool Bernoulli(double p);

    uint64_t
    Seed() const
    {
        return m_seed;
    }

    const std::string&
    StreamId() const
    {
        return m_streamId;
    }

  private:
    uint64_t m_seed;
    std::string m_streamId;
    std::mt19937_64 m_engine;
    bool m_haveSpare{false};
    double m_spare{0.0};
};

/// Replays a fixed list of integer draws; UniformInt asserts each lies in range.
class ScriptedRandom : public RandomSource
{
  public:
    explicit ScriptedRandom(std::vector<uint64_t> ints, std::vector<double> reals = {});

    uint64_t UniformInt(uint64_t lo, uint64_t hi) override;
    double UniformReal() override;

    size_t
    Remaining() const
    {
        return m_ints.size() - m_nextInt;
    }

  private:
    std::vector<uint64_t> m_ints;
    std::vector<double> m_reals;
    size_t m_nextInt{0};
    size_t m_nextReal{0};
};

uint64_t SplitMix64(uint64_t x);
uint64_t HashLabel(std::string_view label);

} // namespace axsim

#endif
