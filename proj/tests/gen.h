// Small seeded value generators for property tests.

#ifndef AXSIM_TESTS_GEN_H
#define AXSIM_TESTS_GEN_H

#include <cstdint>
#include <random>
#include <vector>

namespace axsim::test
{

class Gen
{
  public:
    explicit Gen(uint64_t seed)
        : m_engine(seed)
    {
    }

    uint64_t
    Int(uint64_t lo, uint64_t hi)
    {
        return lo + m_engine() % (hi - lo + 1);
    }

    double
    Real(double lo, double hi)
    {
        double u = static_cast<double>(m_engine() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

    bool
    Coin(double p = 0.5)
    {
        return Real(0.0, 1.0) < p;
    }

    template <typename T>
    const T&
    Pick(const std::vector<T>& v)
    {
        return v[Int(0, v.size() - 1)];
    }

    std::vector<double>
    Reals(size_t n, double lo, double hi)
    {
        std::vector<double> out(n);
        for (double& x : out)
        {
            x = Real(lo, hi);
        }
        return out;
    }

  private:
    std::mt19937_64 m_engine;
};

/// Number of cases each property runs.
inline constexpr int kCases = 300;

} // namespace axsim::test

#endif
