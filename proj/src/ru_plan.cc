#include "axsim/ru_plan.h"

#include <array>
#include <bit>
#include <sstream>

namespace axsim
{

namespace
{

bool
ValidBandwidth(uint32_t bw)
{
    return bw == 20 || bw == 40 || bw == 80 || bw == 160;
}

// Each 20 MHz holds nine 26-tone slots; smaller RUs map onto slot ranges.
struct SlotSpan
{
    uint32_t first;
    uint32_t count;
};

SlotSpan
LocalSpan(RuTone t, uint32_t local)
{
    static constexpr std::array<uint32_t, 4> k52{0, 2, 5, 7};
    static constexpr std::array<uint32_t, 2> k106{0, 5};
    switch (t)
    {
    case RuTone::T26:
        return {local, 1};
    case RuTone::T52:
        return {k52[local], 2};
    case RuTone::T106:
        return {k106[local], 4};
    default:
        return {0, 9};
    }
}

uint32_t
PerTwenty(RuTone t)
{
    switch (t)
    {
    case RuTone::T26:
        return 9;
    case RuTone::T52:
        return 4;
    case RuTone::T106:
        return 2;
    default:
        return 1;
    }
}

uint32_t
TwentiesSpanned(RuTone t)
{
    switch (t)
    {
    case RuTone::T484:
        return 2;
    case RuTone::T996:
        return 4;
    case RuTone::T2x996:
        return 8;
    default:
        return 1;
    }
}

// Global slot bitmap for an RU (up to 8 x 9 = 72 slots).
std::array<uint64_t, 2>
SlotBits(const Ru& ru)
{
    std::array<uint64_t, 2> bits{0, 0};
    auto set = [&](uint32_t s) { bits[s / 64] |= (uint64_t{1} << (s % 64)); };
    if (Tones(ru.tone) <= 242)
    {
        uint32_t per = PerTwenty(ru.tone);
        uint32_t sub = ru.position / per;
        SlotSpan span = LocalSpan(ru.tone, ru.position % per);
        for (uint32_t i = 0; i < span.count; ++i)
        {
            set(sub * 9 + span.first + i);
        }
    }
    else
    {
        uint32_t k = TwentiesSpanned(ru.tone);
        for (uint32_t s = ru.position * k * 9; s < (ru.position + 1) * k * 9; ++s)
        {
            set(s);
        }
    }
    return bits;
}

} // namespace

RuTone
RuToneFromCount(uint32_t tones)
{
    for (RuTone t : kAllRuTones)
    {
        if (Tones(t) == tones)
        {
            return t;
        }
    }
    throw std::invalid_argument("not an RU size: " + std::to_string(tones));
}

uint32_t
DataSubcarriers(RuTone t)
{
    switch (t)
    {
    case RuTone::T26:
        return 24;
    case RuTone::T52:
        return 48;
    case RuTone::T106:
        return 102;
    case RuTone::T242:
        return 234;
    case RuTone::T484:
        return 468;
    case RuTone::T996:
        return 980;
    case RuTone::T2x996:
        return 1960;
    }
    return 0;
}

uint32_t
MinBandwidthMhz(RuTone t)
{
    switch (t)
    {
    case RuTone::T484:
        return 40;
    case RuTone::T996:
        return 80;
    case RuTone::T2x996:
        return 160;
    default:
        return 20;
    }
}

uint32_t
PositionCount(RuTone t, uint32_t bandwidthMhz)
{
    if (!ValidBandwidth(bandwidthMhz) || bandwidthMhz < MinBandwidthMhz(t))
    {
        return 0;
    }
    uint32_t twenties = bandwidthMhz / 20;
    return twenties * PerTwenty(t) / TwentiesSpanned(t);
}

double
RuBandwidthHz(RuTone t)
{
    return Tones(t) * 78125.0;
}

RuTone
FullBandRu(uint32_t bandwidthMhz)
{
    switch (bandwidthMhz)
    {
    case 20:
        return RuTone::T242;
    case 40:
        return RuTone::T484;
    case 80:
        return RuTone::T996;
    case 160:
        return RuTone::T2x996;
    }
    throw std::invalid_argument("bandwidth must be 20/40/80/160");
}

std::vector<uint32_t>
RuLayout::ToneList() const
{
    std::vector<uint32_t> out;
    out.reserve(rus.size());
    for (const Ru& r : rus)
    {
        out.push_back(Tones(r.tone));
    }
    return out;
}

SubchannelMask
RuSubchannels(const Ru& ru, uint32_t bandwidthMhz)
{
    (void)bandwidthMhz;
    SubchannelMask m = 0;
    if (Tones(ru.tone) <= 242)
    {
        m |= 1u << (ru.position / PerTwenty(ru.tone));
    }
    else
    {
        uint32_t k = TwentiesSpanned(ru.tone);
        for (uint32_t s = ru.position * k; s < (ru.position + 1) * k; ++s)
        {
            m |= 1u << s;
        }
    }
    return m;
}

std::vector<LayoutViolation>
ValidateLayout(const RuLayout& layout)
{
    std::vector<LayoutViolation> out;
    using Code = LayoutViolation::Code;
    if (!ValidBandwidth(layout.bandwidthMhz))
    {
        out.push_back({Code::InvalidBandwidth, 0,
                       "bandwidth " + std::to_string(layout.bandwidthMhz) + " MHz not supported"});
        return out;
    }
    std::array<uint64_t, 2> used{0, 0};
    std::vector<uint32_t> budget(layout.bandwidthMhz / 20, 0);
    for (size_t i = 0; i < layout.rus.size(); ++i)
    {
        const Ru& ru = layout.rus[i];
        uint32_t tones = Tones(ru.tone);
        if (layout.bandwidthMhz < MinBandwidthMhz(ru.tone))
        {
            out.push_back({Code::BandwidthTooNarrow, i,
                           std::to_string(tones) + " requires ≥" +
                               std::to_string(MinBandwidthMhz(ru.tone)) + " MHz"});
            continue;
        }
        if (ru.position >= PositionCount(ru.tone, layout.bandwidthMhz))
        {
            out.push_back({Code::PositionOutOfRange, i,
                           std::to_string(tones) + "-tone position " +
                               std::to_string(ru.position) + " out of range"});
            continue;
        }
        auto bits = SlotBits(ru);
        if ((bits[0] & used[0]) || (bits[1] & used[1]))
        {
            out.push_back({Code::Overlap, i, "RU " + std::to_string(i) + " overlaps another RU"});
        }
        used[0] |= bits[0];
        used[1] |= bits[1];
        SubchannelMask subs = RuSubchannels(ru, layout.bandwidthMhz);
        if (subs & layout.punctured)
        {
            out.push_back({Code::Punctured, i,
                           "RU " + std::to_string(i) + " lies in a punctured subchannel"});
        }
        for (uint32_t s = 0; s < budget.size(); ++s)
        {
            if (subs & (1u << s))
            {
                budget[s] += tones <= 242 ? tones : 242;
            }
        }
    }
    for (uint32_t s = 0; s < budget.size(); ++s)
    {
        if (budget[s] > 242)
        {
            out.push_back({Code::ToneBudget, 0,
                           "20 MHz subchannel " + std::to_string(s) + " exceeds 242 tones"});
        }
    }
    return out;
}

RuLayout
LayoutFromTones(uint32_t bandwidthMhz, const std::vector<uint32_t>& tones)
{
    RuLayout layout;
    layout.bandwidthMhz = bandwidthMhz;
    // cursor in 26-tone slots across the whole band
    uint32_t cursor = 0;
    for (uint32_t t : tones)
    {
        RuTone tone = RuToneFromCount(t);
        Ru ru{tone, 0};
        if (t <= 242)
        {
            uint32_t sub = cursor / 9;
            uint32_t local = cursor % 9;
            uint32_t per = PerTwenty(tone);
            uint32_t pos = per;
            for (uint32_t j = 0; j < per; ++j)
            {
                if (LocalSpan(tone, j).first >= local)
                {
                    pos = j;
                    break;
                }
            }
            if (pos == per)
            {
                // does not fit in the rest of this 20 MHz; move to the next one
                ++sub;
                pos = 0;
            }
            ru.position = sub * per + pos;
            SlotSpan span = LocalSpan(tone, pos);
            cursor = sub * 9 + span.first + span.count;
        }
        else
        {
            uint32_t k = TwentiesSpanned(tone);
            uint32_t sub = (cursor + 8) / 9;
            uint32_t pos = (sub + k - 1) / k;
            ru.position = pos;
            cursor = (pos + 1) * k * 9;
        }
        layout.rus.push_back(ru);
    }
    return layout;
}

std::vector<RuLayout>
LayoutCatalog(uint32_t bandwidthMhz)
{
    if (!ValidBandwidth(bandwidthMhz))
    {
        throw std::invalid_argument("bandwidth must be 20/40/80/160");
    }
    static const std::vector<std::vector<uint32_t>> kTwenty{
        {242},
        {106, 26, 106},
        {52, 52, 26, 106},
        {106, 26, 52, 52},
        {52, 52, 26, 52, 52},
        {26, 26, 26, 26, 26, 26, 26, 26, 26},
    };
    // Recursive halving: a band is either one full-width RU or two copies of
    // a layout of the half band.
    std::vector<std::vector<uint32_t>> lists = kTwenty;
    for (uint32_t bw = 40; bw <= bandwidthMhz; bw *= 2)
    {
        std::vector<std::vector<uint32_t>> next;
        next.push_back({Tones(FullBandRu(bw))});
        for (const auto& half : lists)
        {
            std::vector<uint32_t> both = half;
            both.insert(both.end(), half.begin(), half.end());
            next.push_back(both);
        }
        lists = std::move(next);
    }
    std::vector<RuLayout> out;
    for (const auto& l : lists)
    {
        out.push_back(LayoutFromTones(bandwidthMhz, l));
    }
    return out;
}

std::string
DumpCatalog(uint32_t bandwidthMhz)
{
    std::ostringstream os;
    for (const RuLayout& l : LayoutCatalog(bandwidthMhz))
    {
        os << bandwidthMhz << ": ";
        bool first = true;
        for (uint32_t t : l.ToneList())
        {
            os << (first ? "" : ",") << t;
            first = false;
        }
        os << '\n';
    }
    return os.str();
}

uint32_t
MaskCount(SubchannelMask m)
{
    return std::popcount(m);
}

PunctureResult
ResolvePuncture(int mode, SubchannelMask busy)
{
    constexpr SubchannelMask kP20 = 0x01;
    constexpr SubchannelMask kS20 = 0x02;
    constexpr SubchannelMask kS40 = 0x0c;
    constexpr SubchannelMask kP80 = 0x0f;
    constexpr SubchannelMask kS80 = 0xf0;
    if (busy & kP20)
    {
        throw NoFitError("primary 20 MHz is busy");
    }
    PunctureResult r;
    switch (mode)
    {
    case 0:
    case 1:
    case 2:
    case 3: {
        SubchannelMask band = (1u << (1u << mode)) - 1;
        if (busy & band)
        {
            throw NoFitError("contiguous mode needs every subchannel idle");
        }
        r.usable = band;
        return r;
    }
    case 4:
        if (busy & (kP80 & ~kS20))
        {
            throw NoFitError("mode 4 needs primary 20 and secondary 40 idle");
        }
        r.usable = kP80 & ~kS20;
        return r;
    case 5: {
        if (busy & (kP20 | kS20))
        {
            throw NoFitError("mode 5 needs primary 40 idle");
        }
        SubchannelMask s40busy = busy & kS40;
        if (s40busy == kS40)
        {
            throw NoFitError("mode 5 punctures only one 20 MHz of the secondary 40");
        }
        // with the secondary 40 idle the upper half is dropped
        SubchannelMask drop = s40busy ? s40busy : SubchannelMask{0x08};
        r.usable = kP80 & ~drop;
        return r;
    }
    case 6: {
        if (busy & (kP80 & ~kS20))
        {
            throw NoFitError("mode 6 needs primary 20 and secondary 40 idle");
        }
        r.usable = (kP80 & ~kS20) | (kS80 & ~busy);
        return r;
    }
    case 7: {
        if (busy & (kP20 | kS20))
        {
            throw NoFitError("mode 7 needs primary 40 idle");
        }
        SubchannelMask s40busy = busy & kS40;
        SubchannelMask s80 = kS80 & ~busy;
        if (s80 == 0)
        {
            throw NoFitError("mode 7 needs part of the secondary 80 idle");
        }
        r.usable = kP20 | kS20 | (kS40 & ~s40busy) | s80;
        if (s40busy == 0)
        {
            r.mode7Case = Mode7Case::Secondary40Intact;
        }
        else if (s40busy == kS40)
        {
            r.mode7Case = Mode7Case::Secondary40Dropped;
        }
        else
        {
            r.mode7Case = Mode7Case::Secondary40Half;
        }
        return r;
    }
    default:
        throw NoFitError("puncture mode must be 0..7");
    }
}

bool
MuMimoAdmissible(RuTone ru, uint32_t nUsers)
{
    return Tones(ru) >= 106 && nUsers >= 1 && nUsers <= 8;
}

} // namespace axsim
