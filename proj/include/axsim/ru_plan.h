#ifndef AXSIM_RU_PLAN_H
#define AXSIM_RU_PLAN_H

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace axsim
{

enum class RuTone : uint16_t
{
    T26 = 26,
    T52 = 52,
    T106 = 106,
    T242 = 242,
    T484 = 484,
    T996 = 996,
    T2x996 = 1992,
};

inline constexpr RuTone kAllRuTones[] = {RuTone::T26,  RuTone::T52,  RuTone::T106,  RuTone::T242,
                                         RuTone::T484, RuTone::T996, RuTone::T2x996};

constexpr uint32_t
Tones(RuTone t)
{
    return static_cast<uint32_t>(t);
}

RuTone RuToneFromCount(uint32_t tones);

uint32_t DataSubcarriers(RuTone t);
uint32_t MinBandwidthMhz(RuTone t);
/// Number of non-overlapping positions of this size in the bandwidth.
uint32_t PositionCount(RuTone t, uint32_t bandwidthMhz);
/// Occupied bandwidth used for noise; tones times the HE subcarrier spacing.
double RuBandwidthHz(RuTone t);
/// Tone size that spans a whole channel of this width.
RuTone FullBandRu(uint32_t bandwidthMhz);

struct Ru
{
    RuTone tone{RuTone::T242};
    uint32_t position{0};

    bool operator==(const Ru&) const = default;
};

/// Bitmask over 20 MHz subchannels: bit 0 primary 20, bit 1 secondary 20,
/// bits 2-3 secondary 40, bits 4-7 secondary 80.
using SubchannelMask = uint32_t;

struct RuLayout
{
    uint32_t bandwidthMhz{20};
    std::vector<Ru> rus;
    SubchannelMask punctured{0};

    std::vector<uint32_t> ToneList() const;
};

struct LayoutViolation
{
    enum class Code
    {
        InvalidBandwidth,
        BandwidthTooNarrow,
        PositionOutOfRange,
        Overlap,
        Punctured,
        ToneBudget,
    };

    Code code;
    size_t ruIndex;
    std::string message;
};

/// Empty result means the layout is valid.
std::vector<LayoutViolation> ValidateLayout(const RuLayout& layout);

/// 20 MHz subchannels an RU touches, as a mask.
SubchannelMask RuSubchannels(const Ru& ru, uint32_t bandwidthMhz);

/// Representative layouts built by recursive halving; every entry validates.
std::vector<RuLayout> LayoutCatalog(uint32_t bandwidthMhz);

/// Builds a layout from a tone list, placing RUs left to right.
RuLayout LayoutFromTones(uint32_t bandwidthMhz, const std::vector<uint32_t>& tones);

/// One `BW: tone,tone,...` line per layout.
std::string DumpCatalog(uint32_t bandwidthMhz);

class NoFitError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

enum class Mode7Case
{
    None,
    /// Secondary 40 intact; busy 20s of the secondary 80 dropped.
    Secondary40Intact,
    /// One 20 MHz half of the secondary 40 dropped.
    Secondary40Half,
    /// Whole secondary 40 dropped.
    Secondary40Dropped,
};

struct PunctureResult
{
    SubchannelMask usable{0};
    Mode7Case mode7Case{Mode7Case::None};
};

/// Throws NoFitError when the busy set cannot be served by the mode.
PunctureResult ResolvePuncture(int mode, SubchannelMask busy);

uint32_t MaskCount(SubchannelMask m);

bool MuMimoAdmissible(RuTone ru, uint32_t nUsers);

} // namespace axsim

#endif
