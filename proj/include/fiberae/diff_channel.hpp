#pragma once

#include <cstdint>

#include "fiberae/autodiff.hpp"
#include "fiberae/channel.hpp"

// Tape versions of the converters and the split-step channel. Forward values
// match the plain implementations up to floating-point rounding; noise is drawn
// from the same per-step substreams and enters as a constant.
namespace fiberae::ad {

Var dac(Var x, const ChannelConfig& cfg);
Var adc(Var y, const ChannelConfig& cfg);
Var ssfm_propagate(Var x, const ChannelConfig& cfg, std::uint64_t seed);

}  // namespace fiberae::ad
