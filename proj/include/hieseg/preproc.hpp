#pragma once

#include "hieseg/volume.hpp"

namespace hieseg {

// Fixed training grid: maximum of the average case dimensions rounded to a
// multiple of 16 so a three-level encoder downsamples cleanly.
inline constexpr Dims3 kDefaultTargetDims{192, 192, 32};

// Resample to target_dims with trilinear interpolation, half-pixel (area)
// convention: source coordinate s_i = (t_i + 0.5) * old_i/new_i - 0.5,
// clamped to [0, old_i - 1]. Spacing is rescaled so the physical extent is
// preserved; the origin is kept.
ScalarVolume resample_trilinear(const ScalarVolume& v, Dims3 target_dims);

// Same sampling grid, but each output voxel copies the nearest source voxel
// (ties round half away from zero). Keeps the label value set intact.
BinaryMask resample_nearest(const BinaryMask& m, Dims3 target_dims);

// (x - mean) / max(std, 1e-8) over all voxels of the channel, population std.
ScalarVolume znormalize(const ScalarVolume& v);

MultiChannelVolume concat_channels(const ScalarVolume& a, const ScalarVolume& b,
                                   std::array<std::string, 2> names);

struct PreprocessedCase {
  MultiChannelVolume input;
  BinaryMask label;
};

// resample -> znormalize per channel -> concatenate; label goes through
// nearest-neighbour resampling to the same grid.
PreprocessedCase preprocess_case(const ScalarVolume& adc, const ScalarVolume& zadc,
                                 const BinaryMask& label,
                                 Dims3 target_dims = kDefaultTargetDims);

}  // namespace hieseg
