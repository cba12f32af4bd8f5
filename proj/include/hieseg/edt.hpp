#pragma once

#include <vector>

#include "hieseg/volume.hpp"

namespace hieseg {

// Per-voxel distance in mm to the nearest foreground voxel center.
// All values are +inf when the source set is empty.
struct DistanceField {
  Geometry geometry;
  std::vector<double> data;

  double at(int x, int y, int z) const { return data[geometry.index(x, y, z)]; }
};

// Negative inside the foreground, positive outside; see signed_edt.
struct SignedDistanceField {
  Geometry geometry;
  std::vector<double> data;

  double at(int x, int y, int z) const { return data[geometry.index(x, y, z)]; }
};

// Exact anisotropic Euclidean distance transform: for every voxel, the
// distance between voxel centers to the nearest foreground voxel,
// spacing-weighted. Three separable lower-envelope passes on squared
// distances, then a square root. Empty foreground yields an all-+inf field.
DistanceField edt(const BinaryMask& mask);

// -edt(complement) on foreground voxels, +edt(foreground) on background
// voxels. |signed_edt| is the unsigned distance to the mask interface used by
// the distance-transform loss. Empty or full masks give one-sided fields with
// +-inf on the side whose source set is empty.
SignedDistanceField signed_edt(const BinaryMask& mask);

}  // namespace hieseg
