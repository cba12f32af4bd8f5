#pragma once

#include <string>
#include <vector>

#include "hieseg/volume.hpp"

namespace hieseg {

// Voxels on the mask boundary: foreground with a 6-connected neighbour that
// is background or out of bounds.
struct SurfaceSet {
  Geometry geometry;
  std::vector<Dims3> voxels;
};

struct MetricReport {
  std::string case_id;
  double dice = 0.0;
  double msd_mm = 0.0;  // +inf when exactly one surface is empty
  double nsd = 0.0;
  double tau_mm = 1.0;
};

SurfaceSet extract_surface(const BinaryMask& m);

// 2|p n q| / (|p| + |q|); both empty -> 1.
double dice_coefficient(const BinaryMask& p, const BinaryMask& q);

// Symmetric mean of nearest-surface distances in mm. One surface empty ->
// +inf; both empty -> 0.
double mean_surface_distance(const BinaryMask& p, const BinaryMask& q);

// Fraction of surface voxels of each mask within tau_mm of the other's
// surface. Both empty -> 1; exactly one empty -> 0. The tolerance comparison
// carries a 1e-9 absolute slack.
double normalized_surface_dice(const BinaryMask& p, const BinaryMask& q, double tau_mm);

MetricReport evaluate_case(const BinaryMask& pred, const BinaryMask& truth,
                           double tau_mm, std::string case_id = "");

}  // namespace hieseg
