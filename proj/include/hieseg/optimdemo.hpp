#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hieseg/losses.hpp"
#include "hieseg/volume.hpp"

namespace hieseg {

enum class PhantomKind { kSphere, kTwoSpheres, kThinShell, kTinyLesion };

std::string phantom_kind_name(PhantomKind kind);
PhantomKind phantom_kind_from_name(const std::string& name);  // throws config_error

// Deterministic analytic masks for desk-scale experiments. `radius` is in
// voxels; pass a negative value for the kind's default (a quarter of the
// shortest axis; smaller for the paired spheres; 2 for the tiny lesion). The
// shell is a one-voxel-thick spherical crust; the tiny lesion is an
// off-center speck constrained to under 1% of the grid.
BinaryMask make_phantom(PhantomKind kind, Dims3 dims, Vec3 spacing, int radius = -1);

struct DescentConfig {
  LossSpec loss;
  int steps = 300;
  // Raw loss gradients are tiny relative to logit scale (means over ~32k
  // voxels), so useful motion within a few hundred steps needs a large step;
  // 600 converges every shipped loss on the 32^3 sphere with margin.
  double step_size = 600.0;
  double clip_max_norm = 1.0;
  std::uint64_t seed = 0;
  int log_every = 10;
  double tau_mm = 1.0;  // tolerance for the surface-dice column of the trajectory

  void validate() const;  // throws config_error
};

struct StepRecord {
  int step = 0;
  double loss = 0.0;
  double dice = 0.0;
  double msd_mm = 0.0;
  double nsd = 0.0;
};

struct DescentResult {
  std::vector<StepRecord> trajectory;  // step 0, every log_every, and the final step
  std::vector<double> applied_norms;   // post-clip gradient norm per update
  ProbVolume probabilities;            // state after the last step
  BinaryMask prediction;               // probabilities binarized at 0.5
};

// Direct gradient descent on a logit volume: logits start iid N(0, 0.1^2),
// probabilities are the logistic of the logits, and the loss gradient is
// chained through the logistic derivative, globally norm-clipped, and applied
// with a fixed step. No network, no momentum — the point is to watch each
// loss pull a prediction onto the target.
DescentResult run_descent(const BinaryMask& target, const DescentConfig& cfg);

// "step,loss,dice,msd_mm,nsd" rows; infinities render as "Inf".
std::string trajectory_csv(const std::vector<StepRecord>& trajectory);

}  // namespace hieseg
