#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hieseg/losses.hpp"
#include "hieseg/volume.hpp"

namespace hieseg {

struct GradCheckConfig {
  double step = 1e-4;     // central-difference half-step
  double abs_tol = 1e-6;  // absolute error floor
  double rel_tol = 1e-3;  // relative error bound
  int samples = 64;       // voxels probed per case; <= 0 probes every voxel
  std::uint64_t seed = 2026;
};

struct GradCheckReport {
  std::string label;
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;  // |analytic - numeric| / max(|analytic|, |numeric|)
  std::size_t checked = 0;   // voxels actually probed (in-range steps only)
  bool passed = true;        // every probe within abs_tol + rel_tol * magnitude
};

// Compares a caller-supplied gradient against central differences of value_fn
// at `samples` randomly chosen voxels. Voxels where the symmetric step would
// leave [0, 1] are skipped.
GradCheckReport check_gradient_against(const std::function<double(const ProbVolume&)>& value_fn,
                                       const std::vector<double>& gradient,
                                       const ProbVolume& p, const GradCheckConfig& cfg,
                                       std::string label);

// Checks the analytic gradient of one loss. Distance fields of the
// distance-weighted forms are frozen at the unperturbed prediction, matching
// what the analytic gradient differentiates.
GradCheckReport check_gradient(const LossSpec& spec, const ProbVolume& p, const BinaryMask& g,
                               const GradCheckConfig& cfg);

// Runs check_gradient for every loss kind on a deterministic random volume.
std::vector<GradCheckReport> run_gradcheck_suite(const GradCheckConfig& cfg);

}  // namespace hieseg
