#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <json.hpp>

#include "hieseg/volume.hpp"

namespace hieseg {

// Training-time intensity and spatial jitter. Every transform is gated by an
// independent coin flip; parameters are drawn once per case and shared across
// channels, while noise realizations are drawn per channel. All draws come
// from a single seeded stream in a fixed order (noise, resolution, blur,
// gamma, elastic), so one seed reproduces one augmentation exactly.
struct AugmentConfig {
  double gate_prob = 0.5;

  double noise_std = 0.01;  // additive Gaussian, intensity units

  double aniso_factor_min = 1.2;  // down/up-sample along one random axis
  double aniso_factor_max = 2.0;

  double blur_sigma_min_mm = 0.0;
  double blur_sigma_max_mm = 0.5;

  double log_gamma_min = -0.1;  // exponent is exp(log_gamma)
  double log_gamma_max = 0.1;

  int elastic_grid = 7;               // control nodes per axis
  double elastic_max_disp_mm = 4.0;   // largest control-node displacement

  std::uint64_t seed = 0;

  void validate() const;  // throws config_error
};

nlohmann::json augment_config_to_json(const AugmentConfig& cfg);
// Missing keys keep their defaults; unknown keys and wrong types are rejected
// with config_error, and the result is validated.
AugmentConfig augment_config_from_json(const nlohmann::json& j);

struct AppliedLog {
  std::uint64_t seed = 0;
  bool noise_applied = false;
  double noise_std = 0.0;
  bool aniso_applied = false;
  int aniso_axis = 0;
  double aniso_factor = 0.0;
  bool blur_applied = false;
  double blur_sigma_mm = 0.0;
  bool gamma_applied = false;
  double log_gamma = 0.0;
  bool elastic_applied = false;
  double elastic_max_disp_mm = 0.0;
};

nlohmann::json applied_log_to_json(const AppliedLog& log);

struct AugmentResult {
  MultiChannelVolume image;
  BinaryMask label;
  AppliedLog log;
};

// --- individual transforms (image-only unless stated otherwise) ------------

// std <= 0 returns the input unchanged.
ScalarVolume add_gaussian_noise(const ScalarVolume& v, double std_dev, std::mt19937_64& rng);

// Shrinks one axis by `factor` (rounded, floor 1) and resamples back, leaving
// dims unchanged but resolution degraded along that axis.
ScalarVolume degrade_axis_resolution(const ScalarVolume& v, int axis, double factor);

// Separable Gaussian, sigma in mm converted per axis via spacing; kernel
// truncated at three sigma, renormalized, borders clamped. sigma <= 0 is a
// no-op.
ScalarVolume gaussian_blur(const ScalarVolume& v, double sigma_mm);

// Min-max normalizes, raises to exp(log_gamma), restores the original range.
// Constant volumes and log_gamma == 0 pass through unchanged.
ScalarVolume gamma_adjust(const ScalarVolume& v, double log_gamma);

// Per-voxel displacement in mm. Warps pull: the output at voxel t samples the
// input at t - d/spacing, clamped to the grid.
struct DisplacementField {
  Geometry geometry;
  std::vector<Vec3> mm;
};

// Dense field interpolated from an iid-Gaussian control grid rescaled so the
// largest control-node magnitude equals max_disp_mm.
DisplacementField random_displacement(const Geometry& g, int grid, double max_disp_mm,
                                      std::mt19937_64& rng);

ScalarVolume warp_trilinear(const ScalarVolume& v, const DisplacementField& d);
BinaryMask warp_nearest(const BinaryMask& m, const DisplacementField& d);

// Full pipeline over both channels and the label. Only the elastic step
// touches the label (nearest-neighbor).
AugmentResult augment_case(const MultiChannelVolume& image, const BinaryMask& label,
                           const AugmentConfig& cfg);

}  // namespace hieseg
