#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "hieseg/volume.hpp"

namespace hieseg {

enum class LossKind {
  kDice,
  kDiceFocal,
  kTversky,
  kHausdorffDT,
  kDiceFocalHausdorffDT,
  kTverskyHausdorffDT,
};

std::string loss_kind_name(LossKind kind);
LossKind loss_kind_from_name(const std::string& name);  // throws config_error

struct FocalParams {
  double gamma = 2.0;      // focusing exponent
  double lambda_fg = 1.0;  // class weight where g = 1
  double lambda_bg = 1.0;  // class weight where g = 0
  double alpha = 0.5;      // Dice/Focal balance inside the Dice-Focal loss
};

struct TverskyParams {
  double alpha = 0.3;  // false-positive weight
  double beta = 0.7;   // false-negative weight
};

struct HausdorffParams {
  double alpha = 2.0;  // distance-field exponent
};

struct CompoundParams {
  double alpha = 0.9;  // base-loss weight
  double beta = 0.1;   // boundary-term weight
};

struct LossSpec {
  LossKind kind = LossKind::kDice;
  double epsilon = 1e-5;
  FocalParams focal;
  TverskyParams tversky;
  HausdorffParams hausdorff;
  CompoundParams compound;

  void validate() const;  // throws config_error
  static LossSpec defaults(LossKind kind);
};

nlohmann::json loss_spec_to_json(const LossSpec& spec);
LossSpec loss_spec_from_json(const nlohmann::json& j);  // throws config_error

struct LossResult {
  double value = 0.0;
  std::vector<double> gradient;  // dL/dp per voxel, prediction layout
  std::map<std::string, double> diagnostics;
};

// L = 1 - (2*sum(p*g) + eps) / (sum(p) + sum(g) + eps)
LossResult dice_loss(const ProbVolume& p, const BinaryMask& g, double eps);

// Voxel mean of -lambda_t * (1 - p_t)^gamma * log(p_t) with p_t clamped to
// [1e-7, 1 - 1e-7]; gradient is zero where the clamp engages.
LossResult focal_loss(const ProbVolume& p, const BinaryMask& g, double gamma,
                      double lambda_fg, double lambda_bg);

// (1 - alpha) * Dice + alpha * Focal.
LossResult dice_focal_loss(const ProbVolume& p, const BinaryMask& g, const LossSpec& spec);

// L = 1 - (TP + eps) / (TP + alpha*FP + beta*FN + eps)
LossResult tversky_loss(const ProbVolume& p, const BinaryMask& g, double alpha,
                        double beta, double eps);

// Unsigned distances to the truth and prediction interfaces, prediction side
// binarized at 0.5. Infinite entries (empty or full side) are replaced by the
// grid diameter so gradients stay informative.
struct HausdorffFields {
  std::vector<double> dist_truth;
  std::vector<double> dist_pred;
};

HausdorffFields hausdorff_distance_fields(const ProbVolume& p, const BinaryMask& g);

// L = mean (p - g)^2 * (d_g^alpha + d_p^alpha); the distance fields are
// treated as constants by the gradient.
LossResult hausdorff_dt_loss(const ProbVolume& p, const BinaryMask& g, double alpha_h);

// Same loss with caller-supplied (frozen) distance fields; this is the
// evaluation path finite-difference checks rely on.
LossResult hausdorff_dt_loss_with_fields(const ProbVolume& p, const BinaryMask& g,
                                         double alpha_h, const HausdorffFields& fields);

// Literal reciprocal form 1/(1 + HD) over surface voxels, reported as a
// diagnostic only. Both masks empty -> 1; exactly one empty -> 0.
double hausdorff_reciprocal(const BinaryMask& pred, const BinaryMask& truth);

// alpha_c * base + beta_c * log(1 + L_hdt) with base = Dice-Focal or Tversky
// per spec.kind.
LossResult compound_loss(const ProbVolume& p, const BinaryMask& g, const LossSpec& spec);

LossResult evaluate_loss(const LossSpec& spec, const ProbVolume& p, const BinaryMask& g);

// Dispatch with frozen distance fields (ignored by kinds that use none).
LossResult evaluate_loss_with_fields(const LossSpec& spec, const ProbVolume& p,
                                     const BinaryMask& g, const HausdorffFields* fields);

}  // namespace hieseg
