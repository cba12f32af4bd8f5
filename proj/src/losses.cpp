#include "hieseg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>

#include "hieseg/edt.hpp"
#include "hieseg/errors.hpp"
#include "hieseg/metrics.hpp"

namespace hieseg {

namespace {

constexpr double kProbClampLo = 1e-7;
constexpr double kProbClampHi = 1.0 - 1e-7;

void check_positive(double v, const char* field) {
  if (!(v > 0.0)) throw config_error(std::string("loss spec: ") + field + " must be > 0");
}

void check_nonnegative(double v, const char* field) {
  if (!(v >= 0.0)) throw config_error(std::string("loss spec: ") + field + " must be >= 0");
}

void check_unit_interval(double v, const char* field) {
  if (!(v >= 0.0 && v <= 1.0))
    throw config_error(std::string("loss spec: ") + field + " must lie in [0, 1]");
}

BinaryMask surface_mask(const SurfaceSet& s) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(s.geometry.voxel_count()), 0);
  for (const auto& v : s.voxels) m[static_cast<std::size_t>(s.geometry.index(v[0], v[1], v[2]))] = 1;
  return BinaryMask(s.geometry, std::move(m));
}

}  // namespace

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::kDice: return "dice";
    case LossKind::kDiceFocal: return "dicefocal";
    case LossKind::kTversky: return "tversky";
    case LossKind::kHausdorffDT: return "hausdorffdt";
    case LossKind::kDiceFocalHausdorffDT: return "dicefocal-hausdorffdt";
    case LossKind::kTverskyHausdorffDT: return "tversky-hausdorffdt";
  }
  throw config_error("loss spec: unknown loss kind enum value");
}

LossKind loss_kind_from_name(const std::string& name) {
  if (name == "dice") return LossKind::kDice;
  if (name == "dicefocal") return LossKind::kDiceFocal;
  if (name == "tversky") return LossKind::kTversky;
  if (name == "hausdorffdt") return LossKind::kHausdorffDT;
  if (name == "dicefocal-hausdorffdt") return LossKind::kDiceFocalHausdorffDT;
  if (name == "tversky-hausdorffdt") return LossKind::kTverskyHausdorffDT;
  throw config_error("loss spec: unknown loss kind \"" + name + "\"");
}

void LossSpec::validate() const {
  check_positive(epsilon, "epsilon");
  check_nonnegative(focal.gamma, "focal.gamma");
  check_nonnegative(focal.lambda_fg, "focal.lambda_fg");
  check_nonnegative(focal.lambda_bg, "focal.lambda_bg");
  check_unit_interval(focal.alpha, "focal.alpha");
  check_nonnegative(tversky.alpha, "tversky.alpha");
  check_nonnegative(tversky.beta, "tversky.beta");
  check_positive(hausdorff.alpha, "hausdorff.alpha");
  check_nonnegative(compound.alpha, "compound.alpha");
  check_nonnegative(compound.beta, "compound.beta");
}

LossSpec LossSpec::defaults(LossKind kind) {
  LossSpec s;
  s.kind = kind;
  return s;
}

nlohmann::json loss_spec_to_json(const LossSpec& spec) {
  return nlohmann::json{
      {"kind", loss_kind_name(spec.kind)},
      {"epsilon", spec.epsilon},
      {"focal",
       {{"gamma", spec.focal.gamma},
        {"lambda_fg", spec.focal.lambda_fg},
        {"lambda_bg", spec.focal.lambda_bg},
        {"alpha", spec.focal.alpha}}},
      {"tversky", {{"alpha", spec.tversky.alpha}, {"beta", spec.tversky.beta}}},
      {"hausdorff", {{"alpha", spec.hausdorff.alpha}}},
      {"compound", {{"alpha", spec.compound.alpha}, {"beta", spec.compound.beta}}},
  };
}

namespace {

double get_number(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) throw config_error(std::string("loss spec: \"") + key + "\" must be a number");
  return v.get<double>();
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                         const char* scope) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok)
      throw config_error(std::string("loss spec: unknown key \"") + item.key() + "\" in " + scope);
  }
}

}  // namespace

LossSpec loss_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw config_error("loss spec: top level must be a JSON object");
  reject_unknown_keys(j, {"kind", "epsilon", "focal", "tversky", "hausdorff", "compound"},
                      "top level");
  LossSpec s;
  if (j.contains("kind")) {
    if (!j.at("kind").is_string()) throw config_error("loss spec: \"kind\" must be a string");
    s.kind = loss_kind_from_name(j.at("kind").get<std::string>());
  }
  s.epsilon = get_number(j, "epsilon", s.epsilon);
  if (j.contains("focal")) {
    const auto& f = j.at("focal");
    if (!f.is_object()) throw config_error("loss spec: \"focal\" must be an object");
    reject_unknown_keys(f, {"gamma", "lambda_fg", "lambda_bg", "alpha"}, "\"focal\"");
    s.focal.gamma = get_number(f, "gamma", s.focal.gamma);
    s.focal.lambda_fg = get_number(f, "lambda_fg", s.focal.lambda_fg);
    s.focal.lambda_bg = get_number(f, "lambda_bg", s.focal.lambda_bg);
    s.focal.alpha = get_number(f, "alpha", s.focal.alpha);
  }
  if (j.contains("tversky")) {
    const auto& t = j.at("tversky");
    if (!t.is_object()) throw config_error("loss spec: \"tversky\" must be an object");
    reject_unknown_keys(t, {"alpha", "beta"}, "\"tversky\"");
    s.tversky.alpha = get_number(t, "alpha", s.tversky.alpha);
    s.tversky.beta = get_number(t, "beta", s.tversky.beta);
  }
  if (j.contains("hausdorff")) {
    const auto& h = j.at("hausdorff");
    if (!h.is_object()) throw config_error("loss spec: \"hausdorff\" must be an object");
    reject_unknown_keys(h, {"alpha"}, "\"hausdorff\"");
    s.hausdorff.alpha = get_number(h, "alpha", s.hausdorff.alpha);
  }
  if (j.contains("compound")) {
    const auto& c = j.at("compound");
    if (!c.is_object()) throw config_error("loss spec: \"compound\" must be an object");
    reject_unknown_keys(c, {"alpha", "beta"}, "\"compound\"");
    s.compound.alpha = get_number(c, "alpha", s.compound.alpha);
    s.compound.beta = get_number(c, "beta", s.compound.beta);
  }
  s.validate();
  return s;
}

LossResult dice_loss(const ProbVolume& p, const BinaryMask& g, double eps) {
  require_compatible(p.geometry(), g.geometry(), "dice loss");
  const auto pd = p.values();
  const auto gd = g.values();
  double inter = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < pd.size(); ++i) {
    inter += pd[i] * gd[i];
    sum += pd[i] + gd[i];
  }
  const double num = 2.0 * inter + eps;
  const double den = sum + eps;
  LossResult r;
  r.value = 1.0 - num / den;
  r.gradient.resize(pd.size());
  const double den2 = den * den;
  for (std::size_t i = 0; i < pd.size(); ++i)
    r.gradient[i] = -(2.0 * gd[i] * den - num) / den2;
  return r;
}

LossResult focal_loss(const ProbVolume& p, const BinaryMask& g, double gamma,
                      double lambda_fg, double lambda_bg) {
  require_compatible(p.geometry(), g.geometry(), "focal loss");
  const auto pd = p.values();
  const auto gd = g.values();
  const double n = static_cast<double>(pd.size());
  LossResult r;
  r.gradient.assign(pd.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < pd.size(); ++i) {
    const bool fg = gd[i] != 0;
    const double lambda = fg ? lambda_fg : lambda_bg;
    const double pt_raw = fg ? pd[i] : 1.0 - pd[i];
    const double pt = std::clamp(pt_raw, kProbClampLo, kProbClampHi);
    const double one_minus = 1.0 - pt;
    const double log_pt = std::log(pt);
    acc += -lambda * std::pow(one_minus, gamma) * log_pt;
    if (pt_raw < kProbClampLo || pt_raw > kProbClampHi) continue;  // clamp is flat
    double d_pt;
    if (gamma == 0.0) {
      d_pt = -lambda / pt;  // general form would hit 0 * inf at pt -> 1
    } else {
      d_pt = lambda * (gamma * std::pow(one_minus, gamma - 1.0) * log_pt -
                       std::pow(one_minus, gamma) / pt);
    }
    r.gradient[i] = (fg ? d_pt : -d_pt) / n;
  }
  r.value = acc / n;
  return r;
}

LossResult dice_focal_loss(const ProbVolume& p, const BinaryMask& g, const LossSpec& spec) {
  LossResult dice = dice_loss(p, g, spec.epsilon);
  LossResult focal =
      focal_loss(p, g, spec.focal.gamma, spec.focal.lambda_fg, spec.focal.lambda_bg);
  const double a = spec.focal.alpha;
  LossResult r;
  r.value = (1.0 - a) * dice.value + a * focal.value;
  r.gradient.resize(dice.gradient.size());
  for (std::size_t i = 0; i < r.gradient.size(); ++i)
    r.gradient[i] = (1.0 - a) * dice.gradient[i] + a * focal.gradient[i];
  r.diagnostics["dice"] = dice.value;
  r.diagnostics["focal"] = focal.value;
  return r;
}

LossResult tversky_loss(const ProbVolume& p, const BinaryMask& g, double alpha,
                        double beta, double eps) {
  require_compatible(p.geometry(), g.geometry(), "tversky loss");
  const auto pd = p.values();
  const auto gd = g.values();
  double tp = 0.0, fp = 0.0, fn = 0.0;
  for (std::size_t i = 0; i < pd.size(); ++i) {
    tp += pd[i] * gd[i];
    fp += pd[i] * (1.0 - gd[i]);
    fn += (1.0 - pd[i]) * gd[i];
  }
  const double num = tp + eps;
  const double den = tp + alpha * fp + beta * fn + eps;
  LossResult r;
  r.value = 1.0 - num / den;
  r.gradient.resize(pd.size());
  const double den2 = den * den;
  for (std::size_t i = 0; i < pd.size(); ++i) {
    const double gi = gd[i];
    const double d_den = gi + alpha * (1.0 - gi) - beta * gi;
    r.gradient[i] = -(gi * den - num * d_den) / den2;
  }
  return r;
}

HausdorffFields hausdorff_distance_fields(const ProbVolume& p, const BinaryMask& g) {
  require_compatible(p.geometry(), g.geometry(), "distance-transform loss");
  const BinaryMask pred = binarize(p, 0.5);
  const SignedDistanceField sg = signed_edt(g);
  const SignedDistanceField sp = signed_edt(pred);
  const double cap = g.geometry().diameter_mm();
  HausdorffFields f;
  f.dist_truth.resize(sg.data.size());
  f.dist_pred.resize(sp.data.size());
  for (std::size_t i = 0; i < sg.data.size(); ++i) {
    const double dg = std::abs(sg.data[i]);
    const double dp = std::abs(sp.data[i]);
    f.dist_truth[i] = std::isinf(dg) ? cap : dg;
    f.dist_pred[i] = std::isinf(dp) ? cap : dp;
  }
  return f;
}

LossResult hausdorff_dt_loss_with_fields(const ProbVolume& p, const BinaryMask& g,
                                         double alpha_h, const HausdorffFields& fields) {
  require_compatible(p.geometry(), g.geometry(), "distance-transform loss");
  const auto pd = p.values();
  const auto gd = g.values();
  if (fields.dist_truth.size() != pd.size() || fields.dist_pred.size() != pd.size())
    throw validation_error("distance-transform loss: field size does not match volume");
  const double n = static_cast<double>(pd.size());
  LossResult r;
  r.gradient.resize(pd.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < pd.size(); ++i) {
    const double diff = pd[i] - gd[i];
    const double w = std::pow(fields.dist_truth[i], alpha_h) +
                     std::pow(fields.dist_pred[i], alpha_h);
    acc += diff * diff * w;
    r.gradient[i] = 2.0 * diff * w / n;
  }
  r.value = acc / n;
  return r;
}

LossResult hausdorff_dt_loss(const ProbVolume& p, const BinaryMask& g, double alpha_h) {
  return hausdorff_dt_loss_with_fields(p, g, alpha_h, hausdorff_distance_fields(p, g));
}

double hausdorff_reciprocal(const BinaryMask& pred, const BinaryMask& truth) {
  require_compatible(pred.geometry(), truth.geometry(), "hausdorff reciprocal");
  const SurfaceSet sp = extract_surface(pred);
  const SurfaceSet st = extract_surface(truth);
  if (sp.voxels.empty() && st.voxels.empty()) return 1.0;
  if (sp.voxels.empty() || st.voxels.empty()) return 0.0;
  const DistanceField to_truth = edt(surface_mask(st));
  const DistanceField to_pred = edt(surface_mask(sp));
  double hd = 0.0;
  for (const auto& v : sp.voxels) hd = std::max(hd, to_truth.at(v[0], v[1], v[2]));
  for (const auto& v : st.voxels) hd = std::max(hd, to_pred.at(v[0], v[1], v[2]));
  return 1.0 / (1.0 + hd);
}

namespace {

LossResult compound_with(const ProbVolume& p, const BinaryMask& g, const LossSpec& spec,
                         const HausdorffFields* fields) {
  LossResult base;
  switch (spec.kind) {
    case LossKind::kDiceFocalHausdorffDT:
      base = dice_focal_loss(p, g, spec);
      break;
    case LossKind::kTverskyHausdorffDT:
      base = tversky_loss(p, g, spec.tversky.alpha, spec.tversky.beta, spec.epsilon);
      break;
    default:
      throw config_error("loss spec: compound form requires a compound kind");
  }
  const LossResult hdt =
      fields ? hausdorff_dt_loss_with_fields(p, g, spec.hausdorff.alpha, *fields)
             : hausdorff_dt_loss(p, g, spec.hausdorff.alpha);
  const double a = spec.compound.alpha;
  const double b = spec.compound.beta;
  LossResult r;
  r.value = a * base.value + b * std::log1p(hdt.value);
  r.gradient.resize(base.gradient.size());
  const double hdt_scale = b / (1.0 + hdt.value);
  for (std::size_t i = 0; i < r.gradient.size(); ++i)
    r.gradient[i] = a * base.gradient[i] + hdt_scale * hdt.gradient[i];
  r.diagnostics = base.diagnostics;
  r.diagnostics["base"] = base.value;
  r.diagnostics["hausdorff_dt"] = hdt.value;
  return r;
}

}  // namespace

LossResult compound_loss(const ProbVolume& p, const BinaryMask& g, const LossSpec& spec) {
  return compound_with(p, g, spec, nullptr);
}

LossResult evaluate_loss_with_fields(const LossSpec& spec, const ProbVolume& p,
                                     const BinaryMask& g, const HausdorffFields* fields) {
  spec.validate();
  switch (spec.kind) {
    case LossKind::kDice:
      return dice_loss(p, g, spec.epsilon);
    case LossKind::kDiceFocal:
      return dice_focal_loss(p, g, spec);
    case LossKind::kTversky:
      return tversky_loss(p, g, spec.tversky.alpha, spec.tversky.beta, spec.epsilon);
    case LossKind::kHausdorffDT:
      if (fields) return hausdorff_dt_loss_with_fields(p, g, spec.hausdorff.alpha, *fields);
      return hausdorff_dt_loss(p, g, spec.hausdorff.alpha);
    case LossKind::kDiceFocalHausdorffDT:
    case LossKind::kTverskyHausdorffDT:
      return compound_with(p, g, spec, fields);
  }
  throw config_error("loss spec: unknown loss kind enum value");
}

LossResult evaluate_loss(const LossSpec& spec, const ProbVolume& p, const BinaryMask& g) {
  return evaluate_loss_with_fields(spec, p, g, nullptr);
}

}  // namespace hieseg
