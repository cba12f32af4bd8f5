#include "hieseg/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hieseg/errors.hpp"

namespace hieseg {

GradCheckReport check_gradient_against(const std::function<double(const ProbVolume&)>& value_fn,
                                       const std::vector<double>& gradient,
                                       const ProbVolume& p, const GradCheckConfig& cfg,
                                       std::string label) {
  if (gradient.size() != p.size())
    throw validation_error("gradient check: gradient size does not match volume");
  if (!(cfg.step > 0.0)) throw config_error("gradient check: step must be > 0");

  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t want =
      cfg.samples <= 0 ? p.size() : std::min(p.size(), static_cast<std::size_t>(cfg.samples));

  GradCheckReport report;
  report.label = std::move(label);
  std::vector<double> data(p.values().begin(), p.values().end());
  for (std::size_t k = 0; k < order.size() && report.checked < want; ++k) {
    const std::size_t i = order[k];
    const double base = data[i];
    if (base + cfg.step > 1.0 || base - cfg.step < 0.0) continue;

    data[i] = base + cfg.step;
    const double up = value_fn(ProbVolume(p.geometry(), data));
    data[i] = base - cfg.step;
    const double down = value_fn(ProbVolume(p.geometry(), data));
    data[i] = base;

    const double numeric = (up - down) / (2.0 * cfg.step);
    const double analytic = gradient[i];
    const double err = std::abs(analytic - numeric);
    const double mag = std::max(std::abs(analytic), std::abs(numeric));
    report.max_abs_err = std::max(report.max_abs_err, err);
    if (mag > 0.0) report.max_rel_err = std::max(report.max_rel_err, err / mag);
    if (err > cfg.abs_tol + cfg.rel_tol * mag) report.passed = false;
    ++report.checked;
  }
  return report;
}

GradCheckReport check_gradient(const LossSpec& spec, const ProbVolume& p, const BinaryMask& g,
                               const GradCheckConfig& cfg) {
  spec.validate();
  require_compatible(p.geometry(), g.geometry(), "gradient check");

  const bool uses_fields = spec.kind == LossKind::kHausdorffDT ||
                           spec.kind == LossKind::kDiceFocalHausdorffDT ||
                           spec.kind == LossKind::kTverskyHausdorffDT;
  HausdorffFields fields;
  if (uses_fields) fields = hausdorff_distance_fields(p, g);
  const HausdorffFields* frozen = uses_fields ? &fields : nullptr;

  const LossResult at_p = evaluate_loss_with_fields(spec, p, g, frozen);
  return check_gradient_against(
      [&](const ProbVolume& q) { return evaluate_loss_with_fields(spec, q, g, frozen).value; },
      at_p.gradient, p, cfg, loss_kind_name(spec.kind));
}

std::vector<GradCheckReport> run_gradcheck_suite(const GradCheckConfig& cfg) {
  const Geometry geo{{12, 10, 8}, {0.8, 0.8, 3.0}, {0.0, 0.0, 0.0}};
  std::mt19937_64 rng(cfg.seed);
  std::bernoulli_distribution bit(0.3);
  std::uniform_real_distribution<double> prob(0.05, 0.95);

  std::vector<GradCheckReport> reports;
  for (LossKind kind :
       {LossKind::kDice, LossKind::kDiceFocal, LossKind::kTversky, LossKind::kHausdorffDT,
        LossKind::kDiceFocalHausdorffDT, LossKind::kTverskyHausdorffDT}) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(geo.voxel_count()));
    for (auto& v : mask) v = bit(rng) ? 1 : 0;
    std::vector<double> probs(mask.size());
    for (auto& v : probs) v = prob(rng);
    reports.push_back(check_gradient(LossSpec::defaults(kind), ProbVolume(geo, std::move(probs)),
                                     BinaryMask(geo, std::move(mask)), cfg));
  }
  return reports;
}

}  // namespace hieseg
