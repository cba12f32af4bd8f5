#include "hieseg/optimdemo.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <utility>

#include "hieseg/errors.hpp"
#include "hieseg/metrics.hpp"

namespace hieseg {

namespace {

struct Ball {
  Dims3 center;
  int radius;  // negative radius marks an empty ball
};

bool inside(const Ball& b, int x, int y, int z) {
  if (b.radius < 0) return false;
  const long long dx = x - b.center[0], dy = y - b.center[1], dz = z - b.center[2];
  return dx * dx + dy * dy + dz * dz <= static_cast<long long>(b.radius) * b.radius;
}

void require_fits(const Ball& b, Dims3 dims) {
  for (int i = 0; i < 3; ++i) {
    if (b.center[i] - b.radius < 0 || b.center[i] + b.radius >= dims[i])
      throw validation_error("phantom: radius " + std::to_string(b.radius) +
                             " does not fit inside the grid");
  }
}

int default_radius(PhantomKind kind, Dims3 dims) {
  const int shortest = std::min(dims[0], std::min(dims[1], dims[2]));
  switch (kind) {
    case PhantomKind::kTwoSpheres:
      return std::max(1, shortest / 6);
    case PhantomKind::kTinyLesion:
      return 2;
    default:
      return std::max(1, shortest / 4);
  }
}

}  // namespace

std::string phantom_kind_name(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::kSphere: return "sphere";
    case PhantomKind::kTwoSpheres: return "two-spheres";
    case PhantomKind::kThinShell: return "thin-shell";
    case PhantomKind::kTinyLesion: return "tiny-lesion";
  }
  throw config_error("phantom: unknown kind enum value");
}

PhantomKind phantom_kind_from_name(const std::string& name) {
  if (name == "sphere") return PhantomKind::kSphere;
  if (name == "two-spheres") return PhantomKind::kTwoSpheres;
  if (name == "thin-shell") return PhantomKind::kThinShell;
  if (name == "tiny-lesion") return PhantomKind::kTinyLesion;
  throw config_error("phantom: unknown kind \"" + name + "\"");
}

BinaryMask make_phantom(PhantomKind kind, Dims3 dims, Vec3 spacing, int radius) {
  Geometry g{dims, spacing, {0.0, 0.0, 0.0}};
  g.validate();
  const int r = radius < 0 ? default_radius(kind, dims) : radius;

  const Dims3 center{dims[0] / 2, dims[1] / 2, dims[2] / 2};
  std::vector<Ball> add, subtract;
  switch (kind) {
    case PhantomKind::kSphere:
      add.push_back({center, r});
      break;
    case PhantomKind::kTwoSpheres:
      add.push_back({{dims[0] / 4, dims[1] / 2, dims[2] / 2}, r});
      add.push_back({{3 * dims[0] / 4, dims[1] / 2, dims[2] / 2}, r});
      break;
    case PhantomKind::kThinShell:
      add.push_back({center, r});
      subtract.push_back({center, r - 1});
      break;
    case PhantomKind::kTinyLesion:
      add.push_back({{dims[0] / 4, dims[1] / 4, dims[2] / 2}, r});
      break;
  }
  for (const Ball& b : add) require_fits(b, dims);

  std::vector<std::uint8_t> data(static_cast<std::size_t>(g.voxel_count()), 0);
  std::size_t fg = 0;
  for (int z = 0; z < dims[2]; ++z)
    for (int y = 0; y < dims[1]; ++y)
      for (int x = 0; x < dims[0]; ++x) {
        bool in = false;
        for (const Ball& b : add) in = in || inside(b, x, y, z);
        for (const Ball& b : subtract) in = in && !inside(b, x, y, z);
        if (in) {
          data[static_cast<std::size_t>(g.index(x, y, z))] = 1;
          ++fg;
        }
      }

  if (kind == PhantomKind::kTinyLesion &&
      static_cast<double>(fg) >= 0.01 * static_cast<double>(g.voxel_count()))
    throw validation_error("phantom: tiny lesion must stay under 1% of the grid");
  return BinaryMask(g, std::move(data));
}

void DescentConfig::validate() const {
  loss.validate();
  if (steps < 1) throw config_error("descent: steps must be >= 1");
  if (!(step_size > 0.0)) throw config_error("descent: step_size must be > 0");
  if (!(clip_max_norm > 0.0)) throw config_error("descent: clip_max_norm must be > 0");
  if (log_every < 1) throw config_error("descent: log_every must be >= 1");
  if (!(tau_mm > 0.0)) throw config_error("descent: tau_mm must be > 0");
}

DescentResult run_descent(const BinaryMask& target, const DescentConfig& cfg) {
  cfg.validate();
  const Geometry& g = target.geometry();
  const std::size_t n = target.size();

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> init(0.0, 0.1);
  std::vector<double> logits(n);
  for (double& l : logits) l = init(rng);

  std::vector<StepRecord> trajectory;
  std::vector<double> applied_norms;
  applied_norms.reserve(static_cast<std::size_t>(cfg.steps));

  std::vector<double> probs(n);
  for (int step = 0;; ++step) {
    for (std::size_t i = 0; i < n; ++i) probs[i] = 1.0 / (1.0 + std::exp(-logits[i]));
    ProbVolume p(g, probs);
    const LossResult lr = evaluate_loss(cfg.loss, p, target);
    if (!std::isfinite(lr.value))
      throw validation_error("descent: non-finite loss at step " + std::to_string(step));

    if (step % cfg.log_every == 0 || step == cfg.steps) {
      const MetricReport m = evaluate_case(binarize(p, 0.5), target, cfg.tau_mm,
                                           "step " + std::to_string(step));
      trajectory.push_back({step, lr.value, m.dice, m.msd_mm, m.nsd});
    }
    if (step == cfg.steps) {
      BinaryMask mask = binarize(p, 0.5);
      return DescentResult{std::move(trajectory), std::move(applied_norms), std::move(p),
                           std::move(mask)};
    }

    double norm_sq = 0.0;
    std::vector<double> grad(n);
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = lr.gradient[i] * probs[i] * (1.0 - probs[i]);
      norm_sq += grad[i] * grad[i];
    }
    const double norm = std::sqrt(norm_sq);
    if (!std::isfinite(norm))
      throw validation_error("descent: non-finite gradient at step " + std::to_string(step));
    const double scale = norm > cfg.clip_max_norm ? cfg.clip_max_norm / norm : 1.0;
    applied_norms.push_back(norm * scale);
    for (std::size_t i = 0; i < n; ++i) logits[i] -= cfg.step_size * scale * grad[i];
  }
}

std::string trajectory_csv(const std::vector<StepRecord>& trajectory) {
  std::string out = "step,loss,dice,msd_mm,nsd\n";
  char buf[160];
  for (const StepRecord& r : trajectory) {
    if (std::isinf(r.msd_mm)) {
      std::snprintf(buf, sizeof buf, "%d,%.9g,%.6f,Inf,%.6f\n", r.step, r.loss, r.dice,
                    r.nsd);
    } else {
      std::snprintf(buf, sizeof buf, "%d,%.9g,%.6f,%.6f,%.6f\n", r.step, r.loss, r.dice,
                    r.msd_mm, r.nsd);
    }
    out += buf;
  }
  return out;
}

}  // namespace hieseg
