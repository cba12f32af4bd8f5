#include "hieseg/metrics.hpp"

#include <cmath>
#include <limits>

#include "hieseg/edt.hpp"

namespace hieseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTauSlack = 1e-9;

BinaryMask surface_mask(const SurfaceSet& s) {
  std::vector<std::uint8_t> data(s.geometry.voxel_count(), 0);
  for (const auto& v : s.voxels) data[s.geometry.index(v[0], v[1], v[2])] = 1;
  return BinaryMask(s.geometry, std::move(data));
}

}  // namespace

SurfaceSet extract_surface(const BinaryMask& m) {
  const Geometry& g = m.geometry();
  SurfaceSet out{g, {}};
  const int steps[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int z = 0; z < g.dims[2]; ++z) {
    for (int y = 0; y < g.dims[1]; ++y) {
      for (int x = 0; x < g.dims[0]; ++x) {
        if (!m.at(x, y, z)) continue;
        for (const auto& s : steps) {
          const int nx = x + s[0], ny = y + s[1], nz = z + s[2];
          const bool outside = nx < 0 || ny < 0 || nz < 0 || nx >= g.dims[0] ||
                               ny >= g.dims[1] || nz >= g.dims[2];
          if (outside || !m.at(nx, ny, nz)) {
            out.voxels.push_back({x, y, z});
            break;
          }
        }
      }
    }
  }
  return out;
}

double dice_coefficient(const BinaryMask& p, const BinaryMask& q) {
  require_compatible(p.geometry(), q.geometry(), "dice_coefficient");
  std::size_t np = 0, nq = 0, both = 0;
  auto pv = p.values();
  auto qv = q.values();
  for (std::size_t i = 0; i < pv.size(); ++i) {
    np += pv[i];
    nq += qv[i];
    both += pv[i] & qv[i];
  }
  if (np + nq == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(np + nq);
}

double mean_surface_distance(const BinaryMask& p, const BinaryMask& q) {
  require_compatible(p.geometry(), q.geometry(), "mean_surface_distance");
  const SurfaceSet sp = extract_surface(p);
  const SurfaceSet sq = extract_surface(q);
  if (sp.voxels.empty() && sq.voxels.empty()) return 0.0;
  if (sp.voxels.empty() || sq.voxels.empty()) return kInf;

  const DistanceField to_p = edt(surface_mask(sp));
  const DistanceField to_q = edt(surface_mask(sq));
  double sum_q = 0.0;
  for (const auto& v : sq.voxels) sum_q += to_p.at(v[0], v[1], v[2]);
  double sum_p = 0.0;
  for (const auto& v : sp.voxels) sum_p += to_q.at(v[0], v[1], v[2]);
  return 0.5 * (sum_q / sq.voxels.size() + sum_p / sp.voxels.size());
}

double normalized_surface_dice(const BinaryMask& p, const BinaryMask& q, double tau_mm) {
  if (!(tau_mm > 0.0)) {
    throw validation_error("normalized_surface_dice: tau must be > 0, got " +
                           std::to_string(tau_mm));
  }
  require_compatible(p.geometry(), q.geometry(), "normalized_surface_dice");
  const SurfaceSet sp = extract_surface(p);
  const SurfaceSet sq = extract_surface(q);
  if (sp.voxels.empty() && sq.voxels.empty()) return 1.0;
  if (sp.voxels.empty() || sq.voxels.empty()) return 0.0;

  const DistanceField to_p = edt(surface_mask(sp));
  const DistanceField to_q = edt(surface_mask(sq));
  std::size_t hits = 0;
  for (const auto& v : sq.voxels)
    if (to_p.at(v[0], v[1], v[2]) <= tau_mm + kTauSlack) ++hits;
  for (const auto& v : sp.voxels)
    if (to_q.at(v[0], v[1], v[2]) <= tau_mm + kTauSlack) ++hits;
  return static_cast<double>(hits) / static_cast<double>(sq.voxels.size() + sp.voxels.size());
}

MetricReport evaluate_case(const BinaryMask& pred, const BinaryMask& truth,
                           double tau_mm, std::string case_id) {
  require_compatible(pred.geometry(), truth.geometry(), "evaluate_case");
  MetricReport r;
  r.case_id = std::move(case_id);
  r.tau_mm = tau_mm;
  r.dice = dice_coefficient(pred, truth);
  r.msd_mm = mean_surface_distance(pred, truth);
  r.nsd = normalized_surface_dice(pred, truth, tau_mm);
  return r;
}

}  // namespace hieseg
