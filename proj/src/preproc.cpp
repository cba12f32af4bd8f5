#include "hieseg/preproc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace hieseg {

namespace {

void check_target_dims(Dims3 target) {
  for (int i = 0; i < 3; ++i) {
    if (target[i] < 1) {
      throw validation_error("resample: target dims." + std::string(1, "xyz"[i]) +
                             " must be >= 1, got " + std::to_string(target[i]));
    }
  }
}

Geometry resampled_geometry(const Geometry& old, Dims3 target) {
  Geometry g = old;
  g.dims = target;
  for (int i = 0; i < 3; ++i) {
    g.spacing[i] = old.spacing[i] * static_cast<double>(old.dims[i]) / target[i];
  }
  return g;
}

// Source coordinate for output index t along one axis, clamped to the grid.
double source_coord(int t, int old_n, int new_n) {
  const double s = (t + 0.5) * (static_cast<double>(old_n) / new_n) - 0.5;
  return std::clamp(s, 0.0, static_cast<double>(old_n - 1));
}

}  // namespace

ScalarVolume resample_trilinear(const ScalarVolume& v, Dims3 target) {
  check_target_dims(target);
  const Geometry& old = v.geometry();
  Geometry out_geom = resampled_geometry(old, target);

  std::vector<double> sx(target[0]), sy(target[1]), sz(target[2]);
  for (int t = 0; t < target[0]; ++t) sx[t] = source_coord(t, old.dims[0], target[0]);
  for (int t = 0; t < target[1]; ++t) sy[t] = source_coord(t, old.dims[1], target[1]);
  for (int t = 0; t < target[2]; ++t) sz[t] = source_coord(t, old.dims[2], target[2]);

  std::vector<float> out(out_geom.voxel_count());
  std::size_t o = 0;
  for (int z = 0; z < target[2]; ++z) {
    const int z0 = static_cast<int>(sz[z]);
    const int z1 = std::min(z0 + 1, old.dims[2] - 1);
    const double fz = sz[z] - z0;
    for (int y = 0; y < target[1]; ++y) {
      const int y0 = static_cast<int>(sy[y]);
      const int y1 = std::min(y0 + 1, old.dims[1] - 1);
      const double fy = sy[y] - y0;
      for (int x = 0; x < target[0]; ++x, ++o) {
        const int x0 = static_cast<int>(sx[x]);
        const int x1 = std::min(x0 + 1, old.dims[0] - 1);
        const double fx = sx[x] - x0;

        const double c00 = (1.0 - fx) * v.at(x0, y0, z0) + fx * v.at(x1, y0, z0);
        const double c10 = (1.0 - fx) * v.at(x0, y1, z0) + fx * v.at(x1, y1, z0);
        const double c01 = (1.0 - fx) * v.at(x0, y0, z1) + fx * v.at(x1, y0, z1);
        const double c11 = (1.0 - fx) * v.at(x0, y1, z1) + fx * v.at(x1, y1, z1);
        const double c0 = (1.0 - fy) * c00 + fy * c10;
        const double c1 = (1.0 - fy) * c01 + fy * c11;
        out[o] = static_cast<float>((1.0 - fz) * c0 + fz * c1);
      }
    }
  }
  return ScalarVolume(out_geom, std::move(out));
}

BinaryMask resample_nearest(const BinaryMask& m, Dims3 target) {
  check_target_dims(target);
  const Geometry& old = m.geometry();
  Geometry out_geom = resampled_geometry(old, target);

  std::vector<int> ix(target[0]), iy(target[1]), iz(target[2]);
  for (int t = 0; t < target[0]; ++t)
    ix[t] = static_cast<int>(std::round(source_coord(t, old.dims[0], target[0])));
  for (int t = 0; t < target[1]; ++t)
    iy[t] = static_cast<int>(std::round(source_coord(t, old.dims[1], target[1])));
  for (int t = 0; t < target[2]; ++t)
    iz[t] = static_cast<int>(std::round(source_coord(t, old.dims[2], target[2])));

  std::vector<std::uint8_t> out(out_geom.voxel_count());
  std::size_t o = 0;
  for (int z = 0; z < target[2]; ++z)
    for (int y = 0; y < target[1]; ++y)
      for (int x = 0; x < target[0]; ++x, ++o) out[o] = m.at(ix[x], iy[y], iz[z]);
  return BinaryMask(out_geom, std::move(out));
}

ScalarVolume znormalize(const ScalarVolume& v) {
  double sum = 0.0;
  for (float x : v.values()) sum += x;
  const double mean = sum / v.size();
  double ssq = 0.0;
  for (float x : v.values()) {
    const double d = x - mean;
    ssq += d * d;
  }
  const double std_dev = std::max(std::sqrt(ssq / v.size()), 1e-8);

  std::vector<float> out(v.size());
  auto src = v.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>((src[i] - mean) / std_dev);
  }
  return ScalarVolume(v.geometry(), std::move(out));
}

MultiChannelVolume concat_channels(const ScalarVolume& a, const ScalarVolume& b,
                                   std::array<std::string, 2> names) {
  require_compatible(a.geometry(), b.geometry(), "concat_channels");
  return MultiChannelVolume({a, b}, {names[0], names[1]});
}

PreprocessedCase preprocess_case(const ScalarVolume& adc, const ScalarVolume& zadc,
                                 const BinaryMask& label, Dims3 target_dims) {
  require_compatible(adc.geometry(), zadc.geometry(), "preprocess_case adc/zadc");
  require_compatible(adc.geometry(), label.geometry(), "preprocess_case adc/label");
  ScalarVolume ch0 = znormalize(resample_trilinear(adc, target_dims));
  ScalarVolume ch1 = znormalize(resample_trilinear(zadc, target_dims));
  BinaryMask lab = resample_nearest(label, target_dims);
  return PreprocessedCase{concat_channels(ch0, ch1, {"adc", "zadc"}), std::move(lab)};
}

}  // namespace hieseg
