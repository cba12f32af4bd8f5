#include "hieseg/edt.hpp"

#include <cmath>
#include <limits>

namespace hieseg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One lower-envelope pass over a line of squared distances sampled at step
// `sp` mm (Felzenszwalb-Huttenlocher parabolas). Sites with f = +inf never
// carry the minimum, so the envelope is built over finite sites only; an
// all-inf line stays all-inf.
void envelope_line(const std::vector<double>& f, double sp, int n,
                   std::vector<int>& v, std::vector<double>& z,
                   std::vector<double>& out) {
  int first = 0;
  while (first < n && !std::isfinite(f[first])) ++first;
  if (first == n) {
    for (int i = 0; i < n; ++i) out[i] = kInf;
    return;
  }

  auto sq = [](double a) { return a * a; };
  auto crossing = [&](int i, int j) {
    return ((f[i] + sq(i * sp)) - (f[j] + sq(j * sp))) / (2.0 * sp * (i - j));
  };

  int k = 0;
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  for (int i = first + 1; i < n; ++i) {
    if (!std::isfinite(f[i])) continue;
    double s = crossing(i, v[k]);
    while (s <= z[k]) {
      --k;
      s = crossing(i, v[k]);
    }
    ++k;
    v[k] = i;
    z[k] = s;
    z[k + 1] = kInf;
  }

  k = 0;
  for (int i = 0; i < n; ++i) {
    const double q = i * sp;
    while (z[k + 1] < q) ++k;
    out[i] = sq((i - v[k]) * sp) + f[v[k]];
  }
}

// Squared-distance transform, one separable pass per axis.
std::vector<double> squared_edt(const BinaryMask& mask) {
  const Geometry& g = mask.geometry();
  const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
  const std::size_t total = g.voxel_count();

  std::vector<double> dist(total);
  auto src = mask.values();
  for (std::size_t i = 0; i < total; ++i) dist[i] = src[i] ? 0.0 : kInf;

  const int max_n = std::max({nx, ny, nz});
  std::vector<double> line(max_n), out(max_n), z(max_n + 1);
  std::vector<int> v(max_n);

  // x lines
  for (int zc = 0; zc < nz; ++zc) {
    for (int yc = 0; yc < ny; ++yc) {
      const std::size_t base = g.index(0, yc, zc);
      for (int x = 0; x < nx; ++x) line[x] = dist[base + x];
      envelope_line(line, g.spacing[0], nx, v, z, out);
      for (int x = 0; x < nx; ++x) dist[base + x] = out[x];
    }
  }
  // y lines
  const std::size_t sy = static_cast<std::size_t>(nx);
  for (int zc = 0; zc < nz; ++zc) {
    for (int x = 0; x < nx; ++x) {
      const std::size_t base = g.index(x, 0, zc);
      for (int y = 0; y < ny; ++y) line[y] = dist[base + y * sy];
      envelope_line(line, g.spacing[1], ny, v, z, out);
      for (int y = 0; y < ny; ++y) dist[base + y * sy] = out[y];
    }
  }
  // z lines
  const std::size_t sz = static_cast<std::size_t>(nx) * ny;
  for (int yc = 0; yc < ny; ++yc) {
    for (int x = 0; x < nx; ++x) {
      const std::size_t base = g.index(x, yc, 0);
      for (int zc = 0; zc < nz; ++zc) line[zc] = dist[base + zc * sz];
      envelope_line(line, g.spacing[2], nz, v, z, out);
      for (int zc = 0; zc < nz; ++zc) dist[base + zc * sz] = out[zc];
    }
  }
  return dist;
}

}  // namespace

DistanceField edt(const BinaryMask& mask) {
  std::vector<double> dist = squared_edt(mask);
  for (double& d : dist) d = std::sqrt(d);
  return DistanceField{mask.geometry(), std::move(dist)};
}

SignedDistanceField signed_edt(const BinaryMask& mask) {
  const DistanceField outside = edt(mask);
  const DistanceField inside = edt(complement(mask));
  auto fg = mask.values();
  std::vector<double> data(fg.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = fg[i] ? -inside.data[i] : outside.data[i];
  }
  return SignedDistanceField{mask.geometry(), std::move(data)};
}

}  // namespace hieseg
