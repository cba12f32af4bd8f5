#include "hieseg/volume.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace hieseg {

namespace {

constexpr double kGeomTolMm = 1e-6;

std::string axis_name(int i) { return std::string(1, "xyz"[i]); }

}  // namespace

double Geometry::diameter_mm() const {
  double sq = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double extent = (dims[i] - 1) * spacing[i];
    sq += extent * extent;
  }
  return std::sqrt(sq);
}

bool Geometry::compatible(const Geometry& other) const {
  for (int i = 0; i < 3; ++i) {
    if (dims[i] != other.dims[i]) return false;
    if (std::abs(spacing[i] - other.spacing[i]) > kGeomTolMm) return false;
    if (std::abs(origin[i] - other.origin[i]) > kGeomTolMm) return false;
  }
  return true;
}

void Geometry::validate() const {
  for (int i = 0; i < 3; ++i) {
    if (dims[i] < 1) {
      throw validation_error("geometry: dims." + axis_name(i) + " must be >= 1, got " +
                             std::to_string(dims[i]));
    }
    if (!(spacing[i] > 0.0) || !std::isfinite(spacing[i])) {
      throw validation_error("geometry: spacing." + axis_name(i) +
                             " must be a positive finite real, got " +
                             std::to_string(spacing[i]));
    }
    if (!std::isfinite(origin[i])) {
      throw validation_error("geometry: origin." + axis_name(i) + " must be finite");
    }
  }
}

void require_compatible(const Geometry& a, const Geometry& b, const std::string& what) {
  if (a.compatible(b)) return;
  std::ostringstream msg;
  msg << what << ": incompatible geometries";
  for (int i = 0; i < 3; ++i) {
    if (a.dims[i] != b.dims[i]) {
      msg << "; dims." << axis_name(i) << " " << a.dims[i] << " vs " << b.dims[i];
    }
    if (std::abs(a.spacing[i] - b.spacing[i]) > kGeomTolMm) {
      msg << "; spacing." << axis_name(i) << " " << a.spacing[i] << " vs " << b.spacing[i];
    }
    if (std::abs(a.origin[i] - b.origin[i]) > kGeomTolMm) {
      msg << "; origin." << axis_name(i) << " " << a.origin[i] << " vs " << b.origin[i];
    }
  }
  throw geometry_error(msg.str());
}

ScalarVolume::ScalarVolume(Geometry geometry, std::vector<float> data)
    : geometry_(geometry), data_(std::move(data)) {
  geometry_.validate();
  if (data_.size() != geometry_.voxel_count()) {
    throw validation_error("scalar volume: data length " + std::to_string(data_.size()) +
                           " does not match voxel count " +
                           std::to_string(geometry_.voxel_count()));
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw validation_error("scalar volume: non-finite value");
  }
}

BinaryMask::BinaryMask(Geometry geometry, std::vector<std::uint8_t> data)
    : geometry_(geometry), data_(std::move(data)) {
  geometry_.validate();
  if (data_.size() != geometry_.voxel_count()) {
    throw validation_error("binary mask: data length " + std::to_string(data_.size()) +
                           " does not match voxel count " +
                           std::to_string(geometry_.voxel_count()));
  }
  for (std::uint8_t v : data_) {
    if (v > 1) throw validation_error("binary mask: value " + std::to_string(v) + " not in {0,1}");
  }
}

ProbVolume::ProbVolume(Geometry geometry, std::vector<double> data)
    : geometry_(geometry), data_(std::move(data)) {
  geometry_.validate();
  if (data_.size() != geometry_.voxel_count()) {
    throw validation_error("probability volume: data length " + std::to_string(data_.size()) +
                           " does not match voxel count " +
                           std::to_string(geometry_.voxel_count()));
  }
  for (double v : data_) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw validation_error("probability volume: value " + std::to_string(v) +
                             " not in [0,1]");
    }
  }
}

MultiChannelVolume::MultiChannelVolume(std::vector<ScalarVolume> channels,
                                       std::vector<std::string> names)
    : channels_(std::move(channels)), names_(std::move(names)) {
  if (channels_.empty()) throw validation_error("multi-channel volume: needs >= 1 channel");
  if (names_.size() != channels_.size()) {
    throw validation_error("multi-channel volume: " + std::to_string(names_.size()) +
                           " names for " + std::to_string(channels_.size()) + " channels");
  }
  for (std::size_t c = 1; c < channels_.size(); ++c) {
    require_compatible(channels_[0].geometry(), channels_[c].geometry(),
                       "multi-channel volume channel " + std::to_string(c));
  }
}

ScalarVolume make_volume(Dims3 dims, Vec3 spacing, Vec3 origin, float fill) {
  Geometry g{dims, spacing, origin};
  g.validate();
  if (!std::isfinite(fill)) throw validation_error("make_volume: fill must be finite");
  return ScalarVolume(g, std::vector<float>(g.voxel_count(), fill));
}

double voxel_volume_mm3(const Geometry& g) {
  return g.spacing[0] * g.spacing[1] * g.spacing[2];
}

std::size_t foreground_count(const BinaryMask& m) {
  std::size_t n = 0;
  for (std::uint8_t v : m.values()) n += v;
  return n;
}

BinaryMask complement(const BinaryMask& m) {
  std::vector<std::uint8_t> data(m.size());
  auto src = m.values();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = src[i] ? 0 : 1;
  return BinaryMask(m.geometry(), std::move(data));
}

BinaryMask binarize(const ProbVolume& p, double threshold) {
  std::vector<std::uint8_t> data(p.size());
  auto src = p.values();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = src[i] > threshold ? 1 : 0;
  return BinaryMask(p.geometry(), std::move(data));
}

}  // namespace hieseg
