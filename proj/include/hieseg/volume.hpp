#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hieseg/errors.hpp"

namespace hieseg {

using Dims3 = std::array<int, 3>;
using Vec3 = std::array<double, 3>;

// Voxel grid with physical geometry. Linear data layout is x-fastest:
// index(x,y,z) = x + nx*(y + ny*z), matching MetaImage raw ordering.
struct Geometry {
  Dims3 dims{1, 1, 1};           // voxel counts, all >= 1
  Vec3 spacing{1.0, 1.0, 1.0};   // mm per voxel, all > 0
  Vec3 origin{0.0, 0.0, 0.0};    // mm, center of voxel (0,0,0)

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims[0]) *
               (static_cast<std::size_t>(y) +
                static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(z));
  }
  // Physical position of a voxel center in mm.
  Vec3 position(int x, int y, int z) const {
    return {origin[0] + x * spacing[0], origin[1] + y * spacing[1],
            origin[2] + z * spacing[2]};
  }
  // Largest possible distance between two voxel centers, in mm.
  double diameter_mm() const;

  // Grids are compatible when dims match exactly and spacing/origin agree
  // within 1e-6 mm.
  bool compatible(const Geometry& other) const;
  void validate() const;  // throws validation_error naming the offending field
};

// Throws geometry_error if the two grids are not compatible; `what` names the
// operation for the message.
void require_compatible(const Geometry& a, const Geometry& b, const std::string& what);

// 3D grid of real intensities (ADC/ZADC maps). Immutable after construction.
class ScalarVolume {
 public:
  ScalarVolume(Geometry geometry, std::vector<float> data);

  const Geometry& geometry() const { return geometry_; }
  std::span<const float> values() const { return data_; }
  float at(int x, int y, int z) const { return data_[geometry_.index(x, y, z)]; }
  std::size_t size() const { return data_.size(); }

 private:
  Geometry geometry_;
  std::vector<float> data_;
};

// 3D grid of {0,1} labels.
class BinaryMask {
 public:
  BinaryMask(Geometry geometry, std::vector<std::uint8_t> data);

  const Geometry& geometry() const { return geometry_; }
  std::span<const std::uint8_t> values() const { return data_; }
  std::uint8_t at(int x, int y, int z) const { return data_[geometry_.index(x, y, z)]; }
  std::size_t size() const { return data_.size(); }

 private:
  Geometry geometry_;
  std::vector<std::uint8_t> data_;
};

// 3D grid of probabilities in [0,1]. Stored in double: predictions feed loss
// and gradient evaluation, which accumulates in 64-bit.
class ProbVolume {
 public:
  ProbVolume(Geometry geometry, std::vector<double> data);

  const Geometry& geometry() const { return geometry_; }
  std::span<const double> values() const { return data_; }
  double at(int x, int y, int z) const { return data_[geometry_.index(x, y, z)]; }
  std::size_t size() const { return data_.size(); }

 private:
  Geometry geometry_;
  std::vector<double> data_;
};

// Ordered list of channels over one shared grid (e.g. ADC + ZADC).
class MultiChannelVolume {
 public:
  MultiChannelVolume(std::vector<ScalarVolume> channels, std::vector<std::string> names);

  const Geometry& geometry() const { return channels_.front().geometry(); }
  const std::vector<ScalarVolume>& channels() const { return channels_; }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t channel_count() const { return channels_.size(); }

 private:
  std::vector<ScalarVolume> channels_;
  std::vector<std::string> names_;
};

ScalarVolume make_volume(Dims3 dims, Vec3 spacing, Vec3 origin, float fill);

double voxel_volume_mm3(const Geometry& g);

std::size_t foreground_count(const BinaryMask& m);

BinaryMask complement(const BinaryMask& m);

// Foreground where p > threshold.
BinaryMask binarize(const ProbVolume& p, double threshold);

}  // namespace hieseg
