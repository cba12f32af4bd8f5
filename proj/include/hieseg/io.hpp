#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hieseg/metrics.hpp"
#include "hieseg/volume.hpp"

namespace hieseg {

// --- MetaImage (MHA) -------------------------------------------------------
//
// ASCII "Key = Value" header terminated by "ElementDataFile = LOCAL", then a
// little-endian voxel payload, zlib-deflated when CompressedData = True.

enum class MhaType { kUChar, kShort, kFloat, kDouble };

std::size_t mha_type_size(MhaType t);
std::string mha_type_name(MhaType t);

// Raw image: header fields plus the uncompressed payload bytes. This layer
// round-trips bit-exactly; the typed readers below sit on top of it.
struct MhaImage {
  Geometry geometry;
  MhaType type = MhaType::kFloat;
  std::array<double, 9> transform{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  std::vector<std::byte> payload;
};

MhaImage read_mha_image(const std::filesystem::path& path);
void write_mha_image(const MhaImage& img, const std::filesystem::path& path,
                     bool compressed);

// Typed read: eight-bit images whose values are only {0, 1} load as masks,
// everything else converts to a float volume.
std::variant<ScalarVolume, BinaryMask> read_mha(const std::filesystem::path& path);

ScalarVolume read_mha_volume(const std::filesystem::path& path);  // mask loads as 0/1 floats
BinaryMask read_mha_mask(const std::filesystem::path& path);      // non-binary data rejected

void write_mha(const ScalarVolume& v, const std::filesystem::path& path, bool compressed);
void write_mha(const BinaryMask& m, const std::filesystem::path& path, bool compressed);
// Doubles (probabilities, gradients, distance fields) keep full precision.
void write_mha_field(const Geometry& g, const std::vector<double>& values,
                     const std::filesystem::path& path, bool compressed);

// Validates the [0, 1] range; throws validation_error otherwise.
ProbVolume as_probabilities(const ScalarVolume& v);

// --- metric reports --------------------------------------------------------

struct ReportAggregate {
  std::size_t cases = 0;
  double dice = 0.0;
  double msd_mm = 0.0;  // +inf as soon as any case is +inf
  double nsd = 0.0;
  double finite_msd_mean = 0.0;  // mean over the finite cases only
  std::size_t finite_msd_count = 0;
};

ReportAggregate aggregate_reports(const std::vector<MetricReport>& cases);

// {"label", "tau_mm", "cases": [...], "aggregate": {...}}; infinities are
// encoded as the string "Infinity" since JSON has no literal for them.
nlohmann::json report_to_json(const std::vector<MetricReport>& cases,
                              const std::string& label, double tau_mm);

// Header "label,dice,msd_mm,nsd" plus one aggregate row, %.4f columns, "Inf"
// literal for infinities.
std::string report_csv(const std::vector<MetricReport>& cases, const std::string& label);

enum class ReportFormat { kJson, kCsv };

void emit_report(const std::vector<MetricReport>& cases, const std::string& label,
                 double tau_mm, ReportFormat format, const std::filesystem::path& path);

}  // namespace hieseg
