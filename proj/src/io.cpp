#include "hieseg/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string_view>

#include "hieseg/errors.hpp"

namespace hieseg {

namespace {

static_assert(std::endian::native == std::endian::little,
              "voxel payload I/O assumes a little-endian host");

std::string fmt_real(double v) {
  std::array<char, 32> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), static_cast<std::size_t>(ptr - buf.data()));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void bad_header(const std::string& what) {
  throw io_error("mha header: " + what);
}

double parse_real_token(const std::string& key, std::string_view tok) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    bad_header(key + ": bad number '" + std::string(tok) + "'");
  }
  return v;
}

long long parse_int_token(const std::string& key, std::string_view tok) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    bad_header(key + ": bad integer '" + std::string(tok) + "'");
  }
  return v;
}

std::vector<double> parse_reals(const std::string& key, std::string_view value,
                                std::size_t want) {
  auto toks = split_ws(value);
  if (toks.size() != want) {
    bad_header(key + ": expected " + std::to_string(want) + " values, got " +
               std::to_string(toks.size()));
  }
  std::vector<double> out;
  out.reserve(want);
  for (auto t : toks) out.push_back(parse_real_token(key, t));
  return out;
}

bool parse_bool(const std::string& key, std::string_view value) {
  if (value == "True") return true;
  if (value == "False") return false;
  bad_header(key + ": expected True or False, got '" + std::string(value) + "'");
}

MhaType element_type_from_name(std::string_view name) {
  if (name == "MET_UCHAR") return MhaType::kUChar;
  if (name == "MET_SHORT") return MhaType::kShort;
  if (name == "MET_FLOAT") return MhaType::kFloat;
  if (name == "MET_DOUBLE") return MhaType::kDouble;
  bad_header("ElementType: unsupported type '" + std::string(name) + "'");
}

const std::set<std::string, std::less<>>& known_keys() {
  static const std::set<std::string, std::less<>> keys = {
      "ObjectType",     "NDims",        "BinaryData",     "BinaryDataByteOrderMSB",
      "CompressedData", "CompressedDataSize", "TransformMatrix", "Offset",
      "CenterOfRotation", "ElementSpacing", "DimSize",    "ElementType",
      "ElementDataFile"};
  return keys;
}

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  std::vector<std::byte> bytes;
  in.seekg(0, std::ios::end);
  const auto end = in.tellg();
  if (end < 0) throw io_error("cannot read " + path.string());
  bytes.resize(static_cast<std::size_t>(end));
  in.seekg(0, std::ios::beg);
  in.read(reinterpret_cast<char*>(bytes.data()), end);
  if (!in) throw io_error("cannot read " + path.string());
  return bytes;
}

std::vector<std::byte> inflate_payload(const std::byte* data, std::size_t size,
                                       std::size_t expected) {
  std::vector<std::byte> out(expected);
  uLongf dest_len = static_cast<uLongf>(expected);
  const int rc = uncompress(reinterpret_cast<Bytef*>(out.data()), &dest_len,
                            reinterpret_cast<const Bytef*>(data),
                            static_cast<uLong>(size));
  if (rc != Z_OK) {
    throw io_error("mha payload: zlib inflate failed (truncated or corrupt stream)");
  }
  if (dest_len != expected) {
    throw io_error("mha payload: inflated to " + std::to_string(dest_len) +
                   " bytes, expected " + std::to_string(expected));
  }
  return out;
}

std::vector<std::byte> deflate_payload(const std::vector<std::byte>& data) {
  uLongf dest_len = compressBound(static_cast<uLong>(data.size()));
  std::vector<std::byte> out(dest_len);
  const int rc = compress2(reinterpret_cast<Bytef*>(out.data()), &dest_len,
                           reinterpret_cast<const Bytef*>(data.data()),
                           static_cast<uLong>(data.size()), Z_DEFAULT_COMPRESSION);
  if (rc != Z_OK) throw io_error("mha payload: zlib deflate failed");
  out.resize(dest_len);
  return out;
}

template <typename T>
std::vector<std::byte> to_bytes(std::span<const T> values) {
  std::vector<std::byte> out(values.size() * sizeof(T));
  std::memcpy(out.data(), values.data(), out.size());
  return out;
}

template <typename T, typename Out>
std::vector<Out> from_bytes(const std::vector<std::byte>& bytes) {
  std::vector<Out> out(bytes.size() / sizeof(T));
  for (std::size_t i = 0; i < out.size(); ++i) {
    T v;
    std::memcpy(&v, bytes.data() + i * sizeof(T), sizeof(T));
    out[i] = static_cast<Out>(v);
  }
  return out;
}

std::string csv_cell(double v) {
  if (std::isinf(v)) return "Inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

nlohmann::json number_or_infinity(double v) {
  if (std::isinf(v)) return "Infinity";
  return v;
}

}  // namespace

std::size_t mha_type_size(MhaType t) {
  switch (t) {
    case MhaType::kUChar: return 1;
    case MhaType::kShort: return 2;
    case MhaType::kFloat: return 4;
    case MhaType::kDouble: return 8;
  }
  throw validation_error("mha: bad element type");
}

std::string mha_type_name(MhaType t) {
  switch (t) {
    case MhaType::kUChar: return "MET_UCHAR";
    case MhaType::kShort: return "MET_SHORT";
    case MhaType::kFloat: return "MET_FLOAT";
    case MhaType::kDouble: return "MET_DOUBLE";
  }
  throw validation_error("mha: bad element type");
}

MhaImage read_mha_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());

  MhaImage img;
  std::map<std::string, std::string, std::less<>> fields;
  std::size_t pos = 0;
  bool saw_data_file = false;
  while (pos < text.size()) {
    const std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) bad_header("missing ElementDataFile line");
    const std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;

    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) bad_header("malformed line '" + std::string(trim(line)) + "'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!known_keys().contains(key)) bad_header("unknown key '" + key + "'");
    if (!fields.emplace(key, value).second) bad_header("duplicate key '" + key + "'");
    if (key == "ElementDataFile") {
      saw_data_file = true;
      break;
    }
  }
  if (!saw_data_file) bad_header("missing ElementDataFile line");

  for (const char* mandatory : {"ObjectType", "NDims", "DimSize", "ElementType"}) {
    if (!fields.contains(mandatory)) {
      bad_header(std::string("missing mandatory key '") + mandatory + "'");
    }
  }
  if (fields["ObjectType"] != "Image") {
    bad_header("ObjectType must be Image, got '" + fields["ObjectType"] + "'");
  }
  if (fields["NDims"] != "3") bad_header("NDims must be 3, got '" + fields["NDims"] + "'");
  if (fields["ElementDataFile"] != "LOCAL") {
    bad_header("ElementDataFile must be LOCAL (external data files are unsupported)");
  }
  if (auto it = fields.find("BinaryData"); it != fields.end() && !parse_bool(it->first, it->second)) {
    bad_header("BinaryData = False (ASCII payloads are unsupported)");
  }
  if (auto it = fields.find("BinaryDataByteOrderMSB");
      it != fields.end() && parse_bool(it->first, it->second)) {
    bad_header("big-endian payloads are unsupported");
  }

  const auto dim_toks = split_ws(fields["DimSize"]);
  if (dim_toks.size() != 3) bad_header("DimSize: expected 3 values");
  for (int a = 0; a < 3; ++a) {
    const long long d = parse_int_token("DimSize", dim_toks[a]);
    if (d < 1 || d > 100000) {
      bad_header("DimSize: axis " + std::to_string(a) + " out of range");
    }
    img.geometry.dims[a] = static_cast<int>(d);
  }
  if (auto it = fields.find("ElementSpacing"); it != fields.end()) {
    const auto v = parse_reals(it->first, it->second, 3);
    img.geometry.spacing = {v[0], v[1], v[2]};
  }
  if (auto it = fields.find("Offset"); it != fields.end()) {
    const auto v = parse_reals(it->first, it->second, 3);
    img.geometry.origin = {v[0], v[1], v[2]};
  }
  if (auto it = fields.find("TransformMatrix"); it != fields.end()) {
    const auto v = parse_reals(it->first, it->second, 9);
    std::copy(v.begin(), v.end(), img.transform.begin());
  }
  if (auto it = fields.find("CenterOfRotation"); it != fields.end()) {
    parse_reals(it->first, it->second, 3);  // accepted, not stored
  }
  img.geometry.validate();
  img.type = element_type_from_name(fields["ElementType"]);

  bool compressed = false;
  if (auto it = fields.find("CompressedData"); it != fields.end()) {
    compressed = parse_bool(it->first, it->second);
  }

  const std::size_t expected = img.geometry.voxel_count() * mha_type_size(img.type);
  const std::byte* payload = bytes.data() + pos;
  const std::size_t payload_size = bytes.size() - pos;
  if (compressed) {
    if (auto it = fields.find("CompressedDataSize"); it != fields.end()) {
      const long long declared = parse_int_token(it->first, it->second);
      if (declared < 0 || static_cast<std::size_t>(declared) != payload_size) {
        bad_header("CompressedDataSize does not match the payload (" +
                   std::to_string(payload_size) + " bytes present)");
      }
    }
    img.payload = inflate_payload(payload, payload_size, expected);
  } else {
    if (payload_size != expected) {
      throw io_error("mha payload: got " + std::to_string(payload_size) +
                     " bytes, expected " + std::to_string(expected));
    }
    img.payload.assign(payload, payload + payload_size);
  }
  return img;
}

void write_mha_image(const MhaImage& img, const std::filesystem::path& path,
                     bool compressed) {
  img.geometry.validate();
  const std::size_t expected = img.geometry.voxel_count() * mha_type_size(img.type);
  if (img.payload.size() != expected) {
    throw validation_error("mha write: payload is " + std::to_string(img.payload.size()) +
                           " bytes, geometry needs " + std::to_string(expected));
  }

  std::string header;
  header += "ObjectType = Image\n";
  header += "NDims = 3\n";
  header += "BinaryData = True\n";
  header += "BinaryDataByteOrderMSB = False\n";
  header += std::string("CompressedData = ") + (compressed ? "True" : "False") + "\n";
  header += "TransformMatrix =";
  for (double v : img.transform) header += " " + fmt_real(v);
  header += "\n";
  header += "Offset = " + fmt_real(img.geometry.origin[0]) + " " +
            fmt_real(img.geometry.origin[1]) + " " + fmt_real(img.geometry.origin[2]) + "\n";
  header += "CenterOfRotation = 0 0 0\n";
  header += "ElementSpacing = " + fmt_real(img.geometry.spacing[0]) + " " +
            fmt_real(img.geometry.spacing[1]) + " " + fmt_real(img.geometry.spacing[2]) + "\n";
  header += "DimSize = " + std::to_string(img.geometry.dims[0]) + " " +
            std::to_string(img.geometry.dims[1]) + " " +
            std::to_string(img.geometry.dims[2]) + "\n";
  header += "ElementType = " + mha_type_name(img.type) + "\n";
  header += "ElementDataFile = LOCAL\n";

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  if (compressed) {
    const auto deflated = deflate_payload(img.payload);
    out.write(reinterpret_cast<const char*>(deflated.data()),
              static_cast<std::streamsize>(deflated.size()));
  } else {
    out.write(reinterpret_cast<const char*>(img.payload.data()),
              static_cast<std::streamsize>(img.payload.size()));
  }
  if (!out) throw io_error("write to " + path.string() + " failed");
}

std::variant<ScalarVolume, BinaryMask> read_mha(const std::filesystem::path& path) {
  const MhaImage img = read_mha_image(path);
  switch (img.type) {
    case MhaType::kUChar: {
      auto raw = from_bytes<std::uint8_t, std::uint8_t>(img.payload);
      const bool binary = std::all_of(raw.begin(), raw.end(),
                                      [](std::uint8_t v) { return v <= 1; });
      if (binary) return BinaryMask(img.geometry, std::move(raw));
      std::vector<float> data(raw.begin(), raw.end());
      return ScalarVolume(img.geometry, std::move(data));
    }
    case MhaType::kShort:
      return ScalarVolume(img.geometry, from_bytes<std::int16_t, float>(img.payload));
    case MhaType::kFloat:
      return ScalarVolume(img.geometry, from_bytes<float, float>(img.payload));
    case MhaType::kDouble:
      return ScalarVolume(img.geometry, from_bytes<double, float>(img.payload));
  }
  throw io_error("mha: bad element type");
}

ScalarVolume read_mha_volume(const std::filesystem::path& path) {
  auto loaded = read_mha(path);
  if (auto* v = std::get_if<ScalarVolume>(&loaded)) return std::move(*v);
  const auto& mask = std::get<BinaryMask>(loaded);
  std::vector<float> data(mask.values().begin(), mask.values().end());
  return ScalarVolume(mask.geometry(), std::move(data));
}

BinaryMask read_mha_mask(const std::filesystem::path& path) {
  auto loaded = read_mha(path);
  if (auto* m = std::get_if<BinaryMask>(&loaded)) return std::move(*m);
  throw validation_error(path.string() + ": expected a binary mask, found values outside {0, 1}");
}

void write_mha(const ScalarVolume& v, const std::filesystem::path& path, bool compressed) {
  write_mha_image({v.geometry(), MhaType::kFloat, {1, 0, 0, 0, 1, 0, 0, 0, 1},
                   to_bytes(v.values())},
                  path, compressed);
}

void write_mha(const BinaryMask& m, const std::filesystem::path& path, bool compressed) {
  write_mha_image({m.geometry(), MhaType::kUChar, {1, 0, 0, 0, 1, 0, 0, 0, 1},
                   to_bytes(m.values())},
                  path, compressed);
}

void write_mha_field(const Geometry& g, const std::vector<double>& values,
                     const std::filesystem::path& path, bool compressed) {
  if (values.size() != g.voxel_count()) {
    throw validation_error("mha write: field has " + std::to_string(values.size()) +
                           " values, geometry needs " + std::to_string(g.voxel_count()));
  }
  write_mha_image({g, MhaType::kDouble, {1, 0, 0, 0, 1, 0, 0, 0, 1},
                   to_bytes(std::span<const double>(values))},
                  path, compressed);
}

ProbVolume as_probabilities(const ScalarVolume& v) {
  std::vector<double> data(v.size());
  const auto vals = v.values();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double p = vals[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw validation_error("probability volume: value " + std::to_string(p) +
                             " outside [0, 1]");
    }
    data[i] = p;
  }
  return ProbVolume(v.geometry(), std::move(data));
}

ReportAggregate aggregate_reports(const std::vector<MetricReport>& cases) {
  if (cases.empty()) throw validation_error("report: no cases to aggregate");
  ReportAggregate agg;
  agg.cases = cases.size();
  double msd_sum = 0.0;
  bool any_inf = false;
  for (const auto& c : cases) {
    agg.dice += c.dice;
    agg.nsd += c.nsd;
    if (std::isinf(c.msd_mm)) {
      any_inf = true;
    } else {
      agg.finite_msd_mean += c.msd_mm;
      ++agg.finite_msd_count;
    }
    msd_sum += c.msd_mm;
  }
  const double n = static_cast<double>(agg.cases);
  agg.dice /= n;
  agg.nsd /= n;
  agg.msd_mm = any_inf ? std::numeric_limits<double>::infinity() : msd_sum / n;
  if (agg.finite_msd_count > 0) {
    agg.finite_msd_mean /= static_cast<double>(agg.finite_msd_count);
  }
  return agg;
}

nlohmann::json report_to_json(const std::vector<MetricReport>& cases,
                              const std::string& label, double tau_mm) {
  const ReportAggregate agg = aggregate_reports(cases);
  nlohmann::json case_array = nlohmann::json::array();
  for (const auto& c : cases) {
    case_array.push_back({{"case_id", c.case_id},
                          {"dice", c.dice},
                          {"msd_mm", number_or_infinity(c.msd_mm)},
                          {"nsd", c.nsd}});
  }
  nlohmann::json aggregate = {
      {"cases", agg.cases},
      {"dice", agg.dice},
      {"msd_mm", number_or_infinity(agg.msd_mm)},
      {"nsd", agg.nsd},
      {"msd_mm_finite_count", agg.finite_msd_count},
  };
  aggregate["msd_mm_finite_mean"] =
      agg.finite_msd_count > 0 ? nlohmann::json(agg.finite_msd_mean) : nlohmann::json(nullptr);
  return {{"label", label},
          {"tau_mm", tau_mm},
          {"cases", case_array},
          {"aggregate", aggregate}};
}

std::string report_csv(const std::vector<MetricReport>& cases, const std::string& label) {
  const ReportAggregate agg = aggregate_reports(cases);
  std::string out = "label,dice,msd_mm,nsd\n";
  out += label + "," + csv_cell(agg.dice) + "," + csv_cell(agg.msd_mm) + "," +
         csv_cell(agg.nsd) + "\n";
  return out;
}

void emit_report(const std::vector<MetricReport>& cases, const std::string& label,
                 double tau_mm, ReportFormat format, const std::filesystem::path& path) {
  std::string text;
  if (format == ReportFormat::kJson) {
    text = report_to_json(cases, label, tau_mm).dump(2) + "\n";
  } else {
    text = report_csv(cases, label);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw io_error("write to " + path.string() + " failed");
}

}  // namespace hieseg
