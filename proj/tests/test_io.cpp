#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "hieseg/errors.hpp"
#include "hieseg/io.hpp"

using namespace hieseg;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "hieseg_io_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  REQUIRE(out.good());
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void append_text(std::vector<std::uint8_t>& bytes, const std::string& text) {
  bytes.insert(bytes.end(), text.begin(), text.end());
}

// 2x2x2 MET_FLOAT file with hand-spelled IEEE-754 little-endian bytes.
const std::string kFloatHeader =
    "ObjectType = Image\n"
    "NDims = 3\n"
    "BinaryData = True\n"
    "BinaryDataByteOrderMSB = False\n"
    "CompressedData = False\n"
    "TransformMatrix = 1 0 0 0 1 0 0 0 1\n"
    "Offset = 1 2 3\n"
    "ElementSpacing = 0.5 0.5 2\n"
    "DimSize = 2 2 2\n"
    "ElementType = MET_FLOAT\n"
    "ElementDataFile = LOCAL\n";

const std::vector<std::uint8_t> kFloatPayload = {
    0x00, 0x00, 0x00, 0x00,  //  0.0
    0x00, 0x00, 0x80, 0x3F,  //  1.0
    0x00, 0x00, 0xC0, 0x3F,  //  1.5
    0x00, 0x00, 0x00, 0xC0,  // -2.0
    0x00, 0x00, 0x00, 0x3F,  //  0.5
    0x00, 0x00, 0x00, 0x40,  //  2.0
    0x00, 0x00, 0x80, 0xBE,  // -0.25
    0x00, 0x00, 0xC8, 0x42,  //  100.0
};

std::filesystem::path write_float_fixture(const std::string& name) {
  std::vector<std::uint8_t> bytes;
  append_text(bytes, kFloatHeader);
  bytes.insert(bytes.end(), kFloatPayload.begin(), kFloatPayload.end());
  const auto path = temp_file(name);
  write_bytes(path, bytes);
  return path;
}

std::filesystem::path write_header_with(const std::string& name, const std::string& header,
                                        const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> bytes;
  append_text(bytes, header);
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  const auto path = temp_file(name);
  write_bytes(path, bytes);
  return path;
}

std::string minimal_uchar_header(int nx, int ny, int nz, bool compressed = false) {
  return "ObjectType = Image\n"
         "NDims = 3\n"
         "CompressedData = " + std::string(compressed ? "True" : "False") + "\n"
         "DimSize = " + std::to_string(nx) + " " + std::to_string(ny) + " " +
         std::to_string(nz) + "\n"
         "ElementType = MET_UCHAR\n"
         "ElementDataFile = LOCAL\n";
}

std::vector<std::uint8_t> zlib_deflate(const std::vector<std::uint8_t>& data) {
  uLongf len = compressBound(static_cast<uLong>(data.size()));
  std::vector<std::uint8_t> out(len);
  REQUIRE(compress2(out.data(), &len, data.data(), static_cast<uLong>(data.size()),
                    Z_DEFAULT_COMPRESSION) == Z_OK);
  out.resize(len);
  return out;
}

double json_number(const nlohmann::json& j) {
  if (j.is_string()) {
    REQUIRE(j.get<std::string>() == "Infinity");
    return kInf;
  }
  return j.get<double>();
}

MetricReport make_report(std::string id, double dice, double msd, double nsd) {
  MetricReport r;
  r.case_id = std::move(id);
  r.dice = dice;
  r.msd_mm = msd;
  r.nsd = nsd;
  return r;
}

}  // namespace

TEST_CASE("hand-authored float file loads with exact values and geometry") {
  const auto path = write_float_fixture("fixture_float.mha");
  auto loaded = read_mha(path);
  REQUIRE(std::holds_alternative<ScalarVolume>(loaded));
  const auto& v = std::get<ScalarVolume>(loaded);

  CHECK(v.geometry().dims == Dims3{2, 2, 2});
  CHECK(v.geometry().spacing == Vec3{0.5, 0.5, 2.0});
  CHECK(v.geometry().origin == Vec3{1.0, 2.0, 3.0});

  CHECK(v.at(0, 0, 0) == 0.0f);
  CHECK(v.at(1, 0, 0) == 1.0f);
  CHECK(v.at(0, 1, 0) == 1.5f);
  CHECK(v.at(1, 1, 0) == -2.0f);
  CHECK(v.at(0, 0, 1) == 0.5f);
  CHECK(v.at(1, 0, 1) == 2.0f);
  CHECK(v.at(0, 1, 1) == -0.25f);
  CHECK(v.at(1, 1, 1) == 100.0f);
}

TEST_CASE("hand-authored short file loads as floats with exact integer values") {
  const std::string header =
      "ObjectType = Image\n"
      "NDims = 3\n"
      "DimSize = 2 1 2\n"
      "ElementSpacing = 1 1 1\n"
      "ElementType = MET_SHORT\n"
      "ElementDataFile = LOCAL\n";
  const std::vector<std::uint8_t> payload = {
      0xFF, 0xFF,  // -1
      0x00, 0x00,  //  0
      0x2C, 0x01,  //  300
      0x00, 0x80,  // -32768
  };
  const auto path = write_header_with("fixture_short.mha", header, payload);
  auto loaded = read_mha(path);
  REQUIRE(std::holds_alternative<ScalarVolume>(loaded));
  const auto& v = std::get<ScalarVolume>(loaded);
  CHECK(v.at(0, 0, 0) == -1.0f);
  CHECK(v.at(1, 0, 0) == 0.0f);
  CHECK(v.at(0, 0, 1) == 300.0f);
  CHECK(v.at(1, 0, 1) == -32768.0f);
}

TEST_CASE("uchar {0,1} data loads as a mask, other uchar data as a volume") {
  const auto mask_path = write_header_with("fixture_mask.mha", minimal_uchar_header(2, 2, 1),
                                           {0, 1, 1, 0});
  auto loaded = read_mha(mask_path);
  REQUIRE(std::holds_alternative<BinaryMask>(loaded));
  const auto& m = std::get<BinaryMask>(loaded);
  CHECK(m.at(0, 0, 0) == 0);
  CHECK(m.at(1, 0, 0) == 1);
  CHECK(m.at(0, 1, 0) == 1);
  CHECK(m.at(1, 1, 0) == 0);
  // Spacing defaults to 1mm when the header omits it.
  CHECK(m.geometry().spacing == Vec3{1.0, 1.0, 1.0});

  const auto gray_path = write_header_with("fixture_gray.mha", minimal_uchar_header(2, 2, 1),
                                           {0, 1, 3, 0});
  auto gray = read_mha(gray_path);
  REQUIRE(std::holds_alternative<ScalarVolume>(gray));
  CHECK(std::get<ScalarVolume>(gray).at(0, 1, 0) == 3.0f);

  CHECK_NOTHROW(read_mha_mask(mask_path));
  CHECK_THROWS_AS(read_mha_mask(gray_path), validation_error);
  CHECK_THROWS_AS(read_mha_mask(write_float_fixture("fixture_float2.mha")), validation_error);

  // read_mha_volume widens a mask to 0/1 floats.
  const auto widened = read_mha_volume(mask_path);
  CHECK(widened.at(1, 0, 0) == 1.0f);
  CHECK(widened.at(0, 0, 0) == 0.0f);
}

TEST_CASE("compressed payload built with raw zlib loads with exact values") {
  const std::vector<std::uint8_t> raw = {1, 0, 1, 1, 0, 0, 1, 0};
  const auto deflated = zlib_deflate(raw);
  const auto path = write_header_with("fixture_compressed.mha",
                                      minimal_uchar_header(2, 2, 2, true), deflated);
  auto loaded = read_mha(path);
  REQUIRE(std::holds_alternative<BinaryMask>(loaded));
  const auto& m = std::get<BinaryMask>(loaded);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    CAPTURE(i);
    CHECK(m.values()[i] == raw[i]);
  }
}

TEST_CASE("declared compressed size is validated against the payload") {
  const std::vector<std::uint8_t> raw = {1, 0, 1, 0};
  const auto deflated = zlib_deflate(raw);

  std::string good =
      "ObjectType = Image\n"
      "NDims = 3\n"
      "CompressedData = True\n"
      "CompressedDataSize = " + std::to_string(deflated.size()) + "\n"
      "DimSize = 2 2 1\n"
      "ElementType = MET_UCHAR\n"
      "ElementDataFile = LOCAL\n";
  CHECK_NOTHROW(read_mha(write_header_with("fixture_csize_ok.mha", good, deflated)));

  std::string bad =
      "ObjectType = Image\n"
      "NDims = 3\n"
      "CompressedData = True\n"
      "CompressedDataSize = " + std::to_string(deflated.size() + 4) + "\n"
      "DimSize = 2 2 1\n"
      "ElementType = MET_UCHAR\n"
      "ElementDataFile = LOCAL\n";
  CHECK_THROWS_AS(read_mha(write_header_with("fixture_csize_bad.mha", bad, deflated)),
                  io_error);
}

TEST_CASE("payload size problems are reported") {
  // Truncated: one byte missing from the float payload.
  std::vector<std::uint8_t> bytes;
  append_text(bytes, kFloatHeader);
  bytes.insert(bytes.end(), kFloatPayload.begin(), kFloatPayload.end() - 1);
  const auto truncated = temp_file("fixture_truncated.mha");
  write_bytes(truncated, bytes);
  CHECK_THROWS_AS(read_mha(truncated), io_error);

  // One trailing byte too many.
  bytes.push_back(0x00);
  bytes.push_back(0x00);
  const auto oversized = temp_file("fixture_oversized.mha");
  write_bytes(oversized, bytes);
  CHECK_THROWS_AS(read_mha(oversized), io_error);

  // Truncated zlib stream.
  const auto deflated = zlib_deflate({1, 0, 1, 0});
  std::vector<std::uint8_t> cut(deflated.begin(), deflated.end() - 3);
  CHECK_THROWS_AS(read_mha(write_header_with("fixture_zcut.mha",
                                             minimal_uchar_header(2, 2, 1, true), cut)),
                  io_error);
}

TEST_CASE("malformed headers are rejected") {
  const std::vector<std::uint8_t> payload = {0, 1};

  auto expect_bad = [&](const std::string& name, const std::string& header) {
    CAPTURE(header);
    CHECK_THROWS_AS(read_mha(write_header_with(name, header, payload)), io_error);
  };

  expect_bad("bad_unknown.mha",
             "ObjectType = Image\nNDims = 3\nModality = CT\nDimSize = 2 1 1\n"
             "ElementType = MET_UCHAR\nElementDataFile = LOCAL\n");
  expect_bad("bad_missing_dims.mha",
             "ObjectType = Image\nNDims = 3\nElementType = MET_UCHAR\n"
             "ElementDataFile = LOCAL\n");
  expect_bad("bad_missing_type.mha",
             "ObjectType = Image\nNDims = 3\nDimSize = 2 1 1\nElementDataFile = LOCAL\n");
  expect_bad("bad_ndims.mha",
             "ObjectType = Image\nNDims = 2\nDimSize = 2 1 1\n"
             "ElementType = MET_UCHAR\nElementDataFile = LOCAL\n");
  expect_bad("bad_objecttype.mha",
             "ObjectType = Segmentation\nNDims = 3\nDimSize = 2 1 1\n"
             "ElementType = MET_UCHAR\nElementDataFile = LOCAL\n");
  expect_bad("bad_external.mha",
             "ObjectType = Image\nNDims = 3\nDimSize = 2 1 1\n"
             "ElementType = MET_UCHAR\nElementDataFile = data.raw\n");
  expect_bad("bad_bigendian.mha",
             "ObjectType = Image\nNDims = 3\nBinaryDataByteOrderMSB = True\n"
             "DimSize = 2 1 1\nElementType = MET_UCHAR\nElementDataFile = LOCAL\n");
  expect_bad("bad_ascii.mha",
             "ObjectType = Image\nNDims = 3\nBinaryData = False\nDimSize = 2 1 1\n"
             "ElementType = MET_UCHAR\nElementDataFile = LOCAL\n");
  expect_bad("bad_element.mha",
             "ObjectType = Image\nNDims = 3\nDimSize = 2 1 1\n"
             "ElementType = MET_INT\nElementDataFile = LOCAL\n");
  expect_bad("bad_spacing.mha",
             "ObjectType = Image\nNDims = 3\nDimSize = 2 1 1\nElementSpacing = 1 x 1\n"
             "ElementType = MET_UCHAR\nElementDataFile = LOCAL\n");
  expect_bad("bad_spacing_count.mha",
             "ObjectType = Image\nNDims = 3\nDimSize = 2 1 1\nElementSpacing = 1 1\n"
             "ElementType = MET_UCHAR\nElementDataFile = LOCAL\n");
  expect_bad("bad_duplicate.mha",
             "ObjectType = Image\nNDims = 3\nDimSize = 2 1 1\nDimSize = 2 1 1\n"
             "ElementType = MET_UCHAR\nElementDataFile = LOCAL\n");
  expect_bad("bad_bool.mha",
             "ObjectType = Image\nNDims = 3\nCompressedData = maybe\nDimSize = 2 1 1\n"
             "ElementType = MET_UCHAR\nElementDataFile = LOCAL\n");
  expect_bad("bad_noequals.mha",
             "ObjectType = Image\nNDims\nDimSize = 2 1 1\n"
             "ElementType = MET_UCHAR\nElementDataFile = LOCAL\n");
  expect_bad("bad_dim_zero.mha",
             "ObjectType = Image\nNDims = 3\nDimSize = 0 1 1\n"
             "ElementType = MET_UCHAR\nElementDataFile = LOCAL\n");

  // Header never terminates.
  const auto headless = temp_file("bad_headless.mha");
  write_bytes(headless, {'O', 'b', 'j'});
  CHECK_THROWS_AS(read_mha(headless), io_error);

  // Negative spacing trips geometry validation.
  CHECK_THROWS_AS(read_mha(write_header_with(
                      "bad_negspacing.mha",
                      "ObjectType = Image\nNDims = 3\nDimSize = 2 1 1\n"
                      "ElementSpacing = 1 -1 1\nElementType = MET_UCHAR\n"
                      "ElementDataFile = LOCAL\n",
                      payload)),
                  validation_error);

  CHECK_THROWS_AS(read_mha(temp_file("does_not_exist.mha")), io_error);
}

TEST_CASE("raw image round-trip preserves header fields and payload bits") {
  std::mt19937_64 rng(77);
  for (MhaType type : {MhaType::kUChar, MhaType::kShort, MhaType::kFloat, MhaType::kDouble}) {
    CAPTURE(mha_type_name(type));
    MhaImage img;
    img.geometry = {{5, 3, 4}, {0.8, 0.8, 3.0}, {-12.5, 4.0, 0.25}};
    img.type = type;
    img.payload.resize(img.geometry.voxel_count() * mha_type_size(type));
    for (auto& b : img.payload) {
      // Bounded values keep float/double payload bytes away from NaN patterns.
      b = static_cast<std::byte>(rng() % 0x40);
    }

    const auto path = temp_file("roundtrip_" + mha_type_name(type) + ".mha");
    write_mha_image(img, path, false);
    const MhaImage back = read_mha_image(path);
    CHECK(back.geometry.dims == img.geometry.dims);
    CHECK(back.geometry.spacing == img.geometry.spacing);
    CHECK(back.geometry.origin == img.geometry.origin);
    CHECK(back.type == img.type);
    CHECK(back.transform == img.transform);
    CHECK(back.payload == img.payload);

    // Writing the same image twice gives identical files.
    const auto path2 = temp_file("roundtrip2_" + mha_type_name(type) + ".mha");
    write_mha_image(img, path2, false);
    CHECK(read_bytes(path) == read_bytes(path2));

    // Compressed round-trip restores the same payload bytes.
    const auto zpath = temp_file("roundtrip_z_" + mha_type_name(type) + ".mha");
    write_mha_image(img, zpath, true);
    const MhaImage zback = read_mha_image(zpath);
    CHECK(zback.payload == img.payload);
  }

  // Compression only pays off beyond the zlib stream overhead, so check the
  // size win on a large redundant payload.
  MhaImage flat;
  flat.geometry = {{32, 32, 8}, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0}};
  flat.type = MhaType::kFloat;
  flat.payload.assign(flat.geometry.voxel_count() * 4, std::byte{0x20});
  const auto raw_path = temp_file("flat_raw.mha");
  const auto z_path = temp_file("flat_z.mha");
  write_mha_image(flat, raw_path, false);
  write_mha_image(flat, z_path, true);
  CHECK(read_bytes(z_path).size() * 10 < read_bytes(raw_path).size());
  CHECK(read_mha_image(z_path).payload == flat.payload);
}

TEST_CASE("typed write/read round-trips") {
  Geometry g{{4, 3, 2}, {1.5, 1.5, 5.0}, {2.0, -3.0, 7.5}};
  std::mt19937_64 rng(31);

  std::vector<float> scalars(g.voxel_count());
  std::uniform_real_distribution<float> dist(-1000.0f, 4000.0f);
  for (auto& v : scalars) v = dist(rng);
  const ScalarVolume vol(g, scalars);
  const auto vpath = temp_file("typed_volume.mha");
  write_mha(vol, vpath, true);
  const auto vol_back = read_mha_volume(vpath);
  CHECK(vol_back.geometry().compatible(g));
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    CHECK(vol_back.values()[i] == scalars[i]);
  }

  std::vector<std::uint8_t> fg(g.voxel_count());
  for (auto& v : fg) v = rng() % 2;
  const BinaryMask mask(g, fg);
  const auto mpath = temp_file("typed_mask.mha");
  write_mha(mask, mpath, false);
  const BinaryMask mask_back = read_mha_mask(mpath);
  CHECK(mask_back.geometry().compatible(g));
  for (std::size_t i = 0; i < fg.size(); ++i) {
    CHECK(mask_back.values()[i] == fg[i]);
  }

  std::vector<double> field(g.voxel_count());
  std::uniform_real_distribution<double> fdist(-1.0, 1.0);
  for (auto& v : field) v = fdist(rng);
  const auto fpath = temp_file("typed_field.mha");
  write_mha_field(g, field, fpath, true);
  const MhaImage raw = read_mha_image(fpath);
  REQUIRE(raw.type == MhaType::kDouble);
  std::vector<double> field_back(field.size());
  std::memcpy(field_back.data(), raw.payload.data(), raw.payload.size());
  CHECK(field_back == field);

  CHECK_THROWS_AS(write_mha_field(g, std::vector<double>(3), fpath, false),
                  validation_error);
}

TEST_CASE("written headers use canonical key order and shortest number spelling") {
  const BinaryMask m({{2, 2, 1}, {0.8, 0.8, 3.0}, {0.0, 0.0, 0.0}}, {0, 1, 1, 0});
  const auto path = temp_file("canonical.mha");
  write_mha(m, path, false);

  const auto bytes = read_bytes(path);
  const std::string text(bytes.begin(), bytes.end());
  const std::string expected_header =
      "ObjectType = Image\n"
      "NDims = 3\n"
      "BinaryData = True\n"
      "BinaryDataByteOrderMSB = False\n"
      "CompressedData = False\n"
      "TransformMatrix = 1 0 0 0 1 0 0 0 1\n"
      "Offset = 0 0 0\n"
      "CenterOfRotation = 0 0 0\n"
      "ElementSpacing = 0.8 0.8 3\n"
      "DimSize = 2 2 1\n"
      "ElementType = MET_UCHAR\n"
      "ElementDataFile = LOCAL\n";
  REQUIRE(text.size() == expected_header.size() + 4);
  CHECK(text.substr(0, expected_header.size()) == expected_header);
  CHECK(text.substr(expected_header.size()) == std::string("\x00\x01\x01\x00", 4));
}

TEST_CASE("probability conversion validates the unit interval") {
  const Geometry g{{2, 1, 1}, {1, 1, 1}, {0, 0, 0}};
  const ProbVolume p = as_probabilities(ScalarVolume(g, {0.0f, 1.0f}));
  CHECK(p.at(0, 0, 0) == 0.0);
  CHECK(p.at(1, 0, 0) == 1.0);

  CHECK_THROWS_AS(as_probabilities(ScalarVolume(g, {0.5f, 1.5f})), validation_error);
  CHECK_THROWS_AS(as_probabilities(ScalarVolume(g, {-0.1f, 0.5f})), validation_error);
  CHECK_THROWS_AS(as_probabilities(ScalarVolume(g, {std::nanf(""), 0.5f})), validation_error);
}

TEST_CASE("aggregate means, infinity propagation, and the finite-only mean") {
  const std::vector<MetricReport> cases = {
      make_report("a", 0.8, 1.0, 0.9),
      make_report("b", 0.6, kInf, 0.5),
      make_report("c", 0.4, 3.0, 0.7),
  };
  const ReportAggregate agg = aggregate_reports(cases);
  CHECK(agg.cases == 3);
  CHECK(agg.dice == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(std::isinf(agg.msd_mm));
  CHECK(agg.nsd == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(agg.finite_msd_count == 2);
  CHECK(agg.finite_msd_mean == doctest::Approx(2.0).epsilon(1e-12));

  // A single case aggregates to itself.
  const ReportAggregate one = aggregate_reports({make_report("x", 1.0, 0.0, 1.0)});
  CHECK(one.dice == 1.0);
  CHECK(one.msd_mm == 0.0);
  CHECK(one.nsd == 1.0);
  CHECK(one.finite_msd_count == 1);

  // All-infinite distances leave no finite cases.
  const ReportAggregate none = aggregate_reports({make_report("y", 0.0, kInf, 0.0)});
  CHECK(none.finite_msd_count == 0);
  CHECK(std::isinf(none.msd_mm));

  CHECK_THROWS_AS(aggregate_reports({}), validation_error);
}

TEST_CASE("csv report matches the frozen comparison row") {
  const std::vector<MetricReport> cases = {
      make_report("case_1", 0.4, 1.25, 0.515),
      make_report("case_2", 0.6, 2.0, 0.55),
  };
  CHECK(report_csv(cases, "Tversky-HausdorffDT Loss") ==
        "label,dice,msd_mm,nsd\n"
        "Tversky-HausdorffDT Loss,0.5000,1.6250,0.5325\n");

  const std::vector<MetricReport> with_inf = {make_report("only", 0.25, kInf, 0.0)};
  CHECK(report_csv(with_inf, "empty-pred") ==
        "label,dice,msd_mm,nsd\n"
        "empty-pred,0.2500,Inf,0.0000\n");
}

TEST_CASE("json report round-trips through text, including infinities") {
  const std::vector<MetricReport> cases = {
      make_report("case_1", 0.75, 2.5, 0.8),
      make_report("case_2", 0.5, kInf, 0.25),
  };
  const nlohmann::json j = report_to_json(cases, "demo", 1.5);
  const nlohmann::json back = nlohmann::json::parse(j.dump(2));

  CHECK(back["label"] == "demo");
  CHECK(back["tau_mm"] == 1.5);
  REQUIRE(back["cases"].size() == 2);
  for (std::size_t i = 0; i < cases.size(); ++i) {
    CAPTURE(i);
    CHECK(back["cases"][i]["case_id"] == cases[i].case_id);
    CHECK(json_number(back["cases"][i]["dice"]) == cases[i].dice);
    CHECK(json_number(back["cases"][i]["msd_mm"]) == cases[i].msd_mm);
    CHECK(json_number(back["cases"][i]["nsd"]) == cases[i].nsd);
  }
  CHECK(back["aggregate"]["cases"] == 2);
  CHECK(json_number(back["aggregate"]["dice"]) == 0.625);
  CHECK(json_number(back["aggregate"]["msd_mm"]) == kInf);
  CHECK(back["aggregate"]["msd_mm"] == "Infinity");
  CHECK(json_number(back["aggregate"]["msd_mm_finite_mean"]) == 2.5);
  CHECK(back["aggregate"]["msd_mm_finite_count"] == 1);

  // All-infinite: the finite-only mean has no value.
  const nlohmann::json all_inf =
      report_to_json({make_report("z", 0.0, kInf, 0.0)}, "x", 1.0);
  CHECK(all_inf["aggregate"]["msd_mm_finite_mean"].is_null());
}

TEST_CASE("emit_report writes both formats to disk") {
  const std::vector<MetricReport> cases = {make_report("c1", 1.0, 0.0, 1.0)};

  const auto jpath = temp_file("report.json");
  emit_report(cases, "exact", 1.0, ReportFormat::kJson, jpath);
  std::ifstream jin(jpath);
  const nlohmann::json parsed = nlohmann::json::parse(jin);
  CHECK(parsed["label"] == "exact");
  CHECK(parsed["cases"][0]["case_id"] == "c1");
  CHECK(json_number(parsed["aggregate"]["dice"]) == 1.0);

  const auto cpath = temp_file("report.csv");
  emit_report(cases, "exact", 1.0, ReportFormat::kCsv, cpath);
  const auto bytes = read_bytes(cpath);
  CHECK(std::string(bytes.begin(), bytes.end()) ==
        "label,dice,msd_mm,nsd\nexact,1.0000,0.0000,1.0000\n");

  CHECK_THROWS_AS(emit_report(cases, "x", 1.0, ReportFormat::kJson,
                              temp_file("no_such_dir") / "report.json"),
                  io_error);
}
