#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "hieseg/metrics.hpp"
#include "oracles.hpp"

using namespace hieseg;

namespace {

BinaryMask mask_of(Dims3 dims, Vec3 spacing, const std::vector<Dims3>& fg) {
  Geometry g{dims, spacing, {0, 0, 0}};
  std::vector<std::uint8_t> data(g.voxel_count(), 0);
  for (const auto& v : fg) data[g.index(v[0], v[1], v[2])] = 1;
  return BinaryMask(g, std::move(data));
}

BinaryMask empty_mask(Dims3 dims, Vec3 spacing = {1, 1, 1}) {
  return mask_of(dims, spacing, {});
}

}  // namespace

TEST_CASE("surface of a single voxel is that voxel") {
  auto m = mask_of({5, 5, 5}, {1, 1, 1}, {{2, 3, 1}});
  auto s = extract_surface(m);
  REQUIRE(s.voxels.size() == 1);
  CHECK(s.voxels[0] == Dims3{2, 3, 1});
}

TEST_CASE("surface of a solid 3^3 block is the 26-voxel shell") {
  std::vector<Dims3> fg;
  for (int z = 1; z <= 3; ++z)
    for (int y = 1; y <= 3; ++y)
      for (int x = 1; x <= 3; ++x) fg.push_back({x, y, z});
  auto s = extract_surface(mask_of({5, 5, 5}, {1, 1, 1}, fg));
  CHECK(s.voxels.size() == 26);
  // the center is interior
  for (const auto& v : s.voxels) CHECK(v != Dims3{2, 2, 2});
}

TEST_CASE("surface of a full grid is the border shell") {
  Geometry g{{5, 5, 5}, {1, 1, 1}, {0, 0, 0}};
  BinaryMask m(g, std::vector<std::uint8_t>(125, 1));
  auto s = extract_surface(m);
  CHECK(s.voxels.size() == 125 - 27);  // all but the 3^3 interior
}

TEST_CASE("surface voxels are foreground and interior voxels never appear") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    auto g = oracle::random_geometry(rng, 10);
    auto m = oracle::random_mask(rng, g, 0.5);
    auto s = extract_surface(m);
    auto want = oracle::brute_surface(m);
    CHECK(s.voxels == want);
    for (const auto& v : s.voxels) CHECK(m.at(v[0], v[1], v[2]) == 1);
  }
}

TEST_CASE("dice coefficient basics") {
  auto a = mask_of({4, 4, 4}, {1, 1, 1}, {{0, 0, 0}, {1, 0, 0}});
  auto b = mask_of({4, 4, 4}, {1, 1, 1}, {{1, 0, 0}, {2, 0, 0}});
  CHECK(dice_coefficient(a, a) == 1.0);
  CHECK(dice_coefficient(a, b) == doctest::Approx(0.5));  // 1 shared of 2+2

  auto c = mask_of({4, 4, 4}, {1, 1, 1}, {{3, 3, 3}});
  CHECK(dice_coefficient(a, c) == 0.0);
  CHECK(dice_coefficient(empty_mask({4, 4, 4}), empty_mask({4, 4, 4})) == 1.0);
}

TEST_CASE("msd basics") {
  auto a = mask_of({6, 1, 1}, {1, 1, 1}, {{1, 0, 0}});
  auto b = mask_of({6, 1, 1}, {1, 1, 1}, {{2, 0, 0}});
  CHECK(mean_surface_distance(a, a) == 0.0);
  CHECK(mean_surface_distance(a, b) == doctest::Approx(1.0));
  CHECK(std::isinf(mean_surface_distance(empty_mask({6, 1, 1}), b)));
  CHECK(mean_surface_distance(empty_mask({6, 1, 1}), empty_mask({6, 1, 1})) == 0.0);
}

TEST_CASE("nsd tolerance behaviour at exact distances") {
  // two single voxels exactly 2 mm apart
  auto a = mask_of({6, 1, 1}, {1, 1, 1}, {{1, 0, 0}});
  auto b = mask_of({6, 1, 1}, {1, 1, 1}, {{3, 0, 0}});
  CHECK(normalized_surface_dice(a, b, 1.0) == 0.0);
  CHECK(normalized_surface_dice(a, b, 2.0) == 1.0);
  CHECK(normalized_surface_dice(a, a, 0.5) == 1.0);
  CHECK_THROWS_AS(normalized_surface_dice(a, b, 0.0), validation_error);
}

TEST_CASE("nsd empty conventions") {
  auto e = empty_mask({4, 4, 4});
  auto b = mask_of({4, 4, 4}, {1, 1, 1}, {{1, 1, 1}});
  CHECK(normalized_surface_dice(e, e, 1.0) == 1.0);
  CHECK(normalized_surface_dice(e, b, 1.0) == 0.0);
  CHECK(normalized_surface_dice(b, e, 1.0) == 0.0);
}

TEST_CASE("nsd with tau above the grid diameter is 1") {
  std::mt19937_64 rng(32);
  auto g = oracle::random_geometry(rng, 8);
  auto a = oracle::random_mask(rng, g, 0.3);
  auto b = oracle::random_mask(rng, g, 0.3);
  if (foreground_count(a) > 0 && foreground_count(b) > 0) {
    CHECK(normalized_surface_dice(a, b, g.diameter_mm() + 1.0) == 1.0);
  }
}

TEST_CASE("metrics are symmetric in (p, q)") {
  std::mt19937_64 rng(33);
  for (int rep = 0; rep < 15; ++rep) {
    auto g = oracle::random_geometry(rng, 9);
    auto a = oracle::random_mask(rng, g, 0.4);
    auto b = oracle::random_mask(rng, g, 0.4);
    CHECK(dice_coefficient(a, b) == dice_coefficient(b, a));
    const double m1 = mean_surface_distance(a, b);
    const double m2 = mean_surface_distance(b, a);
    if (std::isinf(m1)) {
      CHECK(std::isinf(m2));
    } else {
      CHECK(m1 == doctest::Approx(m2).epsilon(1e-12));
    }
    CHECK(normalized_surface_dice(a, b, 1.5) ==
          doctest::Approx(normalized_surface_dice(b, a, 1.5)).epsilon(1e-12));
  }
}

TEST_CASE("nsd is monotone nondecreasing in tau") {
  std::mt19937_64 rng(34);
  auto g = oracle::random_geometry(rng, 8);
  auto a = oracle::random_mask(rng, g, 0.3);
  auto b = oracle::random_mask(rng, g, 0.3);
  double prev = -1.0;
  for (double tau : {0.5, 1.0, 1.7, 2.5, 4.0, 8.0}) {
    const double v = normalized_surface_dice(a, b, tau);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("metrics match pairwise brute-force oracles on random pairs") {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> dens(0.0, 0.8);
  for (int rep = 0; rep < 40; ++rep) {
    auto g = oracle::random_geometry(rng, 12);
    auto a = oracle::random_mask(rng, g, dens(rng));
    auto b = oracle::random_mask(rng, g, dens(rng));

    CHECK(dice_coefficient(a, b) == oracle::brute_dice(a, b));

    const double msd = mean_surface_distance(a, b);
    const double msd_want = oracle::brute_msd(a, b);
    if (std::isinf(msd_want)) {
      CHECK(std::isinf(msd));
    } else {
      CHECK(msd == doctest::Approx(msd_want).epsilon(1e-9));
    }

    CHECK(normalized_surface_dice(a, b, 1.0) == oracle::brute_nsd(a, b, 1.0));
  }
}

TEST_CASE("evaluate_case bundles the three metrics") {
  auto a = mask_of({5, 5, 5}, {1, 1, 1}, {{2, 2, 2}});
  auto r = evaluate_case(a, a, 1.0, "case7");
  CHECK(r.case_id == "case7");
  CHECK(r.dice == 1.0);
  CHECK(r.msd_mm == 0.0);
  CHECK(r.nsd == 1.0);
  CHECK(r.tau_mm == 1.0);

  auto empty = empty_mask({5, 5, 5});
  auto er = evaluate_case(empty, a, 1.0);
  CHECK(er.dice == 0.0);
  CHECK(std::isinf(er.msd_mm));
  CHECK(er.nsd == 0.0);
}

TEST_CASE("geometry mismatch is rejected") {
  auto a = empty_mask({4, 4, 4});
  auto b = empty_mask({4, 4, 4}, {1, 1, 2});
  CHECK_THROWS_AS(dice_coefficient(a, b), geometry_error);
  CHECK_THROWS_AS(mean_surface_distance(a, b), geometry_error);
  CHECK_THROWS_AS(normalized_surface_dice(a, b, 1.0), geometry_error);
  CHECK_THROWS_AS(evaluate_case(a, b, 1.0), geometry_error);
}
