/*
 * Copyright 2026 The rmae Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "rmae/radial_mask.hpp"

namespace rmae {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

VoxelGrid DenseSlab(const GridGeometry& geom) {
  VoxelGrid grid;
  grid.geometry = geom;
  for (int x = 0; x < geom.dims[0]; ++x)
    for (int y = 0; y < geom.dims[1]; ++y)
      for (int z = 0; z < geom.dims[2]; ++z) grid.voxels[{x, y, z}] = VoxelFeature{{0, 0, 0, 0}, 1};
  return grid;
}

VoxelGrid RandomGrid(std::uint64_t seed, double density) {
  GridGeometry geom;
  geom.dims = {64, 64, 2};
  Stream s({seed});
  VoxelGrid grid;
  grid.geometry = geom;
  for (int x = 0; x < 64; ++x)
    for (int y = 0; y < 64; ++y)
      for (int z = 0; z < 2; ++z)
        if (s.NextUnit() < density) grid.voxels[{x, y, z}] = VoxelFeature{{1, 2, 3, 4}, 2};
  return grid;
}

TEST(AngularGroupTest, Examples) {
  EXPECT_EQ(AssignAngularGroup({1.0, 0.0, 0.0}, 360), 0);
  EXPECT_EQ(AssignAngularGroup({1.0, std::numbers::pi, 0.0}, 4), 2);
  // floor((2pi - 1e-12) / (2pi / 360)) is 359 unclamped as well.
  const double theta = kTwoPi - 1e-12;
  EXPECT_EQ(std::floor(theta / (kTwoPi / 360)), 359.0);
  EXPECT_EQ(AssignAngularGroup({1.0, theta, 0.0}, 360), 359);
  EXPECT_EQ(AssignAngularGroup({1.0, std::nextafter(kTwoPi, 0.0), 0.0}, 7), 6);
  EXPECT_EQ(AssignAngularGroup({1.0, 3.0, 0.0}, 1), 0);
}

TEST(AngularGroupTest, AgreesWithDegreeArithmetic) {
  for (int deg10 = 5; deg10 < 3600; deg10 += 10) {
    const double theta = deg10 / 10.0 * std::numbers::pi / 180.0;
    EXPECT_EQ(AssignAngularGroup({1.0, theta, 0.0}, 360), deg10 / 10);
    EXPECT_EQ(AssignAngularGroup({1.0, theta, 0.0}, 36), deg10 / 100);
  }
}

TEST(DistanceSubgroupTest, Examples) {
  const std::vector<double> t{30.0, 50.0};
  EXPECT_EQ(AssignDistanceSubgroup({0.0, 0.0, 0.0}, t), 0);
  EXPECT_EQ(AssignDistanceSubgroup({0.0, 0.0, 0.0}, {1.0, 2.0, 3.0}), 0);
  EXPECT_EQ(AssignDistanceSubgroup({40.0, 0.0, 0.0}, t), 1);
  EXPECT_EQ(AssignDistanceSubgroup({30.0, 0.0, 0.0}, t), 1);
  EXPECT_EQ(AssignDistanceSubgroup({std::nextafter(30.0, 0.0), 0.0, 0.0}, t), 0);
  EXPECT_EQ(AssignDistanceSubgroup({50.0, 0.0, 0.0}, t), 2);
  EXPECT_EQ(AssignDistanceSubgroup({900.0, 0.0, 0.0}, t), 2);
  EXPECT_EQ(AssignDistanceSubgroup({900.0, 0.0, 0.0}, {}), 0);
}

TEST(MaskConfigTest, ValidationNamesTheProblem) {
  auto expect_invalid = [](MaskConfig c, const std::string& needle) {
    try {
      c.Validate();
      ADD_FAILURE() << needle;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kInvalidParams);
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_invalid(MaskConfig{.m = 1.5}, "m must lie in [0,1]");
  expect_invalid(MaskConfig{.m = -0.1}, "m must lie in [0,1]");
  expect_invalid(MaskConfig{.num_groups = 0}, "N_g");
  expect_invalid(MaskConfig{.r_thresholds = {50.0, 30.0}}, "ascending");
  expect_invalid(MaskConfig{.r_thresholds = {0.0}, .p_drop = {{0.0, 0.1}}}, "positive");
  expect_invalid(MaskConfig{.p_drop = {{0.0, 0.5}}}, "p_drop");
  expect_invalid(MaskConfig{.p_drop = {{0.0, 0.5, 1.2}}}, "p_drop");
  MaskConfig{.num_groups = 2, .p_drop = {{0, 0, 0}, {1, 1, 1}}}.Validate();
}

TEST(SelectGroupsTest, ExtremeRatios) {
  for (auto mode : {SelectionMode::kBernoulli, SelectionMode::kExactCount}) {
    EXPECT_TRUE(SelectGroups(MaskConfig{.m = 1.0, .selection_mode = mode}).empty());
    EXPECT_EQ(SelectGroups(MaskConfig{.m = 0.0, .selection_mode = mode}).size(), 360u);
  }
}

TEST(SelectGroupsTest, BernoulliCalibration) {
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    sum += SelectGroups(MaskConfig{.num_groups = 1000, .m = 0.8, .seed = seed}).size() / 1000.0;
  }
  const double mean = sum / 100.0;
  EXPECT_GE(mean, 0.18);
  EXPECT_LE(mean, 0.22);
}

TEST(SelectGroupsTest, ExactCountIsExactAndDistinct) {
  for (double m : {0.0, 0.1, 0.25, 0.5, 0.8, 0.95, 1.0})
    for (int ng : {1, 7, 36, 360, 1000})
      for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto g = SelectGroups(
            MaskConfig{.num_groups = ng, .m = m, .selection_mode = SelectionMode::kExactCount, .seed = seed});
        EXPECT_EQ(g.size(), static_cast<std::size_t>(std::llround((1.0 - m) * ng)));
        EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
        EXPECT_EQ(std::adjacent_find(g.begin(), g.end()), g.end());
        if (!g.empty()) {
          EXPECT_GE(g.front(), 0);
          EXPECT_LT(g.back(), ng);
        }
      }
}

TEST(SelectGroupsTest, ExactCountIsRoughlyUniform) {
  std::vector<int> hits(20, 0);
  for (std::uint64_t seed = 0; seed < 4000; ++seed)
    for (int g : SelectGroups(MaskConfig{
             .num_groups = 20, .m = 0.75, .selection_mode = SelectionMode::kExactCount, .seed = seed}))
      ++hits[static_cast<std::size_t>(g)];
  // Each group is chosen with probability 5/20; binomial sd ~ 27.
  for (int h : hits) EXPECT_NEAR(h, 1000, 130);
}

TEST(SelectGroupsTest, DeterministicAndSeedSensitive) {
  const MaskConfig a{.seed = 11};
  EXPECT_EQ(SelectGroups(a), SelectGroups(a));
  EXPECT_NE(SelectGroups(a), SelectGroups(MaskConfig{.seed = 12}));
}

TEST(ApplyMaskTest, NothingMasked) {
  const auto grid = RandomGrid(1, 0.2);
  const auto out = ApplyMask(grid, MaskConfig{.m = 0.0, .p_drop = {{0.0, 0.0, 0.0}}});
  EXPECT_EQ(out.visible_set.size(), grid.size());
  EXPECT_EQ(out.stats.voxel_visible_fraction, 1.0);
  EXPECT_EQ(out.stats.group_visible_fraction, 1.0);
}

TEST(ApplyMaskTest, EverythingMasked) {
  const auto grid = RandomGrid(2, 0.2);
  const auto out = ApplyMask(grid, MaskConfig{.m = 1.0});
  EXPECT_TRUE(out.visible_set.empty());
  EXPECT_EQ(out.decision.size(), grid.size());
  EXPECT_EQ(out.stats.voxel_visible_fraction, 0.0);
  EXPECT_EQ(out.stats.max_sensed_range, 0.0);
}

TEST(ApplyMaskTest, EmptyGrid) {
  VoxelGrid grid;
  const auto out = ApplyMask(grid, MaskConfig{});
  EXPECT_TRUE(out.decision.empty());
  EXPECT_TRUE(out.visible_set.empty());
  EXPECT_EQ(out.stats.voxel_visible_fraction, 0.0);
}

TEST(ApplyMaskTest, DropRatesMatchProbabilities) {
  // A 60 m square slab at 0.25 m pitch has tens of thousands of voxels in
  // every band; keep the first 10 000 of each.
  GridGeometry geom;
  geom.min_corner = {-60.0, -60.0, 0.0};
  geom.voxel_size = {0.25, 0.25, 1.0};
  geom.dims = {480, 480, 1};
  const auto slab = DenseSlab(geom);
  const std::vector<double> thresholds{30.0, 50.0};
  VoxelGrid grid;
  grid.geometry = geom;
  std::array<int, 3> taken{};
  for (const auto& [v, f] : slab.voxels) {
    const int k = AssignDistanceSubgroup(VoxelCylindrical(geom, v), thresholds);
    if (taken[static_cast<std::size_t>(k)] < 10000) {
      ++taken[static_cast<std::size_t>(k)];
      grid.voxels.emplace(v, f);
    }
  }
  ASSERT_EQ(taken, (std::array<int, 3>{10000, 10000, 10000}));
  const auto out = ApplyMask(grid, MaskConfig{.num_groups = 1, .m = 0.0, .seed = 5});
  ASSERT_EQ(out.selected_groups, std::vector<int>{0});
  const std::array<double, 3> expect{0.0, 0.5, 0.9};
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(out.stats.per_subgroup_count[k], 10000u);
    EXPECT_NEAR(out.stats.per_subgroup_drop_rate[k], expect[k], 0.03);
  }
}

TEST(ApplyMaskTest, PartitionAndAngularCoherence) {
  const auto grid = RandomGrid(3, 0.3);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const MaskConfig cfg{.num_groups = 36, .m = 0.6, .r_thresholds = {6.0, 12.0}, .seed = seed};
    const auto out = ApplyMask(grid, cfg);
    ASSERT_EQ(out.decision.size(), grid.size());
    std::vector<VoxelCoord> visible;
    for (const auto& [v, vis] : out.decision) {
      EXPECT_TRUE(grid.voxels.contains(v));
      const int g = AssignAngularGroup(VoxelCylindrical(grid.geometry, v), cfg.num_groups);
      if (!out.IsSelected(g)) {
        EXPECT_FALSE(vis);
      }
      if (vis) visible.push_back(v);
    }
    EXPECT_EQ(visible, out.visible_set);
  }
}

TEST(ApplyMaskTest, StatisticsMatchRecount) {
  const auto grid = RandomGrid(4, 0.3);
  const MaskConfig cfg{.num_groups = 24, .m = 0.5, .r_thresholds = {5.0, 9.0, 14.0},
                       .p_drop = {{0.1, 0.3, 0.6, 0.8}}, .seed = 9};
  const auto out = ApplyMask(grid, cfg);
  std::size_t visible = 0;
  double max_r = 0.0;
  std::vector<double> drops(4, 0.0), counts(4, 0.0);
  for (const auto& [v, vis] : out.decision) {
    const auto c = VoxelCylindrical(grid.geometry, v);
    if (vis) {
      ++visible;
      max_r = std::max(max_r, c.r);
    }
    const int g = AssignAngularGroup(c, 24);
    if (std::find(out.selected_groups.begin(), out.selected_groups.end(), g) == out.selected_groups.end()) continue;
    const int k = AssignDistanceSubgroup(c, cfg.r_thresholds);
    counts[k] += 1;
    if (!vis) drops[k] += 1;
  }
  EXPECT_DOUBLE_EQ(out.stats.voxel_visible_fraction, static_cast<double>(visible) / grid.size());
  EXPECT_DOUBLE_EQ(out.stats.group_visible_fraction, out.selected_groups.size() / 24.0);
  EXPECT_EQ(out.stats.max_sensed_range, max_r);
  for (int k = 0; k < 4; ++k) {
    EXPECT_DOUBLE_EQ(out.stats.per_subgroup_drop_rate[k], counts[k] ? drops[k] / counts[k] : 0.0);
  }
}

TEST(ApplyMaskTest, MismatchedOutcomeIsInvalidPairing) {
  const auto grid = RandomGrid(5, 0.2);
  auto out = ApplyMask(grid, MaskConfig{});
  auto other = RandomGrid(6, 0.2);
  try {
    MaskStatistics(out, other, MaskConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidPairing);
  }
}

TEST(ApplyMaskTest, DecisionsIndependentOfOtherVoxels) {
  // Masking any subset reproduces the restriction of the full mask.
  const auto grid = RandomGrid(7, 0.3);
  const MaskConfig cfg{.num_groups = 36, .m = 0.5, .r_thresholds = {6.0, 12.0}, .seed = 21};
  const auto full = ApplyMask(grid, cfg);
  VoxelGrid sub;
  sub.geometry = grid.geometry;
  Stream s(8);
  for (const auto& [v, f] : grid.voxels)
    if (s.NextUnit() < 0.3) sub.voxels.emplace(v, f);
  for (const auto& [v, vis] : ApplyMask(sub, cfg).decision) EXPECT_EQ(vis, full.decision.at(v));
}

TEST(ApplyMaskTest, RaisingDropProbabilityNeverAddsVoxels) {
  const auto grid = RandomGrid(9, 0.3);
  MaskConfig lo{.num_groups = 36, .m = 0.3, .r_thresholds = {6.0, 12.0}, .p_drop = {{0.1, 0.2, 0.3}}, .seed = 4};
  MaskConfig hi = lo;
  hi.p_drop = {{0.1, 0.6, 0.3}};
  const auto a = ApplyMask(grid, lo), b = ApplyMask(grid, hi);
  for (const auto& [v, vis] : b.decision) {
    if (vis) {
      EXPECT_TRUE(a.decision.at(v));
    }
  }
  EXPECT_LT(b.visible_set.size(), a.visible_set.size());
}

TEST(ApplyMaskTest, RotationEquivariance) {
  // A quarter turn about the grid centre maps voxel (ix, iy) to
  // (63 - iy, ix). Group counts that are not multiples of 8 keep every
  // voxel centre off a group boundary.
  const auto grid = RandomGrid(10, 0.3);
  VoxelGrid rotated;
  rotated.geometry = grid.geometry;
  auto rot = [](const VoxelCoord& v) { return VoxelCoord{63 - v[1], v[0], v[2]}; };
  for (const auto& [v, f] : grid.voxels) rotated.voxels.emplace(rot(v), f);
  for (int ng : {12, 36, 60}) {
    for (const auto& p_drop : std::vector<std::vector<double>>{{0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {1.0, 0.0, 1.0}}) {
      MaskConfig cfg{.num_groups = ng, .m = 0.5, .r_thresholds = {5.0, 10.0}, .p_drop = {p_drop}, .seed = 33};
      MaskConfig shifted = cfg;
      shifted.group_key_offset = -ng / 4;
      const auto a = ApplyMask(grid, cfg);
      const auto b = ApplyMask(rotated, shifted);
      std::vector<int> expect_groups;
      for (int g : a.selected_groups) expect_groups.push_back((g + ng / 4) % ng);
      std::sort(expect_groups.begin(), expect_groups.end());
      EXPECT_EQ(b.selected_groups, expect_groups);
      for (const auto& [v, vis] : a.decision) EXPECT_EQ(b.decision.at(rot(v)), vis);
    }
  }
}

TEST(ApplyMaskTest, RangeDropToggle) {
  const auto grid = RandomGrid(11, 0.3);
  const MaskConfig cfg{.num_groups = 36, .m = 0.0, .p_drop = {{0.9, 0.9, 0.9}}, .range_drop = false};
  EXPECT_EQ(ApplyMask(grid, cfg).visible_set.size(), grid.size());
}

TEST(ApplyMaskTest, PerGroupDropRows) {
  GridGeometry geom;
  geom.dims = {64, 64, 1};
  const auto grid = DenseSlab(geom);
  std::vector<std::vector<double>> rows(4, {0.0, 0.0, 0.0});
  rows[1] = {1.0, 1.0, 1.0};
  const auto out = ApplyMask(grid, MaskConfig{.num_groups = 4, .m = 0.0, .p_drop = rows});
  for (const auto& [v, vis] : out.decision) {
    const int g = AssignAngularGroup(VoxelCylindrical(geom, v), 4);
    EXPECT_EQ(vis, g != 1);
  }
}

TEST(ApplyMaskTest, TextExport) {
  VoxelGrid grid;
  grid.voxels[{0, 0, 0}] = VoxelFeature{{0, 0, 0, 0}, 1};
  grid.voxels[{63, 63, 1}] = VoxelFeature{{0, 0, 0, 0}, 1};
  const auto out = ApplyMask(grid, MaskConfig{.m = 0.0, .p_drop = {{0.0, 0.0, 0.0}}});
  std::ostringstream os;
  WriteMaskText(out, os);
  EXPECT_EQ(os.str(), "0 0 0 1\n63 63 1 1\n");
}

}  // namespace
}  // namespace rmae
