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

#ifndef RMAE_RADIAL_MASK_HPP_
#define RMAE_RADIAL_MASK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "rmae/error.hpp"
#include "rmae/rng.hpp"
#include "rmae/voxelizer.hpp"

namespace rmae {

enum class SelectionMode { kBernoulli, kExactCount };

/// Two-stage radial masking parameters. Stage 1 keeps each azimuth wedge
/// with probability 1 - m; stage 2 drops voxels inside kept wedges with a
/// probability that depends on their distance band.
struct MaskConfig {
  int num_groups = 360;
  double m = 0.8;
  SelectionMode selection_mode = SelectionMode::kBernoulli;
  std::vector<double> r_thresholds{30.0, 50.0};  // ascending, N_d - 1 entries
  // One row shared by every group, or one row per group; each row has N_d
  // entries.
  std::vector<std::vector<double>> p_drop{{0.0, 0.5, 0.9}};
  bool range_drop = true;  // false disables stage 2
  std::uint64_t seed = 0;
  // Added to the group index before keying stage-1 draws (mod num_groups).
  int group_key_offset = 0;

  int num_subgroups() const { return static_cast<int>(r_thresholds.size()) + 1; }

  double group_span() const { return 2.0 * std::numbers::pi / num_groups; }

  double DropProbability(int group, int subgroup) const {
    const auto& row = p_drop.size() == 1 ? p_drop[0] : p_drop[static_cast<std::size_t>(group)];
    return row[static_cast<std::size_t>(subgroup)];
  }

  void Validate() const {
    auto bad = [](const std::string& what) { Fail(ErrorKind::kInvalidParams, what); };
    if (num_groups < 1) bad("N_g must be at least 1");
    if (!(m >= 0.0 && m <= 1.0)) bad("m must lie in [0,1]");
    for (std::size_t i = 0; i < r_thresholds.size(); ++i) {
      if (!(r_thresholds[i] > 0.0)) bad("r_thresholds must be positive");
      if (i > 0 && !(r_thresholds[i] > r_thresholds[i - 1])) {
        bad("r_thresholds must be strictly ascending");
      }
    }
    if (p_drop.size() != 1 && p_drop.size() != static_cast<std::size_t>(num_groups)) {
      bad("p_drop must have 1 or N_g rows");
    }
    for (const auto& row : p_drop) {
      if (row.size() != static_cast<std::size_t>(num_subgroups())) {
        bad("each p_drop row must have N_d = len(r_thresholds) + 1 entries");
      }
      for (double p : row) {
        if (!(p >= 0.0 && p <= 1.0)) bad("p_drop entries must lie in [0,1]");
      }
    }
  }
};

struct MaskStats {
  double group_visible_fraction = 0.0;
  double voxel_visible_fraction = 0.0;
  // Drop frequency per distance band, counted inside sensed groups only. A
  // band with no voxels reports 0.
  std::vector<double> per_subgroup_drop_rate;
  std::vector<std::size_t> per_subgroup_count;
  double max_sensed_range = 0.0;  // [m], 0 when nothing is visible
};

struct MaskOutcome {
  std::vector<int> selected_groups;           // G_s, ascending
  std::map<VoxelCoord, bool> decision;        // true = visible
  std::vector<VoxelCoord> visible_set;        // V_s, canonical order
  MaskStats stats;

  bool IsSelected(int group) const {
    return std::binary_search(selected_groups.begin(), selected_groups.end(), group);
  }
};

/// Wedge index of an azimuth; theta exactly at the wrap boundary lands in
/// the last group.
inline int AssignAngularGroup(const CylindricalCoord& c, int num_groups) {
  const double span = 2.0 * std::numbers::pi / num_groups;
  const auto g = static_cast<long long>(std::floor(c.theta / span));
  return static_cast<int>(std::clamp<long long>(g, 0, num_groups - 1));
}

/// Number of thresholds at or below r, so a radius equal to a threshold
/// belongs to the farther band.
inline int AssignDistanceSubgroup(const CylindricalCoord& c,
                                  const std::vector<double>& r_thresholds) {
  return static_cast<int>(
      std::upper_bound(r_thresholds.begin(), r_thresholds.end(), c.r) - r_thresholds.begin());
}

inline int GroupKey(const MaskConfig& cfg, int group) {
  const long long n = cfg.num_groups;
  return static_cast<int>(((group + static_cast<long long>(cfg.group_key_offset)) % n + n) % n);
}

/// Stage 1: the returned groups are the SENSED wedges.
inline std::vector<int> SelectGroups(const MaskConfig& cfg) {
  cfg.Validate();
  std::vector<int> selected;
  const double keep = 1.0 - cfg.m;
  if (cfg.selection_mode == SelectionMode::kBernoulli) {
    for (int g = 0; g < cfg.num_groups; ++g) {
      const auto key = static_cast<std::uint64_t>(GroupKey(cfg, g));
      if (rng::Uniform({rng::kGroupSelect, cfg.seed, key}) < keep) selected.push_back(g);
    }
    return selected;
  }
  const auto count = static_cast<std::size_t>(std::llround(keep * cfg.num_groups));
  // Partial Fisher-Yates over group keys, then map keys back to groups.
  std::vector<int> keys(static_cast<std::size_t>(cfg.num_groups));
  for (int k = 0; k < cfg.num_groups; ++k) keys[static_cast<std::size_t>(k)] = k;
  Stream stream({rng::kGroupSelect, cfg.seed, 0xec});
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(stream.NextBelow(keys.size() - i));
    std::swap(keys[i], keys[j]);
  }
  std::vector<char> key_chosen(keys.size(), 0);
  for (std::size_t i = 0; i < count; ++i) key_chosen[static_cast<std::size_t>(keys[i])] = 1;
  for (int g = 0; g < cfg.num_groups; ++g) {
    if (key_chosen[static_cast<std::size_t>(GroupKey(cfg, g))]) selected.push_back(g);
  }
  return selected;
}

inline MaskStats MaskStatistics(const MaskOutcome& outcome, const VoxelGrid& grid,
                                const MaskConfig& cfg) {
  if (outcome.decision.size() != grid.voxels.size()) {
    Fail(ErrorKind::kInvalidPairing, "mask outcome does not cover the grid");
  }
  MaskStats stats;
  const int nd = cfg.num_subgroups();
  std::vector<std::size_t> dropped(static_cast<std::size_t>(nd), 0);
  stats.per_subgroup_count.assign(static_cast<std::size_t>(nd), 0);
  std::size_t visible = 0;
  auto it = outcome.decision.begin();
  for (const auto& [v, feat] : grid.voxels) {
    if (it->first != v) Fail(ErrorKind::kInvalidPairing, "mask outcome does not match the grid");
    const bool is_visible = it->second;
    ++it;
    const auto c = VoxelCylindrical(grid.geometry, v);
    const int g = AssignAngularGroup(c, cfg.num_groups);
    if (is_visible) {
      ++visible;
      stats.max_sensed_range = std::max(stats.max_sensed_range, c.r);
    }
    if (!outcome.IsSelected(g)) continue;
    const auto k = static_cast<std::size_t>(AssignDistanceSubgroup(c, cfg.r_thresholds));
    ++stats.per_subgroup_count[k];
    if (!is_visible) ++dropped[k];
  }
  stats.group_visible_fraction =
      static_cast<double>(outcome.selected_groups.size()) / cfg.num_groups;
  stats.voxel_visible_fraction =
      grid.voxels.empty() ? 0.0 : static_cast<double>(visible) / grid.voxels.size();
  stats.per_subgroup_drop_rate.resize(static_cast<std::size_t>(nd));
  for (std::size_t k = 0; k < dropped.size(); ++k) {
    stats.per_subgroup_drop_rate[k] =
        stats.per_subgroup_count[k] == 0
            ? 0.0
            : static_cast<double>(dropped[k]) / stats.per_subgroup_count[k];
  }
  return stats;
}

/// Applies both stages. Each stage-2 draw is keyed by (seed, group, voxel),
/// so the result does not depend on iteration order.
inline MaskOutcome ApplyMask(const VoxelGrid& grid, const MaskConfig& cfg) {
  cfg.Validate();
  MaskOutcome out;
  out.selected_groups = SelectGroups(cfg);
  std::vector<char> selected(static_cast<std::size_t>(cfg.num_groups), 0);
  for (int g : out.selected_groups) selected[static_cast<std::size_t>(g)] = 1;

  for (const auto& [v, feat] : grid.voxels) {
    const auto c = VoxelCylindrical(grid.geometry, v);
    const int g = AssignAngularGroup(c, cfg.num_groups);
    bool visible = selected[static_cast<std::size_t>(g)] != 0;
    if (visible && cfg.range_drop) {
      const double p = cfg.DropProbability(g, AssignDistanceSubgroup(c, cfg.r_thresholds));
      const double u = rng::Uniform({rng::kVoxelDrop, cfg.seed,
                                     static_cast<std::uint64_t>(GroupKey(cfg, g)),
                                     static_cast<std::uint64_t>(v[0]),
                                     static_cast<std::uint64_t>(v[1]),
                                     static_cast<std::uint64_t>(v[2])});
      if (u < p) visible = false;
    }
    out.decision.emplace_hint(out.decision.end(), v, visible);
    if (visible) out.visible_set.push_back(v);
  }
  out.stats = MaskStatistics(out, grid, cfg);
  return out;
}

/// The grid restricted to the visible voxels.
inline VoxelGrid VisibleGrid(const VoxelGrid& grid, const MaskOutcome& outcome) {
  VoxelGrid vis;
  vis.geometry = grid.geometry;
  for (const auto& v : outcome.visible_set) vis.voxels.emplace_hint(vis.voxels.end(), v, grid.voxels.at(v));
  return vis;
}

/// Text export: "ix iy iz M" per voxel, M = 1 when visible.
inline void WriteMaskText(const MaskOutcome& outcome, std::ostream& out) {
  for (const auto& [v, visible] : outcome.decision) {
    out << v[0] << ' ' << v[1] << ' ' << v[2] << ' ' << (visible ? 1 : 0) << '\n';
  }
}

}  // namespace rmae

#endif  // RMAE_RADIAL_MASK_HPP_
