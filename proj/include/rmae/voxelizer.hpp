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

#ifndef RMAE_VOXELIZER_HPP_
#define RMAE_VOXELIZER_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "rmae/error.hpp"
#include "rmae/pointcloud.hpp"

namespace rmae {

using VoxelCoord = std::array<int, 3>;  // (ix, iy, iz); lexicographic order is canonical

struct GridGeometry {
  std::array<double, 3> min_corner{-12.8, -12.8, -3.2};  // [m]
  std::array<double, 3> voxel_size{0.4, 0.4, 0.4};       // [m]
  std::array<int, 3> dims{64, 64, 16};

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }

  bool Contains(const VoxelCoord& v) const {
    for (int a = 0; a < 3; ++a) {
      if (v[a] < 0 || v[a] >= dims[a]) return false;
    }
    return true;
  }

  /// Row-major index matching the canonical (ix, iy, iz) order.
  std::size_t FlatIndex(const VoxelCoord& v) const {
    return (static_cast<std::size_t>(v[0]) * dims[1] + v[1]) * dims[2] + v[2];
  }

  VoxelCoord CoordOf(std::size_t flat) const {
    VoxelCoord v;
    v[2] = static_cast<int>(flat % dims[2]);
    flat /= dims[2];
    v[1] = static_cast<int>(flat % dims[1]);
    v[0] = static_cast<int>(flat / dims[1]);
    return v;
  }

  std::array<double, 3> Center(const VoxelCoord& v) const {
    return {min_corner[0] + (v[0] + 0.5) * voxel_size[0],
            min_corner[1] + (v[1] + 0.5) * voxel_size[1],
            min_corner[2] + (v[2] + 0.5) * voxel_size[2]};
  }

  void Validate() const {
    for (int a = 0; a < 3; ++a) {
      if (!(voxel_size[a] > 0.0) || !std::isfinite(voxel_size[a])) {
        Fail(ErrorKind::kInvalidParams, "voxel_size must be positive");
      }
      if (dims[a] <= 0) Fail(ErrorKind::kInvalidParams, "dims must be positive");
      if (!std::isfinite(min_corner[a])) Fail(ErrorKind::kInvalidParams, "min_corner must be finite");
    }
  }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

inline constexpr int kDefaultFeatureWidth = 4;

/// Mean (x, y, z) offset of the member points from the voxel center, then
/// mean intensity.
struct VoxelFeature {
  std::vector<double> f;
  int point_count = 0;

  friend bool operator==(const VoxelFeature&, const VoxelFeature&) = default;
};

/// Sparse set of non-empty voxels. std::map keeps iteration canonical no
/// matter the insertion order.
struct VoxelGrid {
  GridGeometry geometry;
  std::map<VoxelCoord, VoxelFeature> voxels;
  std::size_t dropped_points = 0;  // points outside the extent

  std::size_t size() const { return voxels.size(); }
  bool empty() const { return voxels.empty(); }

  friend bool operator==(const VoxelGrid& a, const VoxelGrid& b) {
    return a.geometry == b.geometry && a.voxels == b.voxels;
  }
};

struct OccupancyGrid {
  GridGeometry geometry;
  std::vector<std::uint8_t> o;  // flat, 1 = occupied

  std::size_t occupied_count() const {
    std::size_t n = 0;
    for (auto v : o) n += v;
    return n;
  }
};

inline VoxelGrid Voxelize(const PointCloud& cloud, const GridGeometry& geom) {
  geom.Validate();
  VoxelGrid grid;
  grid.geometry = geom;
  struct Accum {
    std::array<double, 4> sum{};
    int count = 0;
  };
  std::map<VoxelCoord, Accum> acc;
  for (const Point& p : cloud.points) {
    const std::array<double, 3> pos{p.x, p.y, p.z};
    VoxelCoord v;
    bool inside = true;
    for (int a = 0; a < 3; ++a) {
      const double idx = std::floor((pos[a] - geom.min_corner[a]) / geom.voxel_size[a]);
      if (!(idx >= 0.0 && idx < geom.dims[a])) {
        inside = false;
        break;
      }
      v[a] = static_cast<int>(idx);
    }
    if (!inside) {
      ++grid.dropped_points;
      continue;
    }
    const auto center = geom.Center(v);
    Accum& a = acc[v];
    for (int k = 0; k < 3; ++k) a.sum[k] += pos[k] - center[k];
    a.sum[3] += p.intensity;
    ++a.count;
  }
  for (const auto& [v, a] : acc) {
    VoxelFeature feat;
    feat.point_count = a.count;
    feat.f.resize(kDefaultFeatureWidth);
    for (int k = 0; k < kDefaultFeatureWidth; ++k) feat.f[k] = a.sum[k] / a.count;
    grid.voxels.emplace_hint(grid.voxels.end(), v, std::move(feat));
  }
  return grid;
}

/// Cylindrical coordinates of a voxel center relative to the sensor axis.
inline CylindricalCoord VoxelCylindrical(const GridGeometry& geom, const VoxelCoord& v) {
  const auto c = geom.Center(v);
  return ToCylindrical(c[0], c[1], c[2]);
}

inline CylindricalCoord VoxelCylindrical(const VoxelGrid& grid, const VoxelCoord& v) {
  if (!grid.voxels.contains(v)) {
    Fail(ErrorKind::kNotFound, "voxel (" + std::to_string(v[0]) + ", " +
                                   std::to_string(v[1]) + ", " + std::to_string(v[2]) +
                                   ") is not present");
  }
  return VoxelCylindrical(grid.geometry, v);
}

inline OccupancyGrid OccupancyOf(const VoxelGrid& grid) {
  OccupancyGrid occ;
  occ.geometry = grid.geometry;
  occ.o.assign(grid.geometry.voxel_count(), 0);
  for (const auto& [v, feat] : grid.voxels) occ.o[grid.geometry.FlatIndex(v)] = 1;
  return occ;
}

/// Debug dump: "ix iy iz f_1 ... f_C count" per voxel in canonical order.
inline void DumpVoxelGrid(const VoxelGrid& grid, std::ostream& out) {
  char buf[64];
  for (const auto& [v, feat] : grid.voxels) {
    out << v[0] << ' ' << v[1] << ' ' << v[2];
    for (double x : feat.f) {
      std::snprintf(buf, sizeof(buf), " %.17g", x);
      out << buf;
    }
    out << ' ' << feat.point_count << '\n';
  }
}

}  // namespace rmae

#endif  // RMAE_VOXELIZER_HPP_
