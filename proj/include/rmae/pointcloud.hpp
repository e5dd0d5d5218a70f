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

#ifndef RMAE_POINTCLOUD_HPP_
#define RMAE_POINTCLOUD_HPP_

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "rmae/error.hpp"
#include "rmae/rng.hpp"

namespace rmae {

/// One LiDAR return in sensor-centered Cartesian meters. Stored as binary32
/// so that KITTI frames round-trip bit-exactly.
struct Point {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  float intensity = 0.0f;

  friend bool operator==(const Point&, const Point&) = default;
};

struct PointCloud {
  std::vector<Point> points;
  std::string frame_id;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// r is the horizontal distance from the sensor axis, theta the azimuth in
/// [0, 2*pi), z the unchanged height.
struct CylindricalCoord {
  double r = 0.0;
  double theta = 0.0;
  double z = 0.0;
};

inline CylindricalCoord ToCylindrical(double x, double y, double z) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  CylindricalCoord c;
  c.r = std::hypot(x, y);
  c.z = z;
  if (x == 0.0 && y == 0.0) return c;
  double theta = std::atan2(y, x);
  if (theta < 0.0) theta += kTwoPi;
  // A tiny negative angle rounds up to exactly 2*pi; keep it in range.
  if (theta >= kTwoPi) theta = std::nextafter(kTwoPi, 0.0);
  c.theta = theta;
  return c;
}

inline CylindricalCoord ToCylindrical(const Point& p) {
  return ToCylindrical(p.x, p.y, p.z);
}

namespace detail {

inline void PutFloatLE(float value, unsigned char* out) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  for (int b = 0; b < 4; ++b) out[b] = static_cast<unsigned char>(bits >> (8 * b));
}

inline float GetFloatLE(const unsigned char* in) {
  std::uint32_t bits = 0;
  for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(in[b]) << (8 * b);
  return std::bit_cast<float>(bits);
}

}  // namespace detail

inline constexpr std::size_t kKittiRecordBytes = 16;

/// Reads a KITTI velodyne .bin frame: packed little-endian binary32 records
/// (x, y, z, intensity), no header.
inline PointCloud LoadKittiBin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) Fail(ErrorKind::kIoError, "read failed: " + path.string());
  if (bytes.size() % kKittiRecordBytes != 0) {
    Fail(ErrorKind::kMalformedFile,
         path.string() + ": byte count " + std::to_string(bytes.size()) +
             " is not a multiple of 16");
  }
  PointCloud cloud;
  cloud.frame_id = path.filename().string();
  const std::size_t n = bytes.size() / kKittiRecordBytes;
  cloud.points.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* rec = bytes.data() + i * kKittiRecordBytes;
    Point& p = cloud.points[i];
    p.x = detail::GetFloatLE(rec);
    p.y = detail::GetFloatLE(rec + 4);
    p.z = detail::GetFloatLE(rec + 8);
    p.intensity = detail::GetFloatLE(rec + 12);
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
        !std::isfinite(p.intensity)) {
      Fail(ErrorKind::kMalformedFile,
           path.string() + ": non-finite value in point " + std::to_string(i));
    }
  }
  return cloud;
}

inline std::vector<unsigned char> EncodeKittiBin(const PointCloud& cloud) {
  std::vector<unsigned char> bytes(cloud.size() * kKittiRecordBytes);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    unsigned char* rec = bytes.data() + i * kKittiRecordBytes;
    const Point& p = cloud.points[i];
    detail::PutFloatLE(p.x, rec);
    detail::PutFloatLE(p.y, rec + 4);
    detail::PutFloatLE(p.z, rec + 8);
    detail::PutFloatLE(p.intensity, rec + 12);
  }
  return bytes;
}

inline void SaveKittiBin(const PointCloud& cloud, const std::filesystem::path& path) {
  const auto bytes = EncodeKittiBin(cloud);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIoError, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIoError, "write failed: " + path.string());
}

/// Parameters of a synthetic frame: a flat ground plane at z = 0 plus
/// axis-aligned boxes standing on it, observed by a spinning multi-beam
/// sensor mounted at sensor_height.
struct SceneSpec {
  double ground_extent = 18.0;  // maximum horizontal range [m]
  int box_count = 6;
  double box_size_min = 1.0;  // [m]
  double box_size_max = 4.0;  // [m]
  bool occlusion = true;
  std::uint64_t seed = 0;

  double sensor_height = 1.8;  // [m]
  int beams = 32;
  double elevation_min_deg = -30.0;
  double elevation_max_deg = 5.0;
  int azimuth_steps = 720;
  double ground_noise = 0.02;  // ground points have z in [0, ground_noise)
  double range_noise = 0.01;   // [m] std-dev along the ray for box returns
};

namespace detail {

struct Box {
  std::array<double, 3> lo;
  std::array<double, 3> hi;
};

// Slab test; returns the entry distance along the ray or -1 on a miss.
inline double RayBoxEntry(const std::array<double, 3>& origin,
                          const std::array<double, 3>& dir, const Box& box) {
  double t_near = 0.0;
  double t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-15) {
      if (origin[a] < box.lo[a] || origin[a] > box.hi[a]) return -1.0;
      continue;
    }
    double t0 = (box.lo[a] - origin[a]) / dir[a];
    double t1 = (box.hi[a] - origin[a]) / dir[a];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return -1.0;
  }
  return t_near > 0.0 ? t_near : -1.0;
}

inline void ValidateSceneSpec(const SceneSpec& spec) {
  auto bad = [](const std::string& what) { Fail(ErrorKind::kInvalidSpec, what); };
  if (!(spec.ground_extent > 0.0)) bad("ground_extent must be positive");
  if (spec.box_count < 0) bad("box_count must be non-negative");
  if (!(spec.box_size_min > 0.0) || spec.box_size_max < spec.box_size_min) {
    bad("box size range must satisfy 0 < min <= max");
  }
  if (!(spec.sensor_height > 0.0)) bad("sensor_height must be positive");
  if (spec.beams < 1 || spec.azimuth_steps < 1) bad("beam and azimuth counts must be positive");
  if (!(spec.elevation_min_deg < spec.elevation_max_deg)) bad("elevation range is empty");
  if (spec.ground_noise < 0.0 || spec.range_noise < 0.0) bad("noise must be non-negative");
}

}  // namespace detail

/// Ray-casts a synthetic scene. Rays are spaced uniformly in azimuth and
/// elevation, so the return density per steradian is constant and distant
/// surfaces are sampled more sparsely. Pure function of the spec.
inline PointCloud SynthScene(const SceneSpec& spec) {
  detail::ValidateSceneSpec(spec);
  constexpr double kDeg = std::numbers::pi / 180.0;

  Stream layout({rng::kSceneLayout, spec.seed});
  std::vector<detail::Box> boxes;
  boxes.reserve(static_cast<std::size_t>(spec.box_count));
  const double r_lo = std::min(4.0, 0.5 * spec.ground_extent);
  const double r_hi = std::max(r_lo, spec.ground_extent - 1.0);
  for (int b = 0; b < spec.box_count; ++b) {
    const double radius = layout.NextUniform(r_lo, r_hi);
    const double angle = layout.NextUniform(0.0, 2.0 * std::numbers::pi);
    const double sx = layout.NextUniform(spec.box_size_min, spec.box_size_max);
    const double sy = layout.NextUniform(spec.box_size_min, spec.box_size_max);
    const double sz = layout.NextUniform(spec.box_size_min,
                                         std::max(spec.box_size_min,
                                                  std::min(spec.box_size_max, 3.0)));
    const double cx = radius * std::cos(angle);
    const double cy = radius * std::sin(angle);
    boxes.push_back({{cx - 0.5 * sx, cy - 0.5 * sy, 0.0}, {cx + 0.5 * sx, cy + 0.5 * sy, sz}});
  }

  PointCloud cloud;
  cloud.frame_id = "synth-" + std::to_string(spec.seed);
  const std::array<double, 3> origin{0.0, 0.0, spec.sensor_height};
  const double elev_step = spec.beams > 1
                               ? (spec.elevation_max_deg - spec.elevation_min_deg) / (spec.beams - 1)
                               : 0.0;
  std::uint64_t ray_id = 0;
  for (int a = 0; a < spec.azimuth_steps; ++a) {
    const double az = 2.0 * std::numbers::pi * a / spec.azimuth_steps;
    for (int e = 0; e < spec.beams; ++e, ++ray_id) {
      const double el = (spec.elevation_min_deg + elev_step * e) * kDeg;
      const std::array<double, 3> dir{std::cos(el) * std::cos(az),
                                      std::cos(el) * std::sin(az), std::sin(el)};
      Stream noise({rng::kSceneNoise, spec.seed, ray_id});

      struct Hit {
        double t;
        bool ground;
      };
      std::vector<Hit> hits;
      if (dir[2] < 0.0) hits.push_back({-origin[2] / dir[2], true});
      for (const auto& box : boxes) {
        const double t = detail::RayBoxEntry(origin, dir, box);
        if (t > 0.0) hits.push_back({t, false});
      }
      std::sort(hits.begin(), hits.end(), [](const Hit& l, const Hit& r) { return l.t < r.t; });
      if (spec.occlusion && hits.size() > 1) hits.resize(1);

      for (const Hit& hit : hits) {
        if (hit.t * std::cos(el) > spec.ground_extent) continue;
        Point p;
        if (hit.ground) {
          p.x = static_cast<float>(hit.t * dir[0]);
          p.y = static_cast<float>(hit.t * dir[1]);
          p.z = static_cast<float>(spec.ground_noise * noise.NextUnit());
          if (p.z > 0.0f && static_cast<double>(p.z) >= spec.ground_noise) {
            p.z = std::nextafter(static_cast<float>(spec.ground_noise), 0.0f);
          }
          p.intensity = static_cast<float>(0.2 + 0.05 * noise.NextUnit());
        } else {
          const double t = hit.t + spec.range_noise * noise.NextNormal();
          p.x = static_cast<float>(origin[0] + t * dir[0]);
          p.y = static_cast<float>(origin[1] + t * dir[1]);
          p.z = static_cast<float>(std::max(0.0, origin[2] + t * dir[2]));
          p.intensity = static_cast<float>(0.5 + 0.3 * noise.NextUnit());
        }
        cloud.points.push_back(p);
      }
    }
  }
  return cloud;
}

}  // namespace rmae

#endif  // RMAE_POINTCLOUD_HPP_
