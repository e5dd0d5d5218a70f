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

#ifndef RMAE_OCCUPANCY_LOSS_HPP_
#define RMAE_OCCUPANCY_LOSS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rmae/error.hpp"
#include "rmae/layers.hpp"
#include "rmae/rng.hpp"
#include "rmae/voxelizer.hpp"

namespace rmae::nn {

enum class QueryMode { kAllVoxels, kSphere };

struct QueryConfig {
  QueryMode mode = QueryMode::kAllVoxels;
  double sphere_radius = 2.0;  // [voxels]
  bool balance_empty = false;

  void Validate() const {
    if (mode == QueryMode::kSphere && !(sphere_radius >= 1.0)) {
      Fail(ErrorKind::kInvalidParams, "sphere_radius must be at least 1 in sphere mode");
    }
  }
};

/// Query voxels Q_s as sorted flat indices into the grid. Sphere mode takes
/// the union of balls around the visible (support) voxels. With
/// balance_empty the majority class is subsampled to the minority count;
/// when one class is absent the set is left as is.
inline std::vector<std::size_t> BuildQuerySet(const OccupancyGrid& truth,
                                              std::span<const VoxelCoord> visible,
                                              const QueryConfig& q, std::uint64_t seed = 0) {
  const GridGeometry& g = truth.geometry;
  std::vector<std::size_t> query;
  if (q.mode == QueryMode::kAllVoxels) {
    query.resize(g.voxel_count());
    for (std::size_t i = 0; i < query.size(); ++i) query[i] = i;
  } else {
    const int r = static_cast<int>(std::floor(q.sphere_radius));
    const double r2 = q.sphere_radius * q.sphere_radius;
    std::vector<VoxelCoord> offsets;
    for (int dx = -r; dx <= r; ++dx)
      for (int dy = -r; dy <= r; ++dy)
        for (int dz = -r; dz <= r; ++dz)
          if (dx * dx + dy * dy + dz * dz <= r2) offsets.push_back({dx, dy, dz});
    std::vector<char> in_set(g.voxel_count(), 0);
    for (const auto& v : visible) {
      for (const auto& d : offsets) {
        const VoxelCoord u{v[0] + d[0], v[1] + d[1], v[2] + d[2]};
        if (g.Contains(u)) in_set[g.FlatIndex(u)] = 1;
      }
    }
    for (std::size_t i = 0; i < in_set.size(); ++i)
      if (in_set[i]) query.push_back(i);
  }
  if (q.balance_empty) {
    std::vector<std::size_t> occupied, empty;
    for (std::size_t i : query) (truth.o[i] ? occupied : empty).push_back(i);
    if (!occupied.empty() && !empty.empty()) {
      auto& major = occupied.size() > empty.size() ? occupied : empty;
      const std::size_t keep = std::min(occupied.size(), empty.size());
      Stream stream({rng::kQueryBalance, seed});
      for (std::size_t i = 0; i < keep; ++i) {
        const auto j = i + static_cast<std::size_t>(stream.NextBelow(major.size() - i));
        std::swap(major[i], major[j]);
      }
      major.resize(keep);
      query.clear();
      query.insert(query.end(), occupied.begin(), occupied.end());
      query.insert(query.end(), empty.begin(), empty.end());
      std::sort(query.begin(), query.end());
    }
  }
  return query;
}

/// max(x, 0) - x * o + log(1 + exp(-|x|)): the logistic loss evaluated
/// without forming sigmoid(x).
inline double BceWithLogits(double logit, double target) {
  return std::max(logit, 0.0) - logit * target + std::log1p(std::exp(-std::abs(logit)));
}

inline double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct LossResult {
  double loss = 0.0;
  DenseTensor grad;  // d(loss)/d(logits), zero off the query sets
};

/// Batch occupancy loss: mean over samples of the mean BCE over each
/// sample's query set. truths[b] and queries[b] belong to batch slot b of
/// the logits. Samples with an empty query set throw EmptyQuerySet.
inline LossResult OccupancyLoss(const DenseTensor& logits, std::span<const OccupancyGrid* const> truths,
                                std::span<const std::vector<std::size_t>> queries) {
  if (logits.channels != 1 || static_cast<std::size_t>(logits.batch) != truths.size() ||
      truths.size() != queries.size()) {
    Fail(ErrorKind::kShapeError, "loss inputs disagree on batch size or channels");
  }
  const std::size_t per = SiteCount(1, logits.dims);
  LossResult r;
  r.grad = DenseTensor(logits.batch, logits.dims, 1);
  const double inv_b = 1.0 / static_cast<double>(truths.size());
  for (std::size_t b = 0; b < truths.size(); ++b) {
    const OccupancyGrid& t = *truths[b];
    if (t.o.size() != per || t.geometry.dims != logits.dims) {
      Fail(ErrorKind::kShapeError, "truth dims do not match the prediction");
    }
    const auto& q = queries[b];
    if (q.empty()) Fail(ErrorKind::kEmptyQuerySet, "query set is empty");
    const double inv_q = 1.0 / static_cast<double>(q.size());
    double sum = 0.0;
    for (std::size_t i : q) {
      const double x = logits.data[b * per + i];
      const double o = t.o[i];
      sum += BceWithLogits(x, o);
      r.grad.data[b * per + i] = (Sigmoid(x) - o) * inv_q * inv_b;
    }
    r.loss += sum * inv_q * inv_b;
  }
  return r;
}

inline LossResult OccupancyLoss(const DenseTensor& logits, const OccupancyGrid& truth,
                                const std::vector<std::size_t>& query) {
  const OccupancyGrid* t = &truth;
  return OccupancyLoss(logits, std::span<const OccupancyGrid* const>(&t, 1),
                       std::span<const std::vector<std::size_t>>(&query, 1));
}

}  // namespace rmae::nn

#endif  // RMAE_OCCUPANCY_LOSS_HPP_
