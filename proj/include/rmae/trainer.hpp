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

#ifndef RMAE_TRAINER_HPP_
#define RMAE_TRAINER_HPP_

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "rmae/energy_model.hpp"
#include "rmae/error.hpp"
#include "rmae/occupancy_loss.hpp"
#include "rmae/occupancy_net.hpp"
#include "rmae/optimizer.hpp"
#include "rmae/parallel.hpp"
#include "rmae/pointcloud.hpp"
#include "rmae/radial_mask.hpp"
#include "rmae/rng.hpp"
#include "rmae/voxelizer.hpp"

namespace rmae {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 4;
  nn::OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  MaskConfig mask;
  nn::QueryConfig query;
  bool deterministic = true;
  bool fixed_mask = false;  // reuse the epoch-0 masks every epoch

  void Validate() const {
    if (epochs < 1) Fail(ErrorKind::kInvalidParams, "epochs must be at least 1");
    if (batch_size < 1) Fail(ErrorKind::kInvalidParams, "batch_size must be at least 1");
    if (!(optimizer.learning_rate >= 0.0)) {
      Fail(ErrorKind::kInvalidParams, "learning_rate must be non-negative");
    }
    mask.Validate();
    query.Validate();
  }
};

/// Voxel grid and occupancy target of one frame.
struct PreparedFrame {
  VoxelGrid grid;
  OccupancyGrid truth;
};

inline std::vector<PreparedFrame> PrepareFrames(const std::vector<PointCloud>& frames,
                                                const GridGeometry& geom) {
  std::vector<PreparedFrame> out(frames.size());
  ParallelFor(frames.size(), [&](std::size_t i) {
    out[i].grid = Voxelize(frames[i], geom);
    out[i].truth = OccupancyOf(out[i].grid);
  });
  return out;
}

/// A frame after masking: the visible subset and the query set for the loss.
struct MaskedFrame {
  MaskOutcome outcome;
  VoxelGrid visible;
  std::vector<std::size_t> query;
};

inline MaskedFrame MaskFrame(const PreparedFrame& frame, const MaskConfig& cfg,
                             const nn::QueryConfig& query, std::uint64_t query_seed) {
  MaskedFrame m;
  m.outcome = ApplyMask(frame.grid, cfg);
  m.visible = VisibleGrid(frame.grid, m.outcome);
  m.query = nn::BuildQuerySet(frame.truth, m.outcome.visible_set, query, query_seed);
  return m;
}

inline std::uint64_t EpochMaskSeed(std::uint64_t seed, int epoch, std::size_t frame) {
  return rng::Hash({rng::kEpochMask, seed, static_cast<std::uint64_t>(epoch), frame});
}

inline std::uint64_t EvalMaskSeed(std::uint64_t seed, std::size_t frame) {
  return rng::Hash({rng::kEvalMask, seed, frame});
}

struct TrainResult {
  nn::NetworkParams net;
  std::vector<double> loss_history;  // mean training loss per epoch
};

/// Minimises the occupancy loss with fresh masks every epoch (unless
/// fixed_mask). The update step is serial and batches are assembled in the
/// shuffled order, so the run is reproducible for a fixed config.
inline TrainResult Pretrain(const std::vector<PreparedFrame>& frames, const TrainConfig& cfg,
                            nn::NetworkParams net) {
  cfg.Validate();
  if (frames.empty()) Fail(ErrorKind::kNoData, "no training frames");
  std::size_t non_empty = 0;
  for (const auto& f : frames) non_empty += f.grid.empty() ? 0 : 1;
  if (non_empty == 0) Fail(ErrorKind::kNoData, "every frame voxelizes to an empty grid");

  nn::Optimizer opt(cfg.optimizer);
  TrainResult result;
  std::vector<std::size_t> order(frames.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Stream shuffle({rng::kShuffle, cfg.seed, static_cast<std::uint64_t>(epoch)});
    shuffle.Shuffle(order);

    const int mask_epoch = cfg.fixed_mask ? 0 : epoch;
    std::vector<MaskedFrame> masked(frames.size());
    ParallelFor(frames.size(), [&](std::size_t fi) {
      MaskConfig mc = cfg.mask;
      mc.seed = EpochMaskSeed(cfg.seed, mask_epoch, fi);
      masked[fi] = MaskFrame(frames[fi], mc, cfg.query, mc.seed);
    });

    double weighted = 0.0;
    std::size_t counted = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const VoxelGrid*> inputs;
      std::vector<const OccupancyGrid*> truths;
      std::vector<std::vector<std::size_t>> queries;
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t fi = order[k];
        if (masked[fi].query.empty()) continue;  // sphere mode with nothing visible
        inputs.push_back(&masked[fi].visible);
        truths.push_back(&frames[fi].truth);
        queries.push_back(masked[fi].query);
      }
      if (inputs.empty()) continue;
      const nn::SparseFeatureMap input = nn::MakeInput(inputs);
      nn::ForwardCache cache;
      const nn::OccupancyPrediction pred = nn::Forward(net, input, true, &cache);
      const nn::LossResult loss = nn::OccupancyLoss(pred.logits, truths, queries);
      const nn::Gradients grads = nn::Backward(net, cache, loss.grad);
      opt.Step(net, grads);
      nn::ApplyRunningStats(net, cache);
      weighted += loss.loss * static_cast<double>(inputs.size());
      counted += inputs.size();
    }
    result.loss_history.push_back(counted ? weighted / static_cast<double>(counted)
                                          : std::numeric_limits<double>::quiet_NaN());
  }
  result.net = std::move(net);
  return result;
}

inline TrainResult Pretrain(const std::vector<PointCloud>& frames, const GridGeometry& geom,
                            const TrainConfig& cfg, nn::NetworkParams net) {
  if (frames.empty()) Fail(ErrorKind::kNoData, "no training frames");
  return Pretrain(PrepareFrames(frames, geom), cfg, std::move(net));
}

// ---------------------------------------------------------------------------
// Evaluation

/// Confusion counts and BCE sums over a set of sites.
struct RegionScore {
  std::size_t sites = 0;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  std::size_t correct = 0;
  double bce_sum = 0.0;

  void Add(double logit, std::uint8_t truth) {
    const bool predicted = nn::Sigmoid(logit) >= 0.5;
    ++sites;
    bce_sum += nn::BceWithLogits(logit, truth);
    if (predicted && truth) ++true_positive;
    else if (predicted) ++false_positive;
    else if (truth) ++false_negative;
    if (predicted == (truth != 0)) ++correct;
  }
  void Merge(const RegionScore& o) {
    sites += o.sites;
    true_positive += o.true_positive;
    false_positive += o.false_positive;
    false_negative += o.false_negative;
    correct += o.correct;
    bce_sum += o.bce_sum;
  }
  /// Occupied-class IoU; an empty union counts as perfect agreement.
  double iou() const {
    const std::size_t uni = true_positive + false_positive + false_negative;
    return uni == 0 ? 1.0 : static_cast<double>(true_positive) / static_cast<double>(uni);
  }
  double bce() const {
    return sites ? bce_sum / static_cast<double>(sites) : std::numeric_limits<double>::quiet_NaN();
  }
  double accuracy() const {
    return sites ? static_cast<double>(correct) / static_cast<double>(sites)
                 : std::numeric_limits<double>::quiet_NaN();
  }
};

struct FrameScore {
  RegionScore all;
  RegionScore masked_region;
  double query_bce = 0.0;
};

/// Scores one prediction. masked_sites flags the grid cells whose wedge was
/// never sensed; an empty span means no such cells.
inline FrameScore ScorePrediction(const nn::DenseTensor& logits, const OccupancyGrid& truth,
                                  const std::vector<std::size_t>& query,
                                  std::span<const char> masked_sites) {
  FrameScore s;
  for (std::size_t i = 0; i < truth.o.size(); ++i) {
    s.all.Add(logits.data[i], truth.o[i]);
    if (!masked_sites.empty() && masked_sites[i]) s.masked_region.Add(logits.data[i], truth.o[i]);
  }
  s.query_bce = nn::OccupancyLoss(logits, truth, query).loss;
  return s;
}

/// Grid cells whose center falls in a wedge outside G_s.
inline std::vector<char> UnsensedSites(const GridGeometry& geom, const MaskOutcome& outcome,
                                       int num_groups) {
  std::vector<char> flags(geom.voxel_count(), 0);
  for (std::size_t i = 0; i < flags.size(); ++i) {
    const int g = AssignAngularGroup(VoxelCylindrical(geom, geom.CoordOf(i)), num_groups);
    flags[i] = outcome.IsSelected(g) ? 0 : 1;
  }
  return flags;
}

struct EvalReport {
  double bce = 0.0;
  double occupied_iou = 0.0;
  double masked_region_bce = std::numeric_limits<double>::quiet_NaN();  // NaN = n/a
  double masked_region_iou = std::numeric_limits<double>::quiet_NaN();
  double voxel_accuracy = 0.0;
  double duty = 0.0;              // mean sensed-wedge fraction
  double max_sensed_range = 0.0;  // mean over frames [m]
  std::size_t frames = 0;
};

inline EvalReport Evaluate(const std::vector<PreparedFrame>& frames, const nn::NetworkParams& net,
                           const MaskConfig& mask_cfg, const nn::QueryConfig& query_cfg) {
  if (frames.empty()) Fail(ErrorKind::kNoData, "no evaluation frames");
  std::size_t non_empty = 0;
  for (const auto& f : frames) non_empty += f.grid.empty() ? 0 : 1;
  if (non_empty == 0) Fail(ErrorKind::kNoData, "every frame voxelizes to an empty grid");
  mask_cfg.Validate();

  std::vector<FrameScore> scores(frames.size());
  std::vector<MaskStats> stats(frames.size());
  std::vector<char> query_empty(frames.size(), 0);
  ParallelFor(frames.size(), [&](std::size_t fi) {
    MaskConfig mc = mask_cfg;
    mc.seed = EvalMaskSeed(mask_cfg.seed, fi);
    const MaskedFrame m = MaskFrame(frames[fi], mc, query_cfg, mc.seed);
    stats[fi] = m.outcome.stats;
    const VoxelGrid* input_grid = &m.visible;
    const nn::SparseFeatureMap input = nn::MakeInput(std::span<const VoxelGrid* const>(&input_grid, 1));
    const nn::OccupancyPrediction pred = nn::Forward(net, input, false);
    const auto unsensed = UnsensedSites(frames[fi].grid.geometry, m.outcome, mc.num_groups);
    if (m.query.empty()) {
      query_empty[fi] = 1;
      std::vector<std::size_t> all(frames[fi].truth.o.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      scores[fi] = ScorePrediction(pred.logits, frames[fi].truth, all, unsensed);
    } else {
      scores[fi] = ScorePrediction(pred.logits, frames[fi].truth, m.query, unsensed);
    }
  });

  EvalReport report;
  RegionScore all, masked;
  double bce_sum = 0.0;
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    all.Merge(scores[fi].all);
    masked.Merge(scores[fi].masked_region);
    bce_sum += scores[fi].query_bce;
    report.duty += stats[fi].group_visible_fraction;
    report.max_sensed_range += stats[fi].max_sensed_range;
  }
  const double n = static_cast<double>(frames.size());
  report.frames = frames.size();
  report.bce = bce_sum / n;
  report.occupied_iou = all.iou();
  report.voxel_accuracy = all.accuracy();
  report.duty /= n;
  report.max_sensed_range /= n;
  if (masked.sites > 0) {
    report.masked_region_bce = masked.bce();
    report.masked_region_iou = masked.iou();
  }
  return report;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  double m = 0.0;
  int num_groups = 0;
  double span_deg = 0.0;
  EvalReport report;
  std::vector<double> loss_history;
};

inline SweepRow RunSweepPoint(const std::vector<PreparedFrame>& train,
                              const std::vector<PreparedFrame>& eval,
                              const nn::NetworkParams& net_init, TrainConfig cfg) {
  SweepRow row;
  row.m = cfg.mask.m;
  row.num_groups = cfg.mask.num_groups;
  row.span_deg = 360.0 / cfg.mask.num_groups;
  TrainResult trained = Pretrain(train, cfg, net_init);
  row.loss_history = std::move(trained.loss_history);
  row.report = Evaluate(eval.empty() ? train : eval, trained.net, cfg.mask, cfg.query);
  return row;
}

/// Re-trains from the same initial network with the same seeds for every
/// masking ratio and evaluates at that ratio.
inline std::vector<SweepRow> SweepMaskingRatio(const std::vector<PreparedFrame>& train,
                                               const std::vector<PreparedFrame>& eval,
                                               const nn::NetworkParams& net_init,
                                               const TrainConfig& cfg,
                                               const std::vector<double>& ratios) {
  for (double m : ratios) {
    if (!(m >= 0.0 && m <= 1.0)) Fail(ErrorKind::kInvalidParams, "masking ratios must lie in [0,1]");
  }
  std::vector<SweepRow> rows;
  for (double m : ratios) {
    TrainConfig c = cfg;
    c.mask.m = m;
    rows.push_back(RunSweepPoint(train, eval, net_init, c));
  }
  return rows;
}

inline int GroupsForSpan(double span_deg) {
  if (!(span_deg > 0.0) || span_deg > 360.0) {
    Fail(ErrorKind::kInvalidParams, "angular span must lie in (0, 360] degrees");
  }
  return std::max(1, static_cast<int>(std::lround(360.0 / span_deg)));
}

/// Same as SweepMaskingRatio with the wedge count varied instead; the
/// masking ratio stays at cfg.mask.m.
inline std::vector<SweepRow> SweepAngularRange(const std::vector<PreparedFrame>& train,
                                               const std::vector<PreparedFrame>& eval,
                                               const nn::NetworkParams& net_init,
                                               const TrainConfig& cfg,
                                               const std::vector<double>& spans_deg) {
  for (double s : spans_deg) GroupsForSpan(s);
  std::vector<SweepRow> rows;
  for (double s : spans_deg) {
    TrainConfig c = cfg;
    c.mask.num_groups = GroupsForSpan(s);
    if (c.mask.p_drop.size() != 1) {
      Fail(ErrorKind::kInvalidParams, "angular sweeps need a shared p_drop row");
    }
    SweepRow row = RunSweepPoint(train, eval, net_init, c);
    row.span_deg = s;
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV (comma separated, '.' decimal point, LF line endings, header row)

inline std::string CsvNumber(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void WriteLossCsv(const std::vector<double>& history, std::ostream& out) {
  out << "epoch,mean_loss\n";
  for (std::size_t e = 0; e < history.size(); ++e) out << e << ',' << CsvNumber(history[e]) << '\n';
}

inline void WriteSweepCsv(const std::vector<SweepRow>& rows, const energy::EnergyReport& energy,
                          double R_design, std::ostream& out) {
  out << "m,N_g,span_deg,bce,occupied_iou,masked_region_bce,masked_region_iou,voxel_accuracy,"
         "duty,max_sensed_range,masked_P_total,final_train_loss\n";
  for (const auto& r : rows) {
    const auto frugal = energy::FrugalSavings(energy, r.report.duty, r.report.max_sensed_range, R_design);
    out << CsvNumber(r.m) << ',' << r.num_groups << ',' << CsvNumber(r.span_deg) << ','
        << CsvNumber(r.report.bce) << ',' << CsvNumber(r.report.occupied_iou) << ','
        << CsvNumber(r.report.masked_region_bce) << ',' << CsvNumber(r.report.masked_region_iou) << ','
        << CsvNumber(r.report.voxel_accuracy) << ',' << CsvNumber(r.report.duty) << ','
        << CsvNumber(r.report.max_sensed_range) << ',' << CsvNumber(frugal.masked_P_total) << ','
        << CsvNumber(r.loss_history.empty() ? std::numeric_limits<double>::quiet_NaN()
                                            : r.loss_history.back())
        << '\n';
  }
}

}  // namespace rmae

#endif  // RMAE_TRAINER_HPP_
