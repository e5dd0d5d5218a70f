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

#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "rmae/checkpoint.hpp"
#include "rmae/trainer.hpp"
#include "scenes.hpp"

namespace rmae {
namespace {

using testing::CoarseGeometry;
using testing::SmallNet;
using testing::SyntheticFrames;

nn::Gradients SingleGradient(const nn::NetworkParams& net, std::size_t tensor, std::size_t k, double value) {
  auto g = nn::Gradients::ZerosLike(net);
  (*nn::TrainableTensors(g.layers)[tensor])[k] = value;
  return g;
}

TEST(OptimizerTest, AdamFirstStepIsLearningRateTimesSign) {
  for (double grad : {3.0, -0.02, 1e-3}) {
    auto net = nn::MakeNetwork(SmallNet(), 1);
    const auto before = net;
    nn::Optimizer opt(nn::OptimizerConfig{.learning_rate = 1e-3});
    opt.Step(net, SingleGradient(net, 0, 5, grad));
    const double moved = (*nn::TrainableTensors(net.layers)[0])[5] - (*nn::TrainableTensors(before.layers)[0])[5];
    // mhat / sqrt(vhat) = sign(g) exactly, up to epsilon in the denominator.
    EXPECT_NEAR(moved, -1e-3 * (grad > 0 ? 1.0 : -1.0), 1e-3 * 1e-8 / std::abs(grad) + 1e-15);
  }
}

TEST(OptimizerTest, ZeroGradientLeavesParametersUnchanged) {
  for (auto kind : {nn::OptimizerKind::kSgd, nn::OptimizerKind::kAdam}) {
    auto net = nn::MakeNetwork(SmallNet(), 2);
    const auto before = net;
    nn::Optimizer opt(nn::OptimizerConfig{.kind = kind, .learning_rate = 0.1});
    for (int i = 0; i < 3; ++i) opt.Step(net, nn::Gradients::ZerosLike(net));
    EXPECT_EQ(net.layers, before.layers);
    EXPECT_EQ(net.version, before.version + 3);
  }
}

TEST(OptimizerTest, SgdStep) {
  auto net = nn::MakeNetwork(SmallNet(), 3);
  const double w = (*nn::TrainableTensors(net.layers)[1])[0];
  nn::Optimizer opt(nn::OptimizerConfig{.kind = nn::OptimizerKind::kSgd, .learning_rate = 0.5});
  opt.Step(net, SingleGradient(net, 1, 0, 0.25));
  EXPECT_EQ((*nn::TrainableTensors(net.layers)[1])[0], w - 0.125);
}

TrainConfig QuickConfig() {
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 2;
  cfg.seed = 5;
  cfg.mask.num_groups = 36;
  cfg.mask.m = 0.5;
  return cfg;
}

TEST(PretrainTest, ZeroLearningRateKeepsParameters) {
  const auto frames = SyntheticFrames(2, 10);
  TrainConfig cfg = QuickConfig();
  cfg.optimizer.learning_rate = 0.0;
  cfg.fixed_mask = true;
  cfg.batch_size = 1;
  const auto init = nn::MakeNetwork(SmallNet(), 4);
  const auto result = Pretrain(frames, cfg, init);
  // Trainable tensors are untouched; the running statistics still move.
  auto init_layers = init.layers;
  auto trained_layers = result.net.layers;
  const auto a = nn::TrainableTensors(init_layers);
  const auto b = nn::TrainableTensors(trained_layers);
  for (std::size_t t = 0; t < a.size(); ++t) EXPECT_EQ(*a[t], *b[t]);
  ASSERT_EQ(result.loss_history.size(), 3u);
  // With fixed masks and batch size 1 every epoch sees the same inputs; the
  // training-mode forward pass does not read running statistics.
  EXPECT_EQ(result.loss_history[0], result.loss_history[1]);
  EXPECT_EQ(result.loss_history[1], result.loss_history[2]);
}

TEST(PretrainTest, DeterministicRunsAreBitwiseIdentical) {
  const auto frames = SyntheticFrames(3, 20);
  const auto init = nn::MakeNetwork(SmallNet(), 5);
  const auto a = Pretrain(frames, QuickConfig(), init);
  const auto b = Pretrain(frames, QuickConfig(), init);
  EXPECT_EQ(a.loss_history, b.loss_history);
  EXPECT_EQ(nn::EncodeCheckpoint(a.net), nn::EncodeCheckpoint(b.net));
  TrainConfig other = QuickConfig();
  other.seed = 6;
  EXPECT_NE(Pretrain(frames, other, init).loss_history, a.loss_history);
}

TEST(PretrainTest, EmptyInputsAreNoData) {
  const auto init = nn::MakeNetwork(SmallNet(), 6);
  try {
    Pretrain(std::vector<PreparedFrame>{}, QuickConfig(), init);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoData);
  }
  std::vector<PreparedFrame> empty(2);
  for (auto& f : empty) {
    f.grid.geometry = CoarseGeometry();
    f.truth = OccupancyOf(f.grid);
  }
  try {
    Pretrain(empty, QuickConfig(), init);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoData);
  }
}

TEST(PretrainTest, OverfitsOneFrame) {
  const auto frames = SyntheticFrames(1, 30);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 1;
  cfg.seed = 1;
  cfg.mask.num_groups = 36;
  cfg.mask.m = 0.5;
  cfg.optimizer.learning_rate = 1e-2;
  const auto result = Pretrain(frames, cfg, nn::MakeNetwork(SmallNet(), 7));
  const double first = result.loss_history.front(), last = result.loss_history.back();
  EXPECT_LT(last, 0.25 * first) << first << " -> " << last;
}

// ---------------------------------------------------------------------------
// Metrics

TEST(MetricsTest, PerfectPredictionScoresOne) {
  const auto frames = SyntheticFrames(1, 40);
  const auto& truth = frames[0].truth;
  nn::DenseTensor logits(1, {32, 32, 8}, 1);
  for (std::size_t i = 0; i < truth.o.size(); ++i) logits.data[i] = truth.o[i] ? 40.0 : -40.0;
  std::vector<std::size_t> all(truth.o.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto s = ScorePrediction(logits, truth, all, {});
  EXPECT_EQ(s.all.iou(), 1.0);
  EXPECT_EQ(s.all.accuracy(), 1.0);
  EXPECT_LT(s.query_bce, 1e-8);
  EXPECT_EQ(s.masked_region.sites, 0u);
}

TEST(MetricsTest, AllEmptyPredictionScoresZero) {
  const auto frames = SyntheticFrames(1, 41);
  ASSERT_GT(frames[0].truth.occupied_count(), 0u);
  nn::DenseTensor logits(1, {32, 32, 8}, 1);
  std::fill(logits.data.begin(), logits.data.end(), -5.0);
  const auto s = ScorePrediction(logits, frames[0].truth, {0}, {});
  EXPECT_EQ(s.all.iou(), 0.0);
}

TEST(MetricsTest, IouMatchesSetComputation) {
  Stream s(42);
  const auto frames = SyntheticFrames(1, 42);
  const auto& truth = frames[0].truth;
  nn::DenseTensor logits(1, {32, 32, 8}, 1);
  logits.data = testing::RandomVector(logits.data.size(), s, -3.0, 1.0);
  std::vector<char> region(truth.o.size());
  for (auto& r : region) r = s.NextUnit() < 0.4;
  const auto score = ScorePrediction(logits, truth, {1, 2, 3}, region);
  auto set_iou = [&](bool only_region) {
    std::set<std::size_t> pred, real;
    for (std::size_t i = 0; i < truth.o.size(); ++i) {
      if (only_region && !region[i]) continue;
      if (1.0 / (1.0 + std::exp(-logits.data[i])) >= 0.5) pred.insert(i);
      if (truth.o[i]) real.insert(i);
    }
    std::size_t inter = 0;
    for (auto i : pred) inter += real.count(i);
    const std::size_t uni = pred.size() + real.size() - inter;
    return uni ? static_cast<double>(inter) / uni : 1.0;
  };
  EXPECT_DOUBLE_EQ(score.all.iou(), set_iou(false));
  EXPECT_DOUBLE_EQ(score.masked_region.iou(), set_iou(true));
}

TEST(MetricsTest, UnsensedSitesFollowWedges) {
  const auto geom = CoarseGeometry();
  MaskOutcome outcome;
  outcome.selected_groups = {0, 2};
  const auto flags = UnsensedSites(geom, outcome, 4);
  for (std::size_t i = 0; i < flags.size(); ++i) {
    const auto c = geom.Center(geom.CoordOf(i));
    const bool upper = c[1] > 0.0;  // groups 0 and 1
    const bool right = c[0] > 0.0;  // groups 0 and 3
    const int g = upper ? (right ? 0 : 1) : (right ? 3 : 2);
    EXPECT_EQ(flags[i] != 0, g == 1 || g == 3);
  }
}

TEST(EvaluateTest, NoMaskingGivesUndefinedRegionMetrics) {
  const auto frames = SyntheticFrames(2, 50);
  MaskConfig mc;
  mc.m = 0.0;
  const auto r = Evaluate(frames, nn::MakeNetwork(SmallNet(), 8), mc, nn::QueryConfig{});
  EXPECT_TRUE(std::isnan(r.masked_region_iou));
  EXPECT_TRUE(std::isnan(r.masked_region_bce));
  EXPECT_EQ(r.duty, 1.0);
  EXPECT_EQ(CsvNumber(r.masked_region_iou), "n/a");
  EXPECT_GE(r.occupied_iou, 0.0);
  EXPECT_LE(r.occupied_iou, 1.0);
  EXPECT_GE(r.voxel_accuracy, 0.0);
  EXPECT_LE(r.voxel_accuracy, 1.0);
}

TEST(EvaluateTest, FullMaskingScoresWholeGrid) {
  const auto frames = SyntheticFrames(2, 51);
  MaskConfig mc;
  mc.m = 1.0;
  const auto r = Evaluate(frames, nn::MakeNetwork(SmallNet(), 9), mc, nn::QueryConfig{});
  EXPECT_EQ(r.duty, 0.0);
  EXPECT_EQ(r.max_sensed_range, 0.0);
  EXPECT_DOUBLE_EQ(r.masked_region_iou, r.occupied_iou);
}

// ---------------------------------------------------------------------------
// Sweeps

TEST(SweepTest, SpansMapToGroupCounts) {
  EXPECT_EQ(GroupsForSpan(1.0), 360);
  EXPECT_EQ(GroupsForSpan(360.0), 1);
  EXPECT_EQ(GroupsForSpan(7.0), 51);
  EXPECT_THROW(GroupsForSpan(0.0), Error);
  EXPECT_THROW(GroupsForSpan(400.0), Error);
}

TEST(SweepTest, AngularSweepEmitsOneRowPerSpan) {
  const auto frames = SyntheticFrames(2, 60);
  TrainConfig cfg = QuickConfig();
  cfg.epochs = 1;
  cfg.mask.m = 0.8;
  const auto rows = SweepAngularRange(frames, {}, nn::MakeNetwork(SmallNet(), 10), cfg, {1, 5, 15, 45});
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].num_groups, 360);
  EXPECT_EQ(rows[3].num_groups, 8);
  std::ostringstream os;
  WriteSweepCsv(rows, energy::TotalPower(energy::EnergyParams{}), 100.0, os);
  std::string line;
  std::istringstream is(os.str());
  std::getline(is, line);
  EXPECT_EQ(line,
            "m,N_g,span_deg,bce,occupied_iou,masked_region_bce,masked_region_iou,voxel_accuracy,duty,"
            "max_sensed_range,masked_P_total,final_train_loss");
  int n = 0;
  while (std::getline(is, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 11);
    ++n;
  }
  EXPECT_EQ(n, 4);
}

TEST(SweepTest, ZeroRatioRowReportsNotApplicable) {
  const auto frames = SyntheticFrames(1, 61);
  TrainConfig cfg = QuickConfig();
  cfg.epochs = 1;
  const auto rows = SweepMaskingRatio(frames, {}, nn::MakeNetwork(SmallNet(), 11), cfg, {0.0});
  std::ostringstream os;
  WriteSweepCsv(rows, energy::TotalPower(energy::EnergyParams{}), 100.0, os);
  EXPECT_NE(os.str().find(",n/a,n/a,"), std::string::npos) << os.str();
  EXPECT_THROW(SweepMaskingRatio(frames, {}, nn::MakeNetwork(SmallNet(), 11), cfg, {1.2}), Error);
}

TEST(CsvTest, LossHistory) {
  std::ostringstream os;
  WriteLossCsv({0.5, 0.25}, os);
  EXPECT_EQ(os.str(), "epoch,mean_loss\n0,0.5\n1,0.25\n");
}

}  // namespace
}  // namespace rmae
