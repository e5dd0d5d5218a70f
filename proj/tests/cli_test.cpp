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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

namespace rmae::cli {
namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("rmae_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string WriteFile(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name, std::ios::binary) << text;
    return (dir_ / name).string();
  }

  static std::string Slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  int Run(Invocation inv, std::string* err = nullptr) {
    std::ostringstream os;
    const int rc = Main(inv, os);
    if (err) *err = os.str();
    return rc;
  }

  fs::path dir_;
};

// A pre-training setup small enough for unit tests.
std::vector<std::string> TinyTraining() {
  return {"grid.voxel_size=[0.8,0.8,0.8]", "grid.dims=[32,32,8]", "synth.beams=8",
          "synth.azimuth_steps=180",       "network.encoder_channels=[4,8]", "train.epochs=2",
          "input.synthetic_frames=2",      "mask.N_g=36"};
}

TEST_F(CliTest, EmptyDocumentMaterialisesDefaults) {
  const auto cfg = ParseConfig(Json::object());
  EXPECT_EQ(cfg.mask.num_groups, 360);
  EXPECT_EQ(cfg.mask.m, 0.8);
  EXPECT_EQ(cfg.mask.r_thresholds, (std::vector<double>{30.0, 50.0}));
  EXPECT_EQ(cfg.mask.p_drop, (std::vector<std::vector<double>>{{0.0, 0.5, 0.9}}));
  EXPECT_EQ(cfg.train.epochs, 30);
  EXPECT_EQ(cfg.train.batch_size, 4);
  EXPECT_EQ(cfg.train.optimizer.learning_rate, 1e-3);
  EXPECT_EQ(cfg.grid.dims, (std::array<int, 3>{64, 64, 16}));
}

TEST_F(CliTest, OverrideTakesPrecedenceOverFile) {
  Invocation inv;
  inv.command = "mask";
  inv.config_path = WriteFile("c.json", R"({"mask": {"m": 0.5, "N_g": 90}})");
  EXPECT_EQ(Resolve(inv).mask.m, 0.5);
  inv.overrides = {"mask.m=0.9"};
  const auto cfg = Resolve(inv);
  EXPECT_EQ(cfg.mask.m, 0.9);
  EXPECT_EQ(cfg.mask.num_groups, 90);
  EXPECT_EQ(cfg.train.mask.m, 0.9);
}

TEST_F(CliTest, OutOfRangeValueIsConfigError) {
  Invocation inv{.command = "mask", .out_dir = dir_.string(), .overrides = {"mask.m=1.5"}};
  std::string err;
  EXPECT_EQ(Run(inv, &err), 3);
  EXPECT_NE(err.find("m must lie in [0,1]"), std::string::npos) << err;
  EXPECT_EQ(err.rfind("error: ConfigError: ", 0), 0u) << err;
  EXPECT_EQ(std::count(err.begin(), err.end(), '\n'), 1);
}

TEST_F(CliTest, UnknownKeysAreNamed) {
  for (const auto& [doc, key] : std::vector<std::pair<std::string, std::string>>{
           {R"({"mask": {"ratio": 0.5}})", "mask.ratio"},
           {R"({"masks": {}})", "masks"},
           {R"({"train": {"epochs": 2, "lr": 0.1}})", "train.lr"}}) {
    try {
      ParseConfig(Json::parse(doc));
      ADD_FAILURE() << doc;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kConfigError);
      EXPECT_NE(std::string(e.what()).find("'" + key + "'"), std::string::npos) << e.what();
    }
  }
}

TEST_F(CliTest, TypeErrorsAreConfigErrors) {
  for (const char* doc : {R"({"mask": {"m": "high"}})", R"({"train": {"epochs": 2.5}})",
                          R"({"grid": {"dims": [1, 2]}})", R"({"seed": -4})", R"({"command": "fly"})",
                          R"({"network": {"encoder_channels": [8, 8, 8, 8, 8]}})"}) {
    try {
      ParseConfig(Json::parse(doc));
      ADD_FAILURE() << doc;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kConfigError) << doc;
    }
  }
}

TEST_F(CliTest, MissingConfigIsIoError) {
  std::string err;
  EXPECT_EQ(Run(Invocation{.command = "energy", .config_path = (dir_ / "nope.json").string()}, &err), 2);
  EXPECT_EQ(err.rfind("error: IoError: ", 0), 0u) << err;
}

TEST_F(CliTest, MalformedInputIsMalformedFile) {
  const auto bin = WriteFile("bad.bin", std::string(20, '\0'));
  Invocation inv{.command = "voxelize", .out_dir = dir_.string(),
                 .overrides = {"input.kitti=[\"" + bin + "\"]"}};
  std::string err;
  EXPECT_EQ(Run(inv, &err), 4);
  EXPECT_NE(err.find("20"), std::string::npos) << err;

  const auto ckpt = WriteFile("bad.rmae", "RMAE....");
  Invocation ev{.command = "eval", .out_dir = dir_.string(), .overrides = {"input.checkpoint=" + ckpt}};
  EXPECT_EQ(Run(ev), 4);
}

TEST_F(CliTest, EmptyFramesAreNoData) {
  const auto bin = WriteFile("empty.bin", "");
  auto overrides = TinyTraining();
  overrides.push_back("input.kitti=[\"" + bin + "\"]");
  std::string err;
  EXPECT_EQ(Run(Invocation{.command = "pretrain", .out_dir = dir_.string(), .overrides = overrides}, &err), 5);
  EXPECT_EQ(err.rfind("error: NoData: ", 0), 0u) << err;
  EXPECT_FALSE(fs::exists(dir_ / "checkpoint.rmae"));
}

TEST_F(CliTest, MaskWithFullRatioSeesNothing) {
  EXPECT_EQ(Run(Invocation{.command = "mask", .out_dir = dir_.string(), .overrides = {"mask.m=1"}}), 0);
  const auto stats = Json::parse(Slurp(dir_ / "stats.json"));
  EXPECT_EQ(stats["voxel_visible_fraction"].get<double>(), 0.0);
  EXPECT_EQ(stats["max_sensed_range"].get<double>(), 0.0);
  std::istringstream mask(Slurp(dir_ / "mask.txt"));
  std::string line;
  std::size_t n = 0;
  while (std::getline(mask, line)) {
    EXPECT_EQ(line.back(), '0');
    ++n;
  }
  EXPECT_GT(n, 0u);
}

TEST_F(CliTest, EnergyReportMatchesModel) {
  EXPECT_EQ(Run(Invocation{.command = "energy", .out_dir = dir_.string()}), 0);
  const auto j = Json::parse(Slurp(dir_ / "energy.json"));
  const auto r = energy::TotalPower(energy::EnergyParams{});
  EXPECT_EQ(j["P_total"].get<double>(), r.P_total);
  EXPECT_EQ(j["E_pulse"].get<double>(), r.E_pulse);
  EXPECT_EQ(j["P_control"].get<double>(), r.P_ADC + r.P_MCU);
  EXPECT_NEAR(j["E_pulse"].get<double>(), 3.158e-4, 5e-8);
}

TEST_F(CliTest, ResolvedConfigReproducesRun) {
  Invocation inv{.command = "mask", .out_dir = (dir_ / "a").string(), .seed = 77,
                 .overrides = {"mask.m=0.6", "mask.selection_mode=exact_count"}};
  ASSERT_EQ(Run(inv), 0);
  const auto resolved = (dir_ / "a" / "resolved_config.json").string();
  const auto first = Slurp(dir_ / "a" / "mask.txt");
  ASSERT_EQ(Run(Invocation{.command = "", .config_path = resolved, .out_dir = (dir_ / "b").string()}), 0);
  EXPECT_EQ(Slurp(dir_ / "b" / "mask.txt"), first);
  EXPECT_EQ(Slurp(dir_ / "b" / "resolved_config.json"), Slurp(resolved));
}

TEST_F(CliTest, PretrainIsByteReproducible) {
  for (const char* sub : {"a", "b"}) {
    ASSERT_EQ(Run(Invocation{.command = "pretrain", .out_dir = (dir_ / sub).string(), .seed = 3,
                             .overrides = TinyTraining()}),
              0);
  }
  EXPECT_EQ(Slurp(dir_ / "a" / "checkpoint.rmae"), Slurp(dir_ / "b" / "checkpoint.rmae"));
  EXPECT_EQ(Slurp(dir_ / "a" / "loss.csv"), Slurp(dir_ / "b" / "loss.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "a" / "checkpoint.manifest.txt"));
  // The checkpoint feeds eval.
  auto overrides = TinyTraining();
  overrides.push_back("input.checkpoint=" + (dir_ / "a" / "checkpoint.rmae").string());
  ASSERT_EQ(Run(Invocation{.command = "eval", .out_dir = (dir_ / "e").string(), .overrides = overrides}), 0);
  const auto j = Json::parse(Slurp(dir_ / "e" / "eval.json"));
  EXPECT_GE(j["occupied_iou"].get<double>(), 0.0);
  // No temporary files are left behind.
  for (const auto& entry : fs::recursive_directory_iterator(dir_)) {
    EXPECT_EQ(entry.path().string().find(".tmp"), std::string::npos) << entry.path();
  }
}

TEST_F(CliTest, SweepWritesCsv) {
  auto overrides = TinyTraining();
  overrides.push_back("train.epochs=1");
  overrides.push_back("sweep.ratios=[0.0,0.5]");
  ASSERT_EQ(Run(Invocation{.command = "sweep-ratio", .out_dir = dir_.string(), .overrides = overrides}), 0);
  std::istringstream csv(Slurp(dir_ / "sweep.csv"));
  std::string header, row0, row1, extra;
  std::getline(csv, header);
  std::getline(csv, row0);
  std::getline(csv, row1);
  EXPECT_FALSE(std::getline(csv, extra));
  EXPECT_EQ(header.substr(0, 9), "m,N_g,spa");
  EXPECT_NE(row0.find("n/a"), std::string::npos) << row0;
  EXPECT_EQ(row1.find("n/a"), std::string::npos) << row1;
}

}  // namespace
}  // namespace rmae::cli
