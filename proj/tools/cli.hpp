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

#ifndef RMAE_TOOLS_CLI_HPP_
#define RMAE_TOOLS_CLI_HPP_

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "json.hpp"
#include "rmae/rmae.hpp"

namespace rmae::cli {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

enum class Command { kVoxelize, kMask, kEnergy, kPretrain, kEval, kSweepRatio, kSweepAngle };

inline constexpr std::array<std::pair<Command, std::string_view>, 7> kCommands{{
    {Command::kVoxelize, "voxelize"},
    {Command::kMask, "mask"},
    {Command::kEnergy, "energy"},
    {Command::kPretrain, "pretrain"},
    {Command::kEval, "eval"},
    {Command::kSweepRatio, "sweep-ratio"},
    {Command::kSweepAngle, "sweep-angle"},
}};

inline std::string_view CommandName(Command c) {
  for (const auto& [k, name] : kCommands)
    if (k == c) return name;
  return "?";
}

inline Command ParseCommand(const std::string& name) {
  for (const auto& [k, n] : kCommands)
    if (n == name) return k;
  Fail(ErrorKind::kConfigError, "unknown command '" + name + "'");
}

struct InputConfig {
  std::vector<std::string> kitti;       // training / processing frames
  std::vector<std::string> eval_kitti;  // held-out frames
  int synthetic_frames = 1;             // used when kitti is empty
  int synthetic_eval_frames = 0;        // used when eval_kitti is empty; 0 = evaluate on inputs
  std::string checkpoint;               // eval: network to load
};

struct SweepConfig {
  std::vector<double> ratios{0.5, 0.6, 0.7, 0.8, 0.9, 0.92, 0.95};
  std::vector<double> spans_deg{1.0, 5.0, 15.0, 45.0};
};

struct RunConfig {
  Command command = Command::kEnergy;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  InputConfig input;
  SceneSpec synth;
  GridGeometry grid;
  MaskConfig mask;
  energy::EnergyParams energy;
  nn::NetworkConfig network;
  TrainConfig train;
  SweepConfig sweep;
};

// Synthetic evaluation frames are drawn from seeds far from the training ones.
inline constexpr std::uint64_t kEvalSeedOffset = 1000000;

namespace detail {

inline std::string JsonType(const Json& j) { return j.type_name(); }

/// Reads the keys of one section and remembers which were consumed, so that
/// anything left over can be reported by name.
class Section {
 public:
  Section(const Json& doc, std::string name) : name_(std::move(name)) {
    if (doc.contains(name_)) {
      node_ = &doc[name_];
      if (!node_->is_object()) Fail(ErrorKind::kConfigError, name_ + ": expected an object");
    }
  }

  template <typename T>
  void Get(const std::string& key, T& out) {
    if (node_ == nullptr || !node_->contains(key)) return;
    used_.insert(key);
    const Json& v = (*node_)[key];
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::runtime_error("expected true or false");
        out = v.get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::runtime_error("expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (v.is_number_unsigned()) {
            out = v.get<T>();
          } else if (v.get<long long>() < 0) {
            throw std::runtime_error("expected a non-negative integer");
          } else {
            out = static_cast<T>(v.get<long long>());
          }
        } else {
          out = v.get<T>();
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw std::runtime_error("expected a number");
        out = v.get<T>();
      } else {
        out = v.get<T>();
      }
    } catch (const std::exception& e) {
      Fail(ErrorKind::kConfigError, name_ + "." + key + ": " + e.what() + ", got " + JsonType(v));
    }
  }

  template <typename T, std::size_t N>
  void Get(const std::string& key, std::array<T, N>& out) {
    std::vector<T> v(out.begin(), out.end());
    Get(key, v);
    if (v.size() != N) {
      Fail(ErrorKind::kConfigError, name_ + "." + key + ": expected " + std::to_string(N) + " values");
    }
    std::copy(v.begin(), v.end(), out.begin());
  }

  void Finish() const {
    if (node_ == nullptr) return;
    for (const auto& [key, value] : node_->items()) {
      if (!used_.contains(key)) Fail(ErrorKind::kConfigError, "unknown key '" + name_ + "." + key + "'");
    }
  }

 private:
  std::string name_;
  const Json* node_ = nullptr;
  std::set<std::string> used_;
};

inline void SetDotted(Json& doc, const std::string& path, const Json& value) {
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) Fail(ErrorKind::kConfigError, "malformed override key '" + path + "'");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = Json::object();
    node = &(*node)[part];
    if (!node->is_object()) Fail(ErrorKind::kConfigError, "override '" + path + "' descends into a value");
    start = dot + 1;
  }
}

template <typename F>
void Checked(const std::string& section, F&& validate) {
  try {
    validate();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kConfigError) throw;
    Fail(ErrorKind::kConfigError, section + ": " + e.what());
  }
}

}  // namespace detail

/// Applies "a.b=value" overrides; the value is read as JSON when it parses,
/// otherwise as a plain string.
inline void ApplyOverrides(Json& doc, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      Fail(ErrorKind::kConfigError, "override '" + o + "' is not of the form key=value");
    }
    const std::string key = o.substr(0, eq), text = o.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    detail::SetDotted(doc, key, value);
  }
}

inline Json ReadConfigFile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIoError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    Json doc = Json::parse(ss.str(), nullptr, true, true);
    if (!doc.is_object()) Fail(ErrorKind::kConfigError, "config root must be an object");
    return doc;
  } catch (const Json::parse_error& e) {
    Fail(ErrorKind::kConfigError, "cannot parse " + path.string() + ": " + e.what());
  }
}

inline RunConfig ParseConfig(const Json& doc) {
  using detail::Section;
  RunConfig cfg;
  static const std::set<std::string> kTop{"command", "seed", "input", "synth", "grid", "mask",
                                          "energy", "network", "train", "query", "sweep"};
  for (const auto& [key, value] : doc.items()) {
    if (!kTop.contains(key)) Fail(ErrorKind::kConfigError, "unknown key '" + key + "'");
  }
  if (doc.contains("command")) {
    if (!doc["command"].is_string()) Fail(ErrorKind::kConfigError, "command: expected a string");
    cfg.command = ParseCommand(doc["command"].get<std::string>());
  }
  if (doc.contains("seed")) {
    const Json& s = doc["seed"];
    if (!s.is_number_unsigned()) Fail(ErrorKind::kConfigError, "seed: expected a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }

  Section input(doc, "input");
  input.Get("kitti", cfg.input.kitti);
  input.Get("eval_kitti", cfg.input.eval_kitti);
  input.Get("synthetic_frames", cfg.input.synthetic_frames);
  input.Get("synthetic_eval_frames", cfg.input.synthetic_eval_frames);
  input.Get("checkpoint", cfg.input.checkpoint);
  input.Finish();
  if (cfg.input.synthetic_frames < 0 || cfg.input.synthetic_eval_frames < 0) {
    Fail(ErrorKind::kConfigError, "input: frame counts must be non-negative");
  }

  Section synth(doc, "synth");
  auto& sc = cfg.synth;
  synth.Get("ground_extent", sc.ground_extent);
  synth.Get("box_count", sc.box_count);
  synth.Get("box_size_min", sc.box_size_min);
  synth.Get("box_size_max", sc.box_size_max);
  synth.Get("occlusion", sc.occlusion);
  synth.Get("sensor_height", sc.sensor_height);
  synth.Get("beams", sc.beams);
  synth.Get("elevation_min_deg", sc.elevation_min_deg);
  synth.Get("elevation_max_deg", sc.elevation_max_deg);
  synth.Get("azimuth_steps", sc.azimuth_steps);
  synth.Get("ground_noise", sc.ground_noise);
  synth.Get("range_noise", sc.range_noise);
  synth.Finish();
  detail::Checked("synth", [&] { rmae::detail::ValidateSceneSpec(sc); });

  Section grid(doc, "grid");
  grid.Get("min_corner", cfg.grid.min_corner);
  grid.Get("voxel_size", cfg.grid.voxel_size);
  grid.Get("dims", cfg.grid.dims);
  grid.Finish();
  detail::Checked("grid", [&] { cfg.grid.Validate(); });

  Section mask(doc, "mask");
  auto& mc = cfg.mask;
  mask.Get("N_g", mc.num_groups);
  mask.Get("m", mc.m);
  std::string mode = mc.selection_mode == SelectionMode::kBernoulli ? "bernoulli" : "exact_count";
  mask.Get("selection_mode", mode);
  if (mode == "bernoulli") mc.selection_mode = SelectionMode::kBernoulli;
  else if (mode == "exact_count") mc.selection_mode = SelectionMode::kExactCount;
  else Fail(ErrorKind::kConfigError, "mask.selection_mode must be bernoulli or exact_count");
  mask.Get("r_thresholds", mc.r_thresholds);
  mask.Get("p_drop", mc.p_drop);
  mask.Get("range_drop", mc.range_drop);
  mask.Finish();
  mc.seed = cfg.seed;
  detail::Checked("mask", [&] { mc.Validate(); });

  Section en(doc, "energy");
  auto& ep = cfg.energy;
  en.Get("P_r", ep.P_r);
  en.Get("R", ep.R);
  en.Get("tau", ep.tau);
  en.Get("A_r", ep.A_r);
  en.Get("rho", ep.rho);
  en.Get("eta", ep.eta);
  en.Get("f_pulse", ep.f_pulse);
  en.Get("eta_laser", ep.eta_laser);
  en.Get("V_motor", ep.V_motor);
  en.Get("I_motor", ep.I_motor);
  en.Get("eta_motor", ep.eta_motor);
  en.Get("k_adc", ep.k_adc);
  en.Get("N_bits", ep.N_bits);
  en.Get("P_MCU", ep.P_MCU);
  en.Get("k_signal", ep.k_signal);
  en.Get("N_fft", ep.N_fft);
  en.Get("lambda", ep.lambda);
  en.Get("D_aperture", ep.D_aperture);
  en.Finish();
  detail::Checked("energy", [&] { energy::TotalPower(ep); });

  Section net(doc, "network");
  net.Get("in_channels", cfg.network.in_channels);
  net.Get("encoder_channels", cfg.network.encoder_channels);
  net.Get("residual", cfg.network.residual);
  net.Finish();
  detail::Checked("network", [&] {
    cfg.network.Validate();
    if (cfg.network.in_channels != kDefaultFeatureWidth) {
      Fail(ErrorKind::kInvalidParams, "in_channels must equal the voxel feature width " +
                                          std::to_string(kDefaultFeatureWidth));
    }
    cfg.network.CheckGeometry(cfg.grid.dims);
  });

  Section train(doc, "train");
  auto& tc = cfg.train;
  train.Get("epochs", tc.epochs);
  train.Get("batch_size", tc.batch_size);
  std::string opt = tc.optimizer.kind == nn::OptimizerKind::kAdam ? "adam" : "sgd";
  train.Get("optimizer", opt);
  if (opt == "adam") tc.optimizer.kind = nn::OptimizerKind::kAdam;
  else if (opt == "sgd") tc.optimizer.kind = nn::OptimizerKind::kSgd;
  else Fail(ErrorKind::kConfigError, "train.optimizer must be adam or sgd");
  train.Get("learning_rate", tc.optimizer.learning_rate);
  train.Get("beta1", tc.optimizer.beta1);
  train.Get("beta2", tc.optimizer.beta2);
  train.Get("epsilon", tc.optimizer.epsilon);
  train.Get("deterministic", tc.deterministic);
  train.Get("fixed_mask", tc.fixed_mask);
  train.Finish();

  Section query(doc, "query");
  std::string qmode = tc.query.mode == nn::QueryMode::kAllVoxels ? "all_voxels" : "sphere";
  query.Get("mode", qmode);
  if (qmode == "all_voxels") tc.query.mode = nn::QueryMode::kAllVoxels;
  else if (qmode == "sphere") tc.query.mode = nn::QueryMode::kSphere;
  else Fail(ErrorKind::kConfigError, "query.mode must be all_voxels or sphere");
  query.Get("sphere_radius", tc.query.sphere_radius);
  query.Get("balance_empty", tc.query.balance_empty);
  query.Finish();

  tc.seed = cfg.seed;
  tc.mask = mc;
  detail::Checked("train", [&] { tc.Validate(); });

  Section sweep(doc, "sweep");
  sweep.Get("ratios", cfg.sweep.ratios);
  sweep.Get("spans_deg", cfg.sweep.spans_deg);
  sweep.Finish();
  detail::Checked("sweep", [&] {
    for (double m : cfg.sweep.ratios) {
      if (!(m >= 0.0 && m <= 1.0)) Fail(ErrorKind::kInvalidParams, "ratios must lie in [0,1]");
    }
    for (double s : cfg.sweep.spans_deg) GroupsForSpan(s);
  });
  return cfg;
}

/// Every setting with its resolved value. Feeding this back through
/// ParseConfig reproduces the run.
inline Json ResolvedConfig(const RunConfig& c) {
  Json j;
  j["command"] = std::string(CommandName(c.command));
  j["seed"] = c.seed;
  j["input"] = {{"kitti", c.input.kitti},
                {"eval_kitti", c.input.eval_kitti},
                {"synthetic_frames", c.input.synthetic_frames},
                {"synthetic_eval_frames", c.input.synthetic_eval_frames},
                {"checkpoint", c.input.checkpoint}};
  const auto& s = c.synth;
  j["synth"] = {{"ground_extent", s.ground_extent},   {"box_count", s.box_count},
                {"box_size_min", s.box_size_min},     {"box_size_max", s.box_size_max},
                {"occlusion", s.occlusion},           {"sensor_height", s.sensor_height},
                {"beams", s.beams},                   {"elevation_min_deg", s.elevation_min_deg},
                {"elevation_max_deg", s.elevation_max_deg}, {"azimuth_steps", s.azimuth_steps},
                {"ground_noise", s.ground_noise},     {"range_noise", s.range_noise}};
  j["grid"] = {{"min_corner", c.grid.min_corner}, {"voxel_size", c.grid.voxel_size}, {"dims", c.grid.dims}};
  const auto& m = c.mask;
  j["mask"] = {{"N_g", m.num_groups},
               {"m", m.m},
               {"selection_mode", m.selection_mode == SelectionMode::kBernoulli ? "bernoulli" : "exact_count"},
               {"r_thresholds", m.r_thresholds},
               {"p_drop", m.p_drop},
               {"range_drop", m.range_drop}};
  const auto& e = c.energy;
  j["energy"] = {{"P_r", e.P_r},         {"R", e.R},
                 {"tau", e.tau},         {"A_r", e.A_r},
                 {"rho", e.rho},         {"eta", e.eta},
                 {"f_pulse", e.f_pulse}, {"eta_laser", e.eta_laser},
                 {"V_motor", e.V_motor}, {"I_motor", e.I_motor},
                 {"eta_motor", e.eta_motor}, {"k_adc", e.k_adc},
                 {"N_bits", e.N_bits},   {"P_MCU", e.P_MCU},
                 {"k_signal", e.k_signal}, {"N_fft", e.N_fft},
                 {"lambda", e.lambda},   {"D_aperture", e.D_aperture}};
  j["network"] = {{"in_channels", c.network.in_channels},
                  {"encoder_channels", c.network.encoder_channels},
                  {"residual", c.network.residual}};
  const auto& t = c.train;
  j["train"] = {{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"optimizer", t.optimizer.kind == nn::OptimizerKind::kAdam ? "adam" : "sgd"},
                {"learning_rate", t.optimizer.learning_rate},
                {"beta1", t.optimizer.beta1},
                {"beta2", t.optimizer.beta2},
                {"epsilon", t.optimizer.epsilon},
                {"deterministic", t.deterministic},
                {"fixed_mask", t.fixed_mask}};
  j["query"] = {{"mode", t.query.mode == nn::QueryMode::kAllVoxels ? "all_voxels" : "sphere"},
                {"sphere_radius", t.query.sphere_radius},
                {"balance_empty", t.query.balance_empty}};
  j["sweep"] = {{"ratios", c.sweep.ratios}, {"spans_deg", c.sweep.spans_deg}};
  return j;
}

// ---------------------------------------------------------------------------
// Output

/// Writes through a temporary name in the same directory, then renames, so a
/// failed run never leaves a half-written file in place of an old one.
inline void WriteAtomic(const fs::path& path, const std::string& contents) {
  const fs::path tmp = path.string() + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) Fail(ErrorKind::kIoError, "cannot create " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) Fail(ErrorKind::kIoError, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    Fail(ErrorKind::kIoError, "cannot rename into " + path.string());
  }
}

inline std::string Dump(const Json& j) { return j.dump(2) + "\n"; }

inline Json ToJson(const MaskStats& s) {
  return {{"group_visible_fraction", s.group_visible_fraction},
          {"voxel_visible_fraction", s.voxel_visible_fraction},
          {"per_subgroup_drop_rate", s.per_subgroup_drop_rate},
          {"per_subgroup_count", s.per_subgroup_count},
          {"max_sensed_range", s.max_sensed_range}};
}

inline Json ToJson(const energy::EnergyReport& r) {
  return {{"E_pulse", r.E_pulse},       {"P_laser", r.P_laser},   {"P_scan", r.P_scan},
          {"P_signal", r.P_signal},     {"P_ADC", r.P_ADC},       {"P_MCU", r.P_MCU},
          {"P_control", r.P_control},   {"P_total", r.P_total},   {"delta_R", r.delta_R},
          {"delta_theta", r.delta_theta}, {"f_pulse_required", r.f_pulse_required},
          {"f_s", r.f_s},               {"nyquist_warning", r.nyquist_warning}};
}

inline Json ToJson(const energy::FrugalReport& f) {
  return {{"duty", f.duty},
          {"range_scale", f.range_scale},
          {"masked_P_laser", f.masked_P_laser},
          {"masked_P_signal", f.masked_P_signal},
          {"masked_P_ADC", f.masked_P_ADC},
          {"P_scan", f.P_scan},
          {"P_MCU", f.P_MCU},
          {"masked_P_total", f.masked_P_total}};
}

inline Json MetricOrNull(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

inline Json ToJson(const EvalReport& r) {
  return {{"frames", r.frames},
          {"bce", r.bce},
          {"occupied_iou", r.occupied_iou},
          {"masked_region_bce", MetricOrNull(r.masked_region_bce)},
          {"masked_region_iou", MetricOrNull(r.masked_region_iou)},
          {"voxel_accuracy", r.voxel_accuracy},
          {"duty", r.duty},
          {"max_sensed_range", r.max_sensed_range}};
}

// ---------------------------------------------------------------------------
// Commands

inline std::vector<PointCloud> LoadFrames(const std::vector<std::string>& paths, int synthetic,
                                          const SceneSpec& base, std::uint64_t seed) {
  std::vector<PointCloud> frames;
  if (!paths.empty()) {
    for (const auto& p : paths) {
      frames.push_back(LoadKittiBin(p));
      frames.back().frame_id = p;
    }
    return frames;
  }
  for (int i = 0; i < synthetic; ++i) {
    SceneSpec s = base;
    s.seed = seed + static_cast<std::uint64_t>(i);
    frames.push_back(SynthScene(s));
    frames.back().frame_id = "synthetic:" + std::to_string(s.seed);
  }
  return frames;
}

inline std::vector<PreparedFrame> TrainingFrames(const RunConfig& c) {
  auto frames = PrepareFrames(LoadFrames(c.input.kitti, c.input.synthetic_frames, c.synth, c.seed), c.grid);
  if (frames.empty()) Fail(ErrorKind::kNoData, "no input frames");
  return frames;
}

inline std::vector<PreparedFrame> EvalFrames(const RunConfig& c) {
  return PrepareFrames(
      LoadFrames(c.input.eval_kitti, c.input.synthetic_eval_frames, c.synth, c.seed + kEvalSeedOffset),
      c.grid);
}

inline const PreparedFrame& FirstFrame(const std::vector<PreparedFrame>& frames) {
  if (frames.empty()) Fail(ErrorKind::kNoData, "no input frames");
  return frames.front();
}

inline void RunCommand(const RunConfig& c) {
  const fs::path out(c.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (!fs::is_directory(out)) Fail(ErrorKind::kIoError, "cannot create output directory " + out.string());
  WriteAtomic(out / "resolved_config.json", Dump(ResolvedConfig(c)));

  switch (c.command) {
    case Command::kVoxelize: {
      const auto frames = TrainingFrames(c);
      std::ostringstream os;
      DumpVoxelGrid(FirstFrame(frames).grid, os);
      WriteAtomic(out / "voxels.txt", os.str());
      break;
    }
    case Command::kMask: {
      const auto frames = TrainingFrames(c);
      const auto outcome = ApplyMask(FirstFrame(frames).grid, c.mask);
      std::ostringstream os;
      WriteMaskText(outcome, os);
      WriteAtomic(out / "mask.txt", os.str());
      WriteAtomic(out / "stats.json", Dump(ToJson(outcome.stats)));
      break;
    }
    case Command::kEnergy: {
      const auto report = energy::TotalPower(c.energy);
      Json j = ToJson(report);
      // Expected saving at the configured ratio, assuming the farthest
      // return still reaches the design range.
      j["frugal_expected"] = ToJson(energy::FrugalSavings(report, 1.0 - c.mask.m, c.energy.R, c.energy.R));
      WriteAtomic(out / "energy.json", Dump(j));
      break;
    }
    case Command::kPretrain: {
      const auto frames = TrainingFrames(c);
      const auto result = Pretrain(frames, c.train, nn::MakeNetwork(c.network, c.seed));
      std::ostringstream loss;
      WriteLossCsv(result.loss_history, loss);
      const auto bytes = nn::EncodeCheckpoint(result.net);
      WriteAtomic(out / "loss.csv", loss.str());
      WriteAtomic(out / "checkpoint.rmae", std::string(bytes.begin(), bytes.end()));
      WriteAtomic(out / "checkpoint.manifest.txt", nn::CheckpointManifest(result.net));
      break;
    }
    case Command::kEval: {
      auto frames = EvalFrames(c);
      if (frames.empty()) frames = TrainingFrames(c);
      const nn::NetworkParams net =
          c.input.checkpoint.empty() ? nn::MakeNetwork(c.network, c.seed) : nn::LoadCheckpoint(c.input.checkpoint);
      const auto report = Evaluate(frames, net, c.mask, c.train.query);
      Json j = ToJson(report);
      j["checkpoint"] = c.input.checkpoint.empty() ? Json(nullptr) : Json(c.input.checkpoint);
      WriteAtomic(out / "eval.json", Dump(j));
      break;
    }
    case Command::kSweepRatio:
    case Command::kSweepAngle: {
      const auto frames = TrainingFrames(c);
      const auto eval = EvalFrames(c);
      const auto init = nn::MakeNetwork(c.network, c.seed);
      const auto rows = c.command == Command::kSweepRatio
                            ? SweepMaskingRatio(frames, eval, init, c.train, c.sweep.ratios)
                            : SweepAngularRange(frames, eval, init, c.train, c.sweep.spans_deg);
      std::ostringstream os;
      WriteSweepCsv(rows, energy::TotalPower(c.energy), c.energy.R, os);
      WriteAtomic(out / "sweep.csv", os.str());
      break;
    }
  }
}

inline int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIoError: return 2;
    case ErrorKind::kConfigError: return 3;
    case ErrorKind::kMalformedFile: return 4;
    case ErrorKind::kNoData: return 5;
    default: return 6;
  }
}

/// Categories outside the five reported ones surface as InternalError.
inline ErrorKind ReportedKind(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIoError:
    case ErrorKind::kConfigError:
    case ErrorKind::kMalformedFile:
    case ErrorKind::kNoData:
      return kind;
    default:
      return ErrorKind::kInternalError;
  }
}

struct Invocation {
  std::string command;
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

inline RunConfig Resolve(const Invocation& inv) {
  Json doc = inv.config_path.empty() ? Json::object() : ReadConfigFile(inv.config_path);
  ApplyOverrides(doc, inv.overrides);
  if (!inv.command.empty()) doc["command"] = inv.command;
  if (inv.seed) doc["seed"] = *inv.seed;
  RunConfig cfg = ParseConfig(doc);
  cfg.out_dir = inv.out_dir;
  return cfg;
}

/// Runs one invocation and returns the process exit status. Failures print a
/// single "error: <Category>: <message>" line on err.
inline int Main(const Invocation& inv, std::ostream& err = std::cerr) {
  try {
    RunCommand(Resolve(inv));
    return 0;
  } catch (const Error& e) {
    const ErrorKind kind = ReportedKind(e.kind());
    std::string msg = e.what();
    if (kind != e.kind()) msg = std::string(ErrorKindName(e.kind())) + ": " + msg;
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << ErrorKindName(kind) << ": " << msg << "\n";
    return ExitCode(kind);
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: InternalError: " << msg << "\n";
    return ExitCode(ErrorKind::kInternalError);
  }
}

}  // namespace rmae::cli

#endif  // RMAE_TOOLS_CLI_HPP_
