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

#ifndef RMAE_CHECKPOINT_HPP_
#define RMAE_CHECKPOINT_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "rmae/error.hpp"
#include "rmae/occupancy_net.hpp"

// Checkpoint layout (all integers and reals little-endian):
//
//   "RMAE" | u32 version
//   u32 in_channels | u32 stages | u32 width[stages] | u32 residual
//   u32 layer_count
//   per layer: u32 kind | u32 in | u32 out | u32 stride | i32 skip |
//              f64 epsilon | f64 momentum | u64 size[6]
//   per layer: weights, bias, gamma, beta, running_mean, running_var (f64)

namespace rmae::nn {

inline constexpr char kCheckpointMagic[4] = {'R', 'M', 'A', 'E'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

class Writer {
 public:
  void U32(std::uint32_t v) { Raw(v, 4); }
  void I32(std::int32_t v) { Raw(static_cast<std::uint32_t>(v), 4); }
  void U64(std::uint64_t v) { Raw(v, 8); }
  void F64(double v) { Raw(std::bit_cast<std::uint64_t>(v), 8); }
  void Bytes(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }
  std::vector<unsigned char> Take() { return std::move(out_); }

 private:
  void Raw(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  std::vector<unsigned char> out_;
};

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& in) : in_(in) {}
  std::uint32_t U32() { return static_cast<std::uint32_t>(Raw(4)); }
  std::int32_t I32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(Raw(4))); }
  std::uint64_t U64() { return Raw(8); }
  double F64() { return std::bit_cast<double>(Raw(8)); }
  void Bytes(char* p, std::size_t n) {
    Need(n);
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void Need(std::size_t n) const {
    if (in_.size() - pos_ < n) Fail(ErrorKind::kMalformedFile, "checkpoint is truncated");
  }
  std::uint64_t Raw(int n) {
    Need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::vector<unsigned char>& in_;
  std::size_t pos_ = 0;
};

template <typename L>
auto LayerTensors(L& layer) {
  return std::array{&layer.weights, &layer.bias, &layer.gamma,
                    &layer.beta, &layer.running_mean, &layer.running_var};
}

}  // namespace detail

inline std::vector<unsigned char> EncodeCheckpoint(const NetworkParams& net) {
  detail::Writer w;
  w.Bytes(kCheckpointMagic, 4);
  w.U32(kCheckpointVersion);
  w.U32(static_cast<std::uint32_t>(net.config.in_channels));
  w.U32(static_cast<std::uint32_t>(net.config.encoder_channels.size()));
  for (int c : net.config.encoder_channels) w.U32(static_cast<std::uint32_t>(c));
  w.U32(net.config.residual ? 1 : 0);
  w.U32(static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& l : net.layers) {
    w.U32(static_cast<std::uint32_t>(l.kind));
    w.U32(static_cast<std::uint32_t>(l.in_channels));
    w.U32(static_cast<std::uint32_t>(l.out_channels));
    w.U32(static_cast<std::uint32_t>(l.stride));
    w.I32(l.skip);
    w.F64(l.epsilon);
    w.F64(l.momentum);
    for (const auto* t : detail::LayerTensors(l)) w.U64(t->size());
  }
  for (const auto& l : net.layers)
    for (const auto* t : detail::LayerTensors(l))
      for (double v : *t) w.F64(v);
  return w.Take();
}

inline NetworkParams DecodeCheckpoint(const std::vector<unsigned char>& bytes) {
  detail::Reader r(bytes);
  char magic[4];
  r.Bytes(magic, 4);
  if (std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    Fail(ErrorKind::kMalformedFile, "checkpoint magic is not RMAE");
  }
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    Fail(ErrorKind::kMalformedFile, "unsupported checkpoint version " + std::to_string(version));
  }
  NetworkParams net;
  net.config.in_channels = static_cast<int>(r.U32());
  const std::uint32_t stages = r.U32();
  if (stages > 64) Fail(ErrorKind::kMalformedFile, "implausible stage count");
  net.config.encoder_channels.clear();
  for (std::uint32_t s = 0; s < stages; ++s) net.config.encoder_channels.push_back(static_cast<int>(r.U32()));
  net.config.residual = r.U32() != 0;
  const std::uint32_t count = r.U32();
  if (count > 4096) Fail(ErrorKind::kMalformedFile, "implausible layer count");
  net.layers.resize(count);
  std::vector<std::array<std::uint64_t, 6>> sizes(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto& l = net.layers[i];
    const std::uint32_t kind = r.U32();
    if (kind > static_cast<std::uint32_t>(LayerKind::kDenseConv)) {
      Fail(ErrorKind::kMalformedFile, "unknown layer kind " + std::to_string(kind));
    }
    l.kind = static_cast<LayerKind>(kind);
    l.in_channels = static_cast<int>(r.U32());
    l.out_channels = static_cast<int>(r.U32());
    l.stride = static_cast<int>(r.U32());
    l.skip = r.I32();
    l.epsilon = r.F64();
    l.momentum = r.F64();
    for (auto& s : sizes[i]) {
      s = r.U64();
      if (s > r.remaining() / 8) Fail(ErrorKind::kMalformedFile, "tensor size exceeds file");
    }
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    auto tensors = detail::LayerTensors(net.layers[i]);
    for (std::size_t t = 0; t < tensors.size(); ++t) {
      if (sizes[i][t] > r.remaining() / 8) Fail(ErrorKind::kMalformedFile, "checkpoint is truncated");
      tensors[t]->resize(sizes[i][t]);
      for (double& v : *tensors[t]) v = r.F64();
    }
  }
  if (r.remaining() != 0) Fail(ErrorKind::kMalformedFile, "trailing bytes after checkpoint");
  // Structural check: the manifest must describe the network the config builds.
  NetworkParams expect;
  try {
    expect = MakeNetwork(net.config, 0);
  } catch (const Error& e) {
    Fail(ErrorKind::kMalformedFile, std::string("checkpoint config is invalid: ") + e.what());
  }
  if (expect.layers.size() != net.layers.size()) {
    Fail(ErrorKind::kMalformedFile, "layer manifest does not match the network config");
  }
  for (std::size_t i = 0; i < expect.layers.size(); ++i) {
    const auto& a = expect.layers[i];
    const auto& b = net.layers[i];
    const auto ta = detail::LayerTensors(a);
    const auto tb = detail::LayerTensors(b);
    bool same = a.kind == b.kind && a.in_channels == b.in_channels &&
                a.out_channels == b.out_channels && a.stride == b.stride && a.skip == b.skip;
    for (std::size_t t = 0; t < ta.size(); ++t) same = same && ta[t]->size() == tb[t]->size();
    if (!same) Fail(ErrorKind::kMalformedFile, "layer " + std::to_string(i) + " does not match the network config");
  }
  return net;
}

/// Human-readable sidecar listing layer kinds and tensor shapes.
inline std::string CheckpointManifest(const NetworkParams& net) {
  std::ostringstream out;
  out << "format RMAE " << kCheckpointVersion << "\n";
  out << "in_channels " << net.config.in_channels << "\n";
  out << "encoder_channels";
  for (int c : net.config.encoder_channels) out << ' ' << c;
  out << "\nresidual " << (net.config.residual ? 1 : 0) << "\n";
  out << "layers " << net.layers.size() << "\n";
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    out << i << ' ' << LayerKindName(l.kind) << " in=" << l.in_channels << " out=" << l.out_channels;
    switch (l.kind) {
      case LayerKind::kSparseConv:
      case LayerKind::kDenseDeconv:
      case LayerKind::kDenseConv:
        out << " stride=" << l.stride << " weights=" << kKernel << 'x' << kKernel << 'x' << kKernel
            << 'x' << l.in_channels << 'x' << l.out_channels << " bias=" << l.bias.size();
        break;
      case LayerKind::kBatchNorm:
        out << " gamma=" << l.gamma.size() << " beta=" << l.beta.size()
            << " running_mean=" << l.running_mean.size() << " running_var=" << l.running_var.size();
        break;
      case LayerKind::kResidualAdd:
        out << " skip=" << l.skip;
        break;
      case LayerKind::kRelu:
        break;
    }
    out << "\n";
  }
  return out.str();
}

inline void SaveCheckpoint(const NetworkParams& net, const std::filesystem::path& path) {
  const auto bytes = EncodeCheckpoint(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIoError, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIoError, "write failed: " + path.string());
}

inline NetworkParams LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIoError, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return DecodeCheckpoint(bytes);
}

}  // namespace rmae::nn

#endif  // RMAE_CHECKPOINT_HPP_
