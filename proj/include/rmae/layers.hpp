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

#ifndef RMAE_LAYERS_HPP_
#define RMAE_LAYERS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rmae/error.hpp"

namespace rmae::nn {

using Dims = std::array<int, 3>;
using BatchCoord = std::array<int, 4>;  // (batch, ix, iy, iz)

inline constexpr int kKernel = 3;
inline constexpr int kTaps = kKernel * kKernel * kKernel;

inline std::string DimsString(const Dims& d) {
  return std::to_string(d[0]) + "x" + std::to_string(d[1]) + "x" + std::to_string(d[2]);
}

inline std::size_t SiteCount(int batch, const Dims& d) {
  return static_cast<std::size_t>(batch) * d[0] * d[1] * d[2];
}

inline std::size_t SiteIndex(const Dims& d, int b, int x, int y, int z) {
  return ((static_cast<std::size_t>(b) * d[0] + x) * d[1] + y) * d[2] + z;
}

/// Features on a sparse set of lattice sites, one row of `channels` values
/// per site. Rows follow the sorted (batch, ix, iy, iz) order.
struct SparseFeatureMap {
  Dims dims{0, 0, 0};
  int batch = 1;
  int channels = 0;
  std::vector<BatchCoord> coords;
  std::vector<double> features;  // coords.size() x channels

  std::size_t size() const { return coords.size(); }
  bool empty() const { return coords.empty(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * channels, static_cast<std::size_t>(channels)};
  }

  void Validate() const {
    if (features.size() != coords.size() * static_cast<std::size_t>(channels)) {
      Fail(ErrorKind::kShapeError, "sparse map feature count does not match its sites");
    }
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const auto& c = coords[i];
      if (c[0] < 0 || c[0] >= batch || c[1] < 0 || c[1] >= dims[0] || c[2] < 0 ||
          c[2] >= dims[1] || c[3] < 0 || c[3] >= dims[2]) {
        Fail(ErrorKind::kShapeError, "sparse site outside " + DimsString(dims));
      }
      if (i > 0 && !(coords[i - 1] < c)) {
        Fail(ErrorKind::kShapeError, "sparse sites must be sorted and unique");
      }
    }
  }

  /// Dense lookup table from site to row, -1 where absent.
  std::vector<int> RowIndex() const {
    std::vector<int> index(SiteCount(batch, dims), -1);
    for (std::size_t i = 0; i < coords.size(); ++i) {
      const auto& c = coords[i];
      index[SiteIndex(dims, c[0], c[1], c[2], c[3])] = static_cast<int>(i);
    }
    return index;
  }
};

/// Channel-last dense tensor: [batch][x][y][z][channel].
struct DenseTensor {
  Dims dims{0, 0, 0};
  int batch = 1;
  int channels = 0;
  std::vector<double> data;

  DenseTensor() = default;
  DenseTensor(int batch_, const Dims& dims_, int channels_)
      : dims(dims_), batch(batch_), channels(channels_),
        data(SiteCount(batch_, dims_) * static_cast<std::size_t>(channels_), 0.0) {}

  std::size_t sites() const { return SiteCount(batch, dims); }
  double* at(int b, int x, int y, int z) {
    return data.data() + SiteIndex(dims, b, x, y, z) * channels;
  }
  const double* at(int b, int x, int y, int z) const {
    return data.data() + SiteIndex(dims, b, x, y, z) * channels;
  }
};

enum class LayerKind { kSparseConv, kBatchNorm, kRelu, kResidualAdd, kDenseDeconv, kDenseConv };

inline const char* LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kSparseConv: return "sparse_conv";
    case LayerKind::kBatchNorm: return "batch_norm";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kResidualAdd: return "residual_add";
    case LayerKind::kDenseDeconv: return "dense_deconv";
    case LayerKind::kDenseConv: return "dense_conv";
  }
  return "?";
}

/// One layer of the network. Convolution kernels are laid out
/// [tap][in][out] with tap = (dx * 3 + dy) * 3 + dz over offsets -1..1.
struct LayerParams {
  LayerKind kind = LayerKind::kRelu;
  int in_channels = 0;
  int out_channels = 0;
  int stride = 1;
  int skip = -1;  // residual_add: index of the layer whose output is added
  std::vector<double> weights;
  std::vector<double> bias;
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double epsilon = 1e-5;
  double momentum = 0.1;

  double& w(int tap, int in, int out) {
    return weights[(static_cast<std::size_t>(tap) * in_channels + in) * out_channels + out];
  }
  double w(int tap, int in, int out) const {
    return weights[(static_cast<std::size_t>(tap) * in_channels + in) * out_channels + out];
  }

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

inline LayerParams MakeConvLayer(LayerKind kind, int in, int out, int stride, bool with_bias) {
  LayerParams p;
  p.kind = kind;
  p.in_channels = in;
  p.out_channels = out;
  p.stride = stride;
  p.weights.assign(static_cast<std::size_t>(kTaps) * in * out, 0.0);
  if (with_bias) p.bias.assign(static_cast<std::size_t>(out), 0.0);
  return p;
}

inline LayerParams MakeBatchNormLayer(int channels) {
  LayerParams p;
  p.kind = LayerKind::kBatchNorm;
  p.in_channels = p.out_channels = channels;
  p.gamma.assign(static_cast<std::size_t>(channels), 1.0);
  p.beta.assign(static_cast<std::size_t>(channels), 0.0);
  p.running_mean.assign(static_cast<std::size_t>(channels), 0.0);
  p.running_var.assign(static_cast<std::size_t>(channels), 1.0);
  return p;
}

inline void CheckConvLayer(const LayerParams& layer, int input_channels) {
  if (layer.in_channels != input_channels) {
    Fail(ErrorKind::kShapeError, std::string(LayerKindName(layer.kind)) + " expects " +
                                     std::to_string(layer.in_channels) + " channels, got " +
                                     std::to_string(input_channels));
  }
  if (layer.weights.size() !=
      static_cast<std::size_t>(kTaps) * layer.in_channels * layer.out_channels) {
    Fail(ErrorKind::kShapeError, "kernel size does not match 3x3x3 x in x out");
  }
  if (!layer.bias.empty() && layer.bias.size() != static_cast<std::size_t>(layer.out_channels)) {
    Fail(ErrorKind::kShapeError, "bias width does not match output channels");
  }
}

// ---------------------------------------------------------------------------
// Sparse convolution

/// (tap, input row, output row) triples gathered during the forward pass.
struct Rulebook {
  struct Rule {
    int tap;
    int in;
    int out;
  };
  std::vector<Rule> rules;
};

/// Stride 1 is submanifold: output sites are exactly the input sites.
/// Stride 2 is a regular sparse convolution onto the half-resolution
/// lattice; output site o is present iff an input lies in 2o - 1 .. 2o + 1.
inline SparseFeatureMap SparseConvForward(const SparseFeatureMap& input, const LayerParams& layer,
                                          int stride, Rulebook* rulebook = nullptr) {
  CheckConvLayer(layer, input.channels);
  if (stride != 1 && stride != 2) Fail(ErrorKind::kShapeError, "stride must be 1 or 2");
  if (input.features.size() != input.size() * static_cast<std::size_t>(input.channels)) {
    Fail(ErrorKind::kShapeError, "sparse map feature count does not match its sites");
  }
  SparseFeatureMap out;
  out.batch = input.batch;
  out.channels = layer.out_channels;
  if (stride == 2) {
    for (int a = 0; a < 3; ++a) {
      if (input.dims[a] % 2 != 0) {
        Fail(ErrorKind::kShapeError, "stride-2 convolution needs even dims, got " +
                                         DimsString(input.dims));
      }
      out.dims[a] = input.dims[a] / 2;
    }
  } else {
    out.dims = input.dims;
  }
  Rulebook local;
  Rulebook& rb = rulebook ? *rulebook : local;
  rb.rules.clear();
  if (input.empty()) return out;

  const auto in_index = input.RowIndex();
  if (stride == 1) {
    out.coords = input.coords;
  } else {
    std::vector<char> present(SiteCount(out.batch, out.dims), 0);
    for (const auto& c : input.coords) {
      // o = (p + 1 - d) / 2 for taps d in {0, 1, 2}
      int lo[3], hi[3];
      for (int a = 0; a < 3; ++a) {
        const int p = c[a + 1];
        lo[a] = std::max(0, (p + 1 - 2 + 1) / 2);  // ceil((p - 1) / 2)
        hi[a] = std::min(out.dims[a] - 1, (p + 1) / 2);
      }
      for (int x = lo[0]; x <= hi[0]; ++x)
        for (int y = lo[1]; y <= hi[1]; ++y)
          for (int z = lo[2]; z <= hi[2]; ++z) present[SiteIndex(out.dims, c[0], x, y, z)] = 1;
    }
    for (int b = 0; b < out.batch; ++b)
      for (int x = 0; x < out.dims[0]; ++x)
        for (int y = 0; y < out.dims[1]; ++y)
          for (int z = 0; z < out.dims[2]; ++z)
            if (present[SiteIndex(out.dims, b, x, y, z)]) out.coords.push_back({b, x, y, z});
  }

  for (std::size_t o = 0; o < out.coords.size(); ++o) {
    const auto& c = out.coords[o];
    for (int dx = 0; dx < kKernel; ++dx)
      for (int dy = 0; dy < kKernel; ++dy)
        for (int dz = 0; dz < kKernel; ++dz) {
          const int x = stride * c[1] + dx - 1;
          const int y = stride * c[2] + dy - 1;
          const int z = stride * c[3] + dz - 1;
          if (x < 0 || y < 0 || z < 0 || x >= input.dims[0] || y >= input.dims[1] ||
              z >= input.dims[2]) {
            continue;
          }
          const int j = in_index[SiteIndex(input.dims, c[0], x, y, z)];
          if (j >= 0) rb.rules.push_back({(dx * kKernel + dy) * kKernel + dz, j, static_cast<int>(o)});
        }
  }

  const int cin = layer.in_channels;
  const int cout = layer.out_channels;
  out.features.assign(out.coords.size() * static_cast<std::size_t>(cout), 0.0);
  for (const auto& r : rb.rules) {
    const double* src = input.features.data() + static_cast<std::size_t>(r.in) * cin;
    double* dst = out.features.data() + static_cast<std::size_t>(r.out) * cout;
    const double* w = layer.weights.data() + static_cast<std::size_t>(r.tap) * cin * cout;
    for (int a = 0; a < cin; ++a) {
      const double s = src[a];
      if (s == 0.0) continue;
      const double* wa = w + static_cast<std::size_t>(a) * cout;
      for (int k = 0; k < cout; ++k) dst[k] += s * wa[k];
    }
  }
  if (!layer.bias.empty()) {
    for (std::size_t o = 0; o < out.coords.size(); ++o)
      for (int k = 0; k < cout; ++k) out.features[o * cout + k] += layer.bias[k];
  }
  return out;
}

/// Accumulates into grad_input (rows x in) and grad_weights/grad_bias.
inline void SparseConvBackward(const SparseFeatureMap& input, const LayerParams& layer,
                               const Rulebook& rulebook, std::span<const double> grad_output,
                               std::span<double> grad_input, std::span<double> grad_weights,
                               std::span<double> grad_bias) {
  const int cin = layer.in_channels;
  const int cout = layer.out_channels;
  for (const auto& r : rulebook.rules) {
    const double* src = input.features.data() + static_cast<std::size_t>(r.in) * cin;
    const double* g = grad_output.data() + static_cast<std::size_t>(r.out) * cout;
    const double* w = layer.weights.data() + static_cast<std::size_t>(r.tap) * cin * cout;
    double* gw = grad_weights.data() + static_cast<std::size_t>(r.tap) * cin * cout;
    double* gi = grad_input.empty() ? nullptr : grad_input.data() + static_cast<std::size_t>(r.in) * cin;
    for (int a = 0; a < cin; ++a) {
      const double s = src[a];
      const double* wa = w + static_cast<std::size_t>(a) * cout;
      double* gwa = gw + static_cast<std::size_t>(a) * cout;
      double acc = 0.0;
      for (int k = 0; k < cout; ++k) {
        gwa[k] += s * g[k];
        acc += wa[k] * g[k];
      }
      if (gi) gi[a] += acc;
    }
  }
  if (!grad_bias.empty()) {
    const std::size_t rows = grad_output.size() / static_cast<std::size_t>(cout);
    for (std::size_t o = 0; o < rows; ++o)
      for (int k = 0; k < cout; ++k) grad_bias[k] += grad_output[o * cout + k];
  }
}

// ---------------------------------------------------------------------------
// Batch normalization over rows of a (rows x channels) array

struct BatchNormCache {
  std::vector<double> normalized;  // x_hat, rows x channels
  std::vector<double> inv_std;     // per channel
  std::vector<double> batch_mean;
  std::vector<double> batch_var;  // biased
  std::size_t rows = 0;
  bool training = false;
};

inline std::vector<double> BatchNormForward(std::span<const double> input, int channels,
                                            const LayerParams& layer, bool training,
                                            BatchNormCache* cache = nullptr) {
  if (layer.gamma.size() != static_cast<std::size_t>(channels) ||
      layer.beta.size() != static_cast<std::size_t>(channels)) {
    Fail(ErrorKind::kShapeError, "batch_norm width does not match the input channels");
  }
  const std::size_t rows = input.size() / static_cast<std::size_t>(channels);
  if (training && rows == 0) {
    Fail(ErrorKind::kDegenerateBatch, "batch_norm in training mode needs at least one site");
  }
  BatchNormCache local;
  BatchNormCache& c = cache ? *cache : local;
  c.rows = rows;
  c.training = training;
  c.inv_std.assign(static_cast<std::size_t>(channels), 0.0);
  c.batch_mean.assign(static_cast<std::size_t>(channels), 0.0);
  c.batch_var.assign(static_cast<std::size_t>(channels), 0.0);
  std::vector<double> mean(static_cast<std::size_t>(channels));
  if (training) {
    for (std::size_t i = 0; i < rows; ++i)
      for (int k = 0; k < channels; ++k) c.batch_mean[k] += input[i * channels + k];
    for (int k = 0; k < channels; ++k) c.batch_mean[k] /= static_cast<double>(rows);
    for (std::size_t i = 0; i < rows; ++i)
      for (int k = 0; k < channels; ++k) {
        const double d = input[i * channels + k] - c.batch_mean[k];
        c.batch_var[k] += d * d;
      }
    for (int k = 0; k < channels; ++k) {
      c.batch_var[k] /= static_cast<double>(rows);
      mean[k] = c.batch_mean[k];
      c.inv_std[k] = 1.0 / std::sqrt(c.batch_var[k] + layer.epsilon);
    }
  } else {
    for (int k = 0; k < channels; ++k) {
      mean[k] = layer.running_mean[k];
      c.inv_std[k] = 1.0 / std::sqrt(layer.running_var[k] + layer.epsilon);
    }
  }
  std::vector<double> out(input.size());
  c.normalized.resize(input.size());
  for (std::size_t i = 0; i < rows; ++i)
    for (int k = 0; k < channels; ++k) {
      const double xh = (input[i * channels + k] - mean[k]) * c.inv_std[k];
      c.normalized[i * channels + k] = xh;
      out[i * channels + k] = layer.gamma[k] * xh + layer.beta[k];
    }
  return out;
}

inline void BatchNormBackward(const LayerParams& layer, const BatchNormCache& cache, int channels,
                              std::span<const double> grad_output, std::span<double> grad_input,
                              std::span<double> grad_gamma, std::span<double> grad_beta) {
  const std::size_t rows = cache.rows;
  std::vector<double> sum_g(static_cast<std::size_t>(channels), 0.0);
  std::vector<double> sum_gx(static_cast<std::size_t>(channels), 0.0);
  for (std::size_t i = 0; i < rows; ++i)
    for (int k = 0; k < channels; ++k) {
      const double g = grad_output[i * channels + k];
      sum_g[k] += g;
      sum_gx[k] += g * cache.normalized[i * channels + k];
    }
  for (int k = 0; k < channels; ++k) {
    grad_gamma[k] += sum_gx[k];
    grad_beta[k] += sum_g[k];
  }
  if (grad_input.empty()) return;
  const double n = static_cast<double>(rows);
  for (std::size_t i = 0; i < rows; ++i)
    for (int k = 0; k < channels; ++k) {
      const double g = grad_output[i * channels + k];
      const double scale = layer.gamma[k] * cache.inv_std[k];
      if (cache.training) {
        grad_input[i * channels + k] +=
            scale * (g - sum_g[k] / n - cache.normalized[i * channels + k] * sum_gx[k] / n);
      } else {
        grad_input[i * channels + k] += scale * g;
      }
    }
}

/// Running statistics follow the usual momentum rule with the unbiased
/// batch variance.
inline void UpdateRunningStats(LayerParams& layer, const BatchNormCache& cache) {
  if (!cache.training) return;
  const double n = static_cast<double>(cache.rows);
  const double unbias = n > 1.0 ? n / (n - 1.0) : 1.0;
  for (std::size_t k = 0; k < layer.running_mean.size(); ++k) {
    layer.running_mean[k] =
        (1.0 - layer.momentum) * layer.running_mean[k] + layer.momentum * cache.batch_mean[k];
    layer.running_var[k] =
        (1.0 - layer.momentum) * layer.running_var[k] + layer.momentum * cache.batch_var[k] * unbias;
  }
}

// ---------------------------------------------------------------------------
// Elementwise

inline std::vector<double> Relu(std::span<const double> input) {
  std::vector<double> out(input.size());
  for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > 0.0 ? input[i] : 0.0;
  return out;
}

inline void ReluBackward(std::span<const double> output, std::span<const double> grad_output,
                         std::span<double> grad_input) {
  for (std::size_t i = 0; i < output.size(); ++i) {
    if (output[i] > 0.0) grad_input[i] += grad_output[i];
  }
}

inline std::vector<double> ResidualAdd(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) Fail(ErrorKind::kShapeError, "residual operands differ in shape");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

inline SparseFeatureMap ResidualAdd(const SparseFeatureMap& a, const SparseFeatureMap& b) {
  if (a.coords != b.coords || a.channels != b.channels || a.dims != b.dims) {
    Fail(ErrorKind::kShapeError, "residual operands must share support and width");
  }
  SparseFeatureMap out = a;
  out.features = ResidualAdd(a.features, b.features);
  return out;
}

// ---------------------------------------------------------------------------
// Dense stride-2 convolution and its adjoint

/// Scatters zero-filled sparse rows into a dense tensor.
inline DenseTensor Densify(const SparseFeatureMap& map) {
  DenseTensor t(map.batch, map.dims, map.channels);
  for (std::size_t i = 0; i < map.size(); ++i) {
    const auto& c = map.coords[i];
    std::copy_n(map.features.data() + i * map.channels, map.channels, t.at(c[0], c[1], c[2], c[3]));
  }
  return t;
}

inline std::vector<double> GatherSparse(const DenseTensor& t, const std::vector<BatchCoord>& coords) {
  std::vector<double> rows(coords.size() * static_cast<std::size_t>(t.channels));
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const auto& c = coords[i];
    std::copy_n(t.at(c[0], c[1], c[2], c[3]), t.channels, rows.data() + i * t.channels);
  }
  return rows;
}

/// Transposed convolution, stride 2, 3x3x3 kernel, padding 1, output
/// padding 1: each dim doubles. Input site o feeds output 2o + d - 1.
inline DenseTensor DenseDeconvForward(const DenseTensor& input, const LayerParams& layer) {
  CheckConvLayer(layer, input.channels);
  const Dims od{2 * input.dims[0], 2 * input.dims[1], 2 * input.dims[2]};
  DenseTensor out(input.batch, od, layer.out_channels);
  const int cin = layer.in_channels;
  const int cout = layer.out_channels;
  for (int b = 0; b < input.batch; ++b)
    for (int x = 0; x < input.dims[0]; ++x)
      for (int y = 0; y < input.dims[1]; ++y)
        for (int z = 0; z < input.dims[2]; ++z) {
          const double* src = input.at(b, x, y, z);
          for (int dx = 0; dx < kKernel; ++dx) {
            const int px = 2 * x + dx - 1;
            if (px < 0 || px >= od[0]) continue;
            for (int dy = 0; dy < kKernel; ++dy) {
              const int py = 2 * y + dy - 1;
              if (py < 0 || py >= od[1]) continue;
              for (int dz = 0; dz < kKernel; ++dz) {
                const int pz = 2 * z + dz - 1;
                if (pz < 0 || pz >= od[2]) continue;
                double* dst = out.at(b, px, py, pz);
                const double* w = layer.weights.data() +
                                  static_cast<std::size_t>((dx * kKernel + dy) * kKernel + dz) * cin * cout;
                for (int a = 0; a < cin; ++a) {
                  const double s = src[a];
                  if (s == 0.0) continue;
                  const double* wa = w + static_cast<std::size_t>(a) * cout;
                  for (int k = 0; k < cout; ++k) dst[k] += s * wa[k];
                }
              }
            }
          }
        }
  if (!layer.bias.empty()) {
    for (std::size_t s = 0; s < out.sites(); ++s)
      for (int k = 0; k < cout; ++k) out.data[s * cout + k] += layer.bias[k];
  }
  return out;
}

inline void DenseDeconvBackward(const DenseTensor& input, const LayerParams& layer,
                                const DenseTensor& grad_output, std::span<double> grad_input,
                                std::span<double> grad_weights, std::span<double> grad_bias) {
  const Dims& od = grad_output.dims;
  const int cin = layer.in_channels;
  const int cout = layer.out_channels;
  for (int b = 0; b < input.batch; ++b)
    for (int x = 0; x < input.dims[0]; ++x)
      for (int y = 0; y < input.dims[1]; ++y)
        for (int z = 0; z < input.dims[2]; ++z) {
          const double* src = input.at(b, x, y, z);
          double* gi = grad_input.empty()
                           ? nullptr
                           : grad_input.data() + SiteIndex(input.dims, b, x, y, z) * cin;
          for (int dx = 0; dx < kKernel; ++dx) {
            const int px = 2 * x + dx - 1;
            if (px < 0 || px >= od[0]) continue;
            for (int dy = 0; dy < kKernel; ++dy) {
              const int py = 2 * y + dy - 1;
              if (py < 0 || py >= od[1]) continue;
              for (int dz = 0; dz < kKernel; ++dz) {
                const int pz = 2 * z + dz - 1;
                if (pz < 0 || pz >= od[2]) continue;
                const double* g = grad_output.at(b, px, py, pz);
                const std::size_t tap_off =
                    static_cast<std::size_t>((dx * kKernel + dy) * kKernel + dz) * cin * cout;
                const double* w = layer.weights.data() + tap_off;
                double* gw = grad_weights.data() + tap_off;
                for (int a = 0; a < cin; ++a) {
                  const double s = src[a];
                  const double* wa = w + static_cast<std::size_t>(a) * cout;
                  double* gwa = gw + static_cast<std::size_t>(a) * cout;
                  double acc = 0.0;
                  for (int k = 0; k < cout; ++k) {
                    if (s != 0.0) gwa[k] += s * g[k];
                    acc += wa[k] * g[k];
                  }
                  if (gi) gi[a] += acc;
                }
              }
            }
          }
        }
  if (!grad_bias.empty()) {
    for (std::size_t s = 0; s < grad_output.sites(); ++s)
      for (int k = 0; k < cout; ++k) grad_bias[k] += grad_output.data[s * cout + k];
  }
}

/// Dense convolution, 3x3x3 kernel, padding 1, stride 1 or 2. With stride 2
/// and the channel axes of the kernel swapped, this is the adjoint of
/// DenseDeconvForward.
inline DenseTensor DenseConvForward(const DenseTensor& input, const LayerParams& layer, int stride) {
  CheckConvLayer(layer, input.channels);
  if (stride != 1 && stride != 2) Fail(ErrorKind::kShapeError, "stride must be 1 or 2");
  Dims od = input.dims;
  if (stride == 2) {
    for (int a = 0; a < 3; ++a) {
      if (input.dims[a] % 2 != 0) {
        Fail(ErrorKind::kShapeError, "stride-2 convolution needs even dims, got " +
                                         DimsString(input.dims));
      }
      od[a] = input.dims[a] / 2;
    }
  }
  DenseTensor out(input.batch, od, layer.out_channels);
  const int cin = layer.in_channels;
  const int cout = layer.out_channels;
  for (int b = 0; b < out.batch; ++b)
    for (int x = 0; x < od[0]; ++x)
      for (int y = 0; y < od[1]; ++y)
        for (int z = 0; z < od[2]; ++z) {
          double* dst = out.at(b, x, y, z);
          for (int dx = 0; dx < kKernel; ++dx) {
            const int px = stride * x + dx - 1;
            if (px < 0 || px >= input.dims[0]) continue;
            for (int dy = 0; dy < kKernel; ++dy) {
              const int py = stride * y + dy - 1;
              if (py < 0 || py >= input.dims[1]) continue;
              for (int dz = 0; dz < kKernel; ++dz) {
                const int pz = stride * z + dz - 1;
                if (pz < 0 || pz >= input.dims[2]) continue;
                const double* src = input.at(b, px, py, pz);
                const double* w = layer.weights.data() +
                                  static_cast<std::size_t>((dx * kKernel + dy) * kKernel + dz) * cin * cout;
                for (int a = 0; a < cin; ++a) {
                  const double* wa = w + static_cast<std::size_t>(a) * cout;
                  for (int k = 0; k < cout; ++k) dst[k] += src[a] * wa[k];
                }
              }
            }
          }
          if (!layer.bias.empty())
            for (int k = 0; k < cout; ++k) dst[k] += layer.bias[k];
        }
  return out;
}

/// Kernel of the convolution adjoint to a transposed-convolution layer.
inline LayerParams AdjointConvOf(const LayerParams& deconv) {
  LayerParams conv = MakeConvLayer(LayerKind::kDenseConv, deconv.out_channels, deconv.in_channels,
                                   2, false);
  for (int t = 0; t < kTaps; ++t)
    for (int a = 0; a < deconv.in_channels; ++a)
      for (int k = 0; k < deconv.out_channels; ++k) conv.w(t, k, a) = deconv.w(t, a, k);
  return conv;
}

}  // namespace rmae::nn

#endif  // RMAE_LAYERS_HPP_
