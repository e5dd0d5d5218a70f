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

#ifndef RMAE_OCCUPANCY_NET_HPP_
#define RMAE_OCCUPANCY_NET_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rmae/error.hpp"
#include "rmae/layers.hpp"
#include "rmae/rng.hpp"
#include "rmae/voxelizer.hpp"

namespace rmae::nn {

/// Encoder stage s maps encoder_channels[s-1] -> encoder_channels[s] with a
/// stride-2 sparse convolution, then (optionally) a submanifold residual
/// block. The decoder mirrors the widths back down to one logit channel with
/// one transposed convolution per stage.
struct NetworkConfig {
  int in_channels = kDefaultFeatureWidth;
  std::vector<int> encoder_channels{16, 32, 64};
  bool residual = true;

  int stages() const { return static_cast<int>(encoder_channels.size()); }
  int latent_width() const { return encoder_channels.empty() ? 0 : encoder_channels.back(); }
  int downsample() const { return 1 << stages(); }

  void Validate() const {
    if (in_channels < 1) Fail(ErrorKind::kInvalidParams, "network in_channels must be positive");
    if (encoder_channels.empty()) Fail(ErrorKind::kInvalidParams, "network needs at least one stage");
    for (int c : encoder_channels)
      if (c < 1) Fail(ErrorKind::kInvalidParams, "encoder widths must be positive");
  }

  /// Throws ShapeError unless every dim is divisible by 2^stages.
  void CheckGeometry(const Dims& dims) const {
    for (int a = 0; a < 3; ++a) {
      if (dims[a] <= 0 || dims[a] % downsample() != 0) {
        Fail(ErrorKind::kShapeError, "grid " + DimsString(dims) + " is not divisible by " +
                                         std::to_string(downsample()));
      }
    }
  }

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct NetworkParams {
  NetworkConfig config;
  std::vector<LayerParams> layers;  // declaration order = execution order
  // Bumped on every parameter update; a forward cache is only valid for the
  // version it was produced with. Not serialized.
  std::uint64_t version = 0;
};

/// He-normal initialisation, deterministic in the seed.
inline NetworkParams MakeNetwork(const NetworkConfig& config, std::uint64_t seed) {
  config.Validate();
  NetworkParams net;
  net.config = config;
  auto& L = net.layers;
  int width = config.in_channels;
  for (int s = 0; s < config.stages(); ++s) {
    const int out = config.encoder_channels[static_cast<std::size_t>(s)];
    L.push_back(MakeConvLayer(LayerKind::kSparseConv, width, out, 2, false));
    L.push_back(MakeBatchNormLayer(out));
    L.push_back(LayerParams{.kind = LayerKind::kRelu, .in_channels = out, .out_channels = out});
    if (config.residual) {
      const int block_input = static_cast<int>(L.size()) - 1;
      L.push_back(MakeConvLayer(LayerKind::kSparseConv, out, out, 1, false));
      L.push_back(MakeBatchNormLayer(out));
      L.push_back(LayerParams{.kind = LayerKind::kRelu, .in_channels = out, .out_channels = out});
      L.push_back(MakeConvLayer(LayerKind::kSparseConv, out, out, 1, false));
      L.push_back(MakeBatchNormLayer(out));
      L.push_back(LayerParams{.kind = LayerKind::kResidualAdd, .in_channels = out,
                              .out_channels = out, .skip = block_input});
      L.push_back(LayerParams{.kind = LayerKind::kRelu, .in_channels = out, .out_channels = out});
    }
    width = out;
  }
  for (int s = config.stages() - 1; s >= 0; --s) {
    const int out = s > 0 ? config.encoder_channels[static_cast<std::size_t>(s - 1)] : 1;
    const bool last = s == 0;
    L.push_back(MakeConvLayer(LayerKind::kDenseDeconv, width, out, 2, last));
    if (!last) {
      L.push_back(MakeBatchNormLayer(out));
      L.push_back(LayerParams{.kind = LayerKind::kRelu, .in_channels = out, .out_channels = out});
    }
    width = out;
  }

  Stream init({rng::kInit, seed});
  for (auto& layer : L) {
    if (layer.weights.empty()) continue;
    const double stddev = std::sqrt(2.0 / (kTaps * layer.in_channels));
    for (double& w : layer.weights) w = stddev * init.NextNormal();
  }
  return net;
}

/// Packs one sparse sample per visible grid into a batched input map.
inline SparseFeatureMap MakeInput(std::span<const VoxelGrid* const> grids) {
  SparseFeatureMap in;
  in.batch = static_cast<int>(grids.size());
  if (grids.empty()) return in;
  in.dims = grids[0]->geometry.dims;
  in.channels = kDefaultFeatureWidth;
  for (std::size_t b = 0; b < grids.size(); ++b) {
    if (grids[b]->geometry.dims != in.dims) {
      Fail(ErrorKind::kShapeError, "batch members must share grid dims");
    }
    for (const auto& [v, feat] : grids[b]->voxels) {
      if (static_cast<int>(feat.f.size()) != in.channels) {
        Fail(ErrorKind::kShapeError, "voxel feature width mismatch");
      }
      in.coords.push_back({static_cast<int>(b), v[0], v[1], v[2]});
      in.features.insert(in.features.end(), feat.f.begin(), feat.f.end());
    }
  }
  return in;
}

using Activation = std::variant<SparseFeatureMap, DenseTensor>;

inline std::span<const double> Values(const Activation& a) {
  return std::visit([](const auto& t) -> std::span<const double> {
    if constexpr (std::is_same_v<std::decay_t<decltype(t)>, SparseFeatureMap>) return t.features;
    else return t.data;
  }, a);
}

inline int ChannelsOf(const Activation& a) {
  return std::visit([](const auto& t) { return t.channels; }, a);
}

/// Replaces the values of an activation while keeping its layout.
inline Activation WithValues(const Activation& like, std::vector<double> values, int channels) {
  return std::visit([&](const auto& t) -> Activation {
    auto copy = t;
    copy.channels = channels;
    if constexpr (std::is_same_v<std::decay_t<decltype(t)>, SparseFeatureMap>) copy.features = std::move(values);
    else copy.data = std::move(values);
    return copy;
  }, like);
}

/// Everything the backward pass needs from one forward pass.
struct ForwardCache {
  bool valid = false;
  std::uint64_t version = 0;
  bool training = false;
  bool encoder_skipped = false;
  std::size_t decoder_start = 0;  // first dense layer
  std::vector<Activation> acts;   // acts[0] = input, acts[i + 1] = output of layer i
  std::vector<Rulebook> rulebooks;
  std::vector<BatchNormCache> bn;
  DenseTensor latent;  // densified encoder output fed to the decoder
};

struct OccupancyPrediction {
  DenseTensor logits;  // channel 1, grid dims

  double probability(std::size_t i) const {
    const double x = logits.data[i];
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  std::vector<double> probabilities() const {
    std::vector<double> p(logits.data.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = probability(i);
    return p;
  }
};

inline std::size_t DecoderStart(const NetworkParams& net) {
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (net.layers[i].kind == LayerKind::kDenseDeconv) return i;
  }
  Fail(ErrorKind::kShapeError, "network has no decoder");
}

/// Runs the encoder sparsely on the visible sites, densifies the coarse
/// latent (absent sites are zero vectors) and decodes full-resolution
/// logits. Pure in the parameters; running statistics are not touched.
inline OccupancyPrediction Forward(const NetworkParams& net, const SparseFeatureMap& input,
                                   bool training, ForwardCache* cache = nullptr) {
  net.config.CheckGeometry(input.dims);
  if (input.channels != net.config.in_channels && !(input.empty() && input.channels == 0)) {
    Fail(ErrorKind::kShapeError, "input has " + std::to_string(input.channels) +
                                     " channels, network expects " +
                                     std::to_string(net.config.in_channels));
  }
  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c = ForwardCache{};
  c.training = training;
  c.version = net.version;
  c.decoder_start = DecoderStart(net);
  c.rulebooks.resize(net.layers.size());
  c.bn.resize(net.layers.size());
  c.acts.reserve(net.layers.size() + 1);
  c.acts.emplace_back(input);
  c.encoder_skipped = input.empty();

  std::size_t first = 0;
  if (c.encoder_skipped) {
    Dims coarse;
    for (int a = 0; a < 3; ++a) coarse[a] = input.dims[a] / net.config.downsample();
    SparseFeatureMap empty;
    empty.batch = input.batch;
    empty.dims = coarse;
    empty.channels = net.config.latent_width();
    for (std::size_t i = 0; i < c.decoder_start; ++i) c.acts.emplace_back(empty);
    first = c.decoder_start;
  }

  for (std::size_t i = first; i < net.layers.size(); ++i) {
    const LayerParams& layer = net.layers[i];
    const Activation& x = c.acts.back();
    switch (layer.kind) {
      case LayerKind::kSparseConv:
        c.acts.emplace_back(SparseConvForward(std::get<SparseFeatureMap>(x), layer, layer.stride,
                                              &c.rulebooks[i]));
        break;
      case LayerKind::kBatchNorm: {
        const int ch = ChannelsOf(x);
        c.acts.push_back(WithValues(x, BatchNormForward(Values(x), ch, layer, training, &c.bn[i]), ch));
        break;
      }
      case LayerKind::kRelu:
        c.acts.push_back(WithValues(x, Relu(Values(x)), ChannelsOf(x)));
        break;
      case LayerKind::kResidualAdd: {
        const Activation& skip = c.acts[static_cast<std::size_t>(layer.skip) + 1];
        if (x.index() == 0) {
          c.acts.emplace_back(ResidualAdd(std::get<SparseFeatureMap>(x), std::get<SparseFeatureMap>(skip)));
        } else {
          c.acts.push_back(WithValues(x, ResidualAdd(Values(x), Values(skip)), ChannelsOf(x)));
        }
        break;
      }
      case LayerKind::kDenseDeconv:
        if (i == c.decoder_start) {
          c.latent = Densify(std::get<SparseFeatureMap>(x));
          c.acts.emplace_back(DenseDeconvForward(c.latent, layer));
        } else {
          c.acts.emplace_back(DenseDeconvForward(std::get<DenseTensor>(x), layer));
        }
        break;
      case LayerKind::kDenseConv:
        Fail(ErrorKind::kShapeError, "dense_conv is not a network layer");
    }
  }
  c.valid = true;
  OccupancyPrediction pred;
  pred.logits = std::get<DenseTensor>(c.acts.back());
  if (pred.logits.channels != 1 || pred.logits.dims != input.dims) {
    Fail(ErrorKind::kShapeError, "decoder output " + DimsString(pred.logits.dims) +
                                     " does not match input " + DimsString(input.dims));
  }
  return pred;
}

struct LayerGrad {
  std::vector<double> weights;
  std::vector<double> bias;
  std::vector<double> gamma;
  std::vector<double> beta;
};

/// Parameter gradients, shaped like NetworkParams::layers.
struct Gradients {
  std::vector<LayerGrad> layers;

  static Gradients ZerosLike(const NetworkParams& net) {
    Gradients g;
    g.layers.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
      const auto& l = net.layers[i];
      g.layers[i].weights.assign(l.weights.size(), 0.0);
      g.layers[i].bias.assign(l.bias.size(), 0.0);
      g.layers[i].gamma.assign(l.gamma.size(), 0.0);
      g.layers[i].beta.assign(l.beta.size(), 0.0);
    }
    return g;
  }
};

/// Reverse-mode pass from d(loss)/d(logits) back to every parameter.
inline Gradients Backward(const NetworkParams& net, const ForwardCache& c,
                          const DenseTensor& grad_logits) {
  if (!c.valid || c.version != net.version || c.acts.size() != net.layers.size() + 1) {
    Fail(ErrorKind::kStaleCache, "backward needs the cache of a forward pass with these parameters");
  }
  if (grad_logits.data.size() != Values(c.acts.back()).size()) {
    Fail(ErrorKind::kShapeError, "logit gradient does not match the prediction");
  }
  Gradients grads = Gradients::ZerosLike(net);
  // grad[i] is d(loss)/d(acts[i]).
  std::vector<std::vector<double>> grad(c.acts.size());
  grad.back() = grad_logits.data;
  const std::size_t stop = c.encoder_skipped ? c.decoder_start : 0;

  for (std::size_t i = net.layers.size(); i-- > stop;) {
    const LayerParams& layer = net.layers[i];
    const Activation& x = c.acts[i];
    std::vector<double>& gy = grad[i + 1];
    if (gy.empty()) gy.assign(Values(c.acts[i + 1]).size(), 0.0);
    std::vector<double>& gx = grad[i];
    const bool need_input = i > stop;
    if (need_input && gx.empty()) gx.assign(Values(x).size(), 0.0);
    std::span<double> gx_span = need_input ? std::span<double>(gx) : std::span<double>();
    LayerGrad& lg = grads.layers[i];

    switch (layer.kind) {
      case LayerKind::kSparseConv:
        SparseConvBackward(std::get<SparseFeatureMap>(x), layer, c.rulebooks[i], gy, gx_span,
                           lg.weights, lg.bias);
        break;
      case LayerKind::kBatchNorm:
        BatchNormBackward(layer, c.bn[i], ChannelsOf(x), gy, gx_span, lg.gamma, lg.beta);
        break;
      case LayerKind::kRelu:
        if (need_input) ReluBackward(Values(c.acts[i + 1]), gy, gx_span);
        break;
      case LayerKind::kResidualAdd: {
        if (need_input)
          for (std::size_t k = 0; k < gy.size(); ++k) gx[k] += gy[k];
        auto& gs = grad[static_cast<std::size_t>(layer.skip) + 1];
        if (gs.empty()) gs.assign(gy.size(), 0.0);
        for (std::size_t k = 0; k < gy.size(); ++k) gs[k] += gy[k];
        break;
      }
      case LayerKind::kDenseDeconv: {
        DenseTensor gout;
        gout.dims = std::get<DenseTensor>(c.acts[i + 1]).dims;
        gout.batch = std::get<DenseTensor>(c.acts[i + 1]).batch;
        gout.channels = layer.out_channels;
        gout.data = gy;
        if (i == c.decoder_start) {
          std::vector<double> glatent(need_input ? c.latent.data.size() : 0, 0.0);
          DenseDeconvBackward(c.latent, layer, gout, glatent, lg.weights, lg.bias);
          if (need_input) {
            DenseTensor gl = c.latent;
            gl.data = std::move(glatent);
            gx = GatherSparse(gl, std::get<SparseFeatureMap>(x).coords);
          }
        } else {
          DenseDeconvBackward(std::get<DenseTensor>(x), layer, gout, gx_span, lg.weights, lg.bias);
        }
        break;
      }
      case LayerKind::kDenseConv:
        Fail(ErrorKind::kShapeError, "dense_conv is not a network layer");
    }
    gy.clear();
    gy.shrink_to_fit();
  }
  return grads;
}

/// Folds the batch statistics of a training-mode forward pass into the
/// running statistics.
inline void ApplyRunningStats(NetworkParams& net, const ForwardCache& c) {
  if (!c.valid || !c.training) return;
  const std::size_t start = c.encoder_skipped ? c.decoder_start : 0;
  for (std::size_t i = start; i < net.layers.size(); ++i) {
    if (net.layers[i].kind == LayerKind::kBatchNorm) UpdateRunningStats(net.layers[i], c.bn[i]);
  }
}

/// Flat list of views over every trainable tensor, in declaration order.
template <typename Params>
auto TrainableTensors(Params& layers) {
  using Vec = std::conditional_t<std::is_const_v<Params>, const std::vector<double>, std::vector<double>>;
  std::vector<Vec*> out;
  for (auto& l : layers) {
    for (Vec* t : {&l.weights, &l.bias, &l.gamma, &l.beta}) {
      if (!t->empty()) out.push_back(t);
    }
  }
  return out;
}

inline std::size_t ParameterCount(const NetworkParams& net) {
  std::size_t n = 0;
  for (const auto* t : TrainableTensors(net.layers)) n += t->size();
  return n;
}

}  // namespace rmae::nn

#endif  // RMAE_OCCUPANCY_NET_HPP_
