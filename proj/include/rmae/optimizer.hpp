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

#ifndef RMAE_OPTIMIZER_HPP_
#define RMAE_OPTIMIZER_HPP_

#include <cmath>
#include <vector>

#include "rmae/error.hpp"
#include "rmae/occupancy_net.hpp"

namespace rmae::nn {

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Optimizer {
 public:
  explicit Optimizer(const OptimizerConfig& cfg) : cfg_(cfg) {}

  void Step(NetworkParams& net, const Gradients& grads) {
    auto params = TrainableTensors(net.layers);
    auto g = TrainableTensors(grads.layers);
    if (params.size() != g.size()) Fail(ErrorKind::kShapeError, "gradient set does not match parameters");
    if (cfg_.kind == OptimizerKind::kAdam && m_.empty()) {
      for (auto* p : params) {
        m_.emplace_back(p->size(), 0.0);
        v_.emplace_back(p->size(), 0.0);
      }
    }
    ++t_;
    const double lr = cfg_.learning_rate;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      std::vector<double>& p = *params[i];
      const std::vector<double>& gi = *g[i];
      if (p.size() != gi.size()) Fail(ErrorKind::kShapeError, "gradient tensor shape mismatch");
      if (cfg_.kind == OptimizerKind::kSgd) {
        for (std::size_t k = 0; k < p.size(); ++k) p[k] -= lr * gi[k];
        continue;
      }
      auto& m = m_[i];
      auto& v = v_[i];
      for (std::size_t k = 0; k < p.size(); ++k) {
        m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * gi[k];
        v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * gi[k] * gi[k];
        const double mhat = m[k] / bc1;
        const double vhat = v[k] / bc2;
        p[k] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
      }
    }
    ++net.version;
  }

  long step_count() const { return t_; }

 private:
  OptimizerConfig cfg_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long t_ = 0;
};

}  // namespace rmae::nn

#endif  // RMAE_OPTIMIZER_HPP_
