/*
 * Copyright 2026 The byoltracin Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "byoltracin/optim.h"

#include <cmath>
#include <numbers>
#include <string>

#include "byoltracin/errors.h"

namespace byoltracin {

SgdState::SgdState(double momentum, double weight_decay)
    : momentum_(momentum), weight_decay_(weight_decay) {
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw ConfigError("momentum must be in [0, 1), got " + std::to_string(momentum));
  }
  if (!(weight_decay >= 0.0)) {
    throw ConfigError("weight_decay must be >= 0, got " + std::to_string(weight_decay));
  }
}

void SgdState::step(std::span<Tensor* const> params,
                    std::span<const Tensor> grads, double lr) {
  if (params.size() != grads.size()) {
    throw DimensionError("sgd: " + std::to_string(params.size()) +
                         " parameters but " + std::to_string(grads.size()) +
                         " gradients");
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    throw ConfigError("sgd: learning rate must be finite and >= 0");
  }
  if (buffers_.empty()) {
    for (const Tensor* p : params) buffers_.emplace_back(p->shape());
  }
  if (buffers_.size() != params.size()) {
    throw DimensionError("sgd: optimizer state holds " +
                         std::to_string(buffers_.size()) + " buffers for " +
                         std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    Tensor& buf = buffers_[i];
    if (g.shape() != p.shape() || buf.shape() != p.shape()) {
      throw DimensionError("sgd: parameter " + std::to_string(i) + " " +
                           p.shape_string() + " vs gradient " +
                           g.shape_string());
    }
    if (kCheckedMode && !g.all_finite()) {
      throw NumericError("sgd: non-finite gradient for parameter " +
                         std::to_string(i));
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      buf[j] = momentum_ * buf[j] + g[j] + weight_decay_ * p[j];
      p[j] -= lr * buf[j];
    }
  }
}

double cosine_lr(long step, long total_steps, double base_lr,
                 long warmup_steps) {
  if (total_steps <= 0) throw ConfigError("cosine_lr: total_steps must be > 0");
  if (step < 0 || step > total_steps) {
    throw ConfigError("cosine_lr: step " + std::to_string(step) +
                      " outside [0, " + std::to_string(total_steps) + "]");
  }
  if (warmup_steps < 0 || warmup_steps >= total_steps) {
    throw ConfigError("cosine_lr: warmup_steps must be in [0, total_steps)");
  }
  if (step < warmup_steps) return base_lr;
  const double progress = static_cast<double>(step - warmup_steps) /
                          static_cast<double>(total_steps - warmup_steps);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace byoltracin
