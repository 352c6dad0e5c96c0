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

#pragma once

#include <span>
#include <vector>

#include "byoltracin/tensor.h"

namespace byoltracin {

// SGD with heavy-ball momentum and L2 weight decay folded into the buffer:
//   buffer <- momentum * buffer + grad + weight_decay * param
//   param  <- param - lr * buffer
class SgdState {
 public:
  SgdState(double momentum = 0.9, double weight_decay = 1e-5);

  double momentum() const { return momentum_; }
  double weight_decay() const { return weight_decay_; }

  // Buffers are created lazily on the first step, one per parameter.
  const std::vector<Tensor>& buffers() const { return buffers_; }
  void set_buffers(std::vector<Tensor> buffers) { buffers_ = std::move(buffers); }

  void step(std::span<Tensor* const> params, std::span<const Tensor> grads,
            double lr);

 private:
  double momentum_;
  double weight_decay_;
  std::vector<Tensor> buffers_;
};

inline void sgd_step(std::span<Tensor* const> params,
                     std::span<const Tensor> grads, SgdState& state,
                     double lr) {
  state.step(params, grads, lr);
}

// Constant `base_lr` for step < warmup_steps, then half-cosine decay reaching
// zero at step == total_steps.
double cosine_lr(long step, long total_steps, double base_lr, long warmup_steps);

}  // namespace byoltracin
