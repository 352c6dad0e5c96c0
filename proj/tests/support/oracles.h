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

// Straight-line reference computations used by the tests. Nothing here calls
// the library's kernels or gradient code, so agreement with the library is a
// genuine cross-check.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "byoltracin/byol.h"
#include "byoltracin/nn.h"
#include "byoltracin/tensor.h"
#include "byoltracin/tracin.h"

namespace byoltracin::testing {

// 2 - 2 cos(q, z) with plain loops.
double naive_byol_loss(std::span<const double> q, std::span<const double> z);

// d/dq of naive_byol_loss by the quotient rule, written independently of
// grad_logits.
std::vector<double> naive_loss_gradient(std::span<const double> q,
                                        std::span<const double> z);

// Central finite differences of `f` at `x` with step `h`.
std::vector<double> central_difference(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h);

// Fourth-order central differences (five-point stencil) of `f` at `x`.
std::vector<double> five_point_difference(
    const std::function<double(std::span<const double>)>& f,
    std::span<const double> x, double h);

// MLP forward pass with triple loops over the network's weights.
Tensor naive_forward(const MlpNetwork& net, const Tensor& x);

// Materializes G_i = g_i a_i^T for every sample and returns
// eta * <G_i, G_k>_F for every pair.
Tensor brute_force_tracin(const TracInInputs& inputs);

// Loss of a single train_step as a function of the flat online parameters
// (encoder, projector, predictor in that order), computed with naive_forward.
double naive_step_loss(const ByolTowers& towers, std::span<const double> online_flat,
                       const BatchViews& batch, const Positives& positives,
                       double lambda, bool symmetrize);

std::vector<double> flat_online(const ByolTowers& towers);
std::vector<double> flat_target(const ByolTowers& towers);

// Expected parameters after one step, derived from finite-difference
// gradients of naive_step_loss, the SGD recurrence and the EMA closed form.
struct StepExpectation {
  std::vector<double> online;
  std::vector<double> target;
  std::vector<double> gradient;
};
StepExpectation naive_train_step(const ByolTowers& towers,
                                 const std::vector<double>& momentum_buffers,
                                 double momentum, double weight_decay,
                                 const BatchViews& batch, const Positives& positives,
                                 const StepParams& params);

// Probability that a uniformly chosen different sample shares the anchor's
// label, averaged over a population with the given labels.
double chance_same_label(std::span<const int> labels);

// Pooled standard deviation sqrt((s_a^2 + s_b^2) / 2).
double pooled_sd(double sd_a, double sd_b);

}  // namespace byoltracin::testing
