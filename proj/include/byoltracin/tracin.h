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

#include "byoltracin/nn.h"
#include "byoltracin/tensor.h"

// Batch-wise TracIn for the BYOL objective.
//
// For a sample with predictor output q = W a + b and target embedding z, the
// BYOL loss f(q) = 2 - 2 <q, z> / (|q| |z|) has weight gradient
// dF/dW = g a^T with g = df/dq. The Frobenius product of two such rank-one
// gradients factors as (g_i . g_k)(a_i . a_k), so the full B x B influence
// matrix is the elementwise product of two Gram matrices and needs only the
// forward-pass quantities q, z and a.
namespace byoltracin {

// Rows whose norm is at or below this value are rejected.
inline constexpr double kNormFloor = 1e-12;

struct TracInInputs {
  Tensor logits_q;       // [B, n] online predictor outputs
  Tensor targets_z;      // [B, n] target tower outputs, treated as constants
  Tensor activations_a;  // [B, m] inputs to the predictor's last linear layer
  double eta = 1.0;      // learning rate at the scoring iteration

  std::size_t batch() const { return logits_q.rows(); }
  // Throws DimensionError / NumericError naming the offending sample.
  void validate() const;
};

struct TracInMatrix {
  Tensor scores;  // [B, B]
  double eta = 0.0;
  bool self_masked = false;

  // Copy with the diagonal set to the lowest representable double.
  TracInMatrix masked() const;
};

// df/dq = 2 (<q,z> q / (|q|^3 |z|) - z / (|q| |z|)).
std::vector<double> grad_logits(std::span<const double> q,
                                std::span<const double> z);

// g_i a_i^T as an [n, m] matrix. Diagnostic path; selection never builds it.
Tensor per_sample_last_layer_grad(const TracInInputs& inputs, std::size_t i);

// All per-sample logit gradients, one row per sample.
Tensor logit_gradients(const TracInInputs& inputs);

// scores[i][k] = eta * (g_i . g_k) * (a_i . a_k).
TracInMatrix pairwise_tracin(const TracInInputs& inputs);

// ---------------------------------------------------------------------------
// Oracles. These materialize gradients or retrain a model and exist to check
// the factorized path above.

struct OracleSample {
  Tensor input;   // [1, d_in]
  Tensor target;  // [n], constant BYOL target
};

// BYOL loss of `net` on one sample.
double sample_loss(const MlpNetwork& net, const OracleSample& x);

// Gradient of sample_loss over every parameter, flattened in parameters()
// order.
std::vector<double> full_model_gradient(const MlpNetwork& net,
                                        const OracleSample& x);

// Trains a copy of `model` with plain SGD on x_i alone for `steps` steps and
// returns the accumulated loss reduction on x_k,
//   sum_t (l(w_t, x_k) - l(w_{t+1}, x_k)).
double idealized_tracin_oracle(const MlpNetwork& model, const OracleSample& x_i,
                               const OracleSample& x_k, int steps, double lr);

// lr * grad l(w, x_k) . grad l(w, x_i) over all parameters.
double first_order_tracin(const MlpNetwork& model, const OracleSample& x_i,
                          const OracleSample& x_k, double lr);

}  // namespace byoltracin
