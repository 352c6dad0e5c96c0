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

#include "byoltracin/tracin.h"

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "byoltracin/byol.h"
#include "byoltracin/errors.h"
#include "byoltracin/kernels.h"

namespace byoltracin {
namespace {

void check_rows(const Tensor& t, const char* name, std::size_t batch) {
  if (t.rank() != 2 || t.rows() != batch) {
    throw DimensionError(std::string("tracin: ") + name + " must be [" +
                         std::to_string(batch) + ", *], got " +
                         t.shape_string());
  }
}

void check_norm(std::span<const double> v, const char* name, std::size_t i) {
  const double n = norm2(v);
  if (!(n > kNormFloor)) {
    throw NumericError(std::string("tracin: sample ") + std::to_string(i) +
                       " has degenerate " + name + " (norm " +
                       std::to_string(n) + ")");
  }
}

}  // namespace

void TracInInputs::validate() const {
  const std::size_t b = logits_q.rows();
  if (b < 2) throw DimensionError("tracin: batch needs at least 2 samples");
  check_rows(logits_q, "logits_q", b);
  check_rows(targets_z, "targets_z", b);
  check_rows(activations_a, "activations_a", b);
  if (targets_z.cols() != logits_q.cols()) {
    throw DimensionError("tracin: logits " + logits_q.shape_string() +
                         " and targets " + targets_z.shape_string() +
                         " differ in width");
  }
  if (!std::isfinite(eta) || eta < 0.0) {
    throw ConfigError("tracin: eta must be finite and >= 0");
  }
  for (std::size_t i = 0; i < b; ++i) {
    check_norm(logits_q.row(i), "logits q", i);
    check_norm(targets_z.row(i), "target z", i);
  }
}

TracInMatrix TracInMatrix::masked() const {
  TracInMatrix m = *this;
  for (std::size_t i = 0; i < m.scores.rows(); ++i) {
    m.scores(i, i) = std::numeric_limits<double>::lowest();
  }
  m.self_masked = true;
  return m;
}

std::vector<double> grad_logits(std::span<const double> q,
                                std::span<const double> z) {
  if (q.size() != z.size()) {
    throw DimensionError("grad_logits: q and z differ in length");
  }
  const double qn = norm2(q);
  const double zn = norm2(z);
  if (!(qn > kNormFloor)) throw NumericError("grad_logits: |q| is degenerate");
  if (!(zn > kNormFloor)) throw NumericError("grad_logits: |z| is degenerate");
  const double qz = dot(q, z);
  const double a = qz / (qn * qn * qn * zn);
  const double c = 1.0 / (qn * zn);
  std::vector<double> g(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) g[j] = 2.0 * (a * q[j] - c * z[j]);
  return g;
}

Tensor logit_gradients(const TracInInputs& inputs) {
  inputs.validate();
  const auto b = static_cast<std::int64_t>(inputs.batch());
  const std::size_t n = inputs.logits_q.cols();
  Tensor g = Tensor::zeros(inputs.batch(), n);
#pragma omp parallel for schedule(static) if (b * static_cast<std::int64_t>(n) > 4096)
  for (std::int64_t i = 0; i < b; ++i) {
    const auto row = grad_logits(inputs.logits_q.row(i), inputs.targets_z.row(i));
    std::copy(row.begin(), row.end(), g.row(i).begin());
  }
  return g;
}

Tensor per_sample_last_layer_grad(const TracInInputs& inputs, std::size_t i) {
  if (i >= inputs.batch()) {
    throw ContractError("per_sample_last_layer_grad: index " +
                        std::to_string(i) + " outside batch of " +
                        std::to_string(inputs.batch()));
  }
  const auto g = grad_logits(inputs.logits_q.row(i), inputs.targets_z.row(i));
  const auto a = inputs.activations_a.row(i);
  Tensor out = Tensor::zeros(g.size(), a.size());
  for (std::size_t r = 0; r < g.size(); ++r) {
    for (std::size_t c = 0; c < a.size(); ++c) out(r, c) = g[r] * a[c];
  }
  return out;
}

TracInMatrix pairwise_tracin(const TracInInputs& inputs) {
  const Tensor g = logit_gradients(inputs);
  Tensor gram_g;
  Tensor gram_a;
  kernels::gram(g, gram_g);
  kernels::gram(inputs.activations_a, gram_a);
  TracInMatrix m;
  m.eta = inputs.eta;
  m.scores = std::move(gram_g);
  for (std::size_t j = 0; j < m.scores.size(); ++j) {
    m.scores[j] = inputs.eta * m.scores[j] * gram_a[j];
  }
  return m;
}

double sample_loss(const MlpNetwork& net, const OracleSample& x) {
  const Tensor q = net.infer(x.input);
  return byol_loss(q.row(0), x.target.data());
}

std::vector<double> full_model_gradient(const MlpNetwork& net,
                                        const OracleSample& x) {
  MlpNetwork work = net;
  const Tensor q = work.forward(x.input);
  const auto g = grad_logits(q.row(0), x.target.data());
  const Gradients grads = work.backward(Tensor({1, g.size()}, g));
  std::vector<double> flat;
  for (const Tensor& p : grads.params) {
    flat.insert(flat.end(), p.data().begin(), p.data().end());
  }
  return flat;
}

double idealized_tracin_oracle(const MlpNetwork& model, const OracleSample& x_i,
                               const OracleSample& x_k, int steps, double lr) {
  if (steps < 0) throw ConfigError("idealized_tracin_oracle: steps must be >= 0");
  MlpNetwork work = model;
  SgdState plain(0.0, 0.0);
  double reduction = 0.0;
  for (int t = 0; t < steps; ++t) {
    const double before = sample_loss(work, x_k);
    const Tensor q = work.forward(x_i.input);
    const auto g = grad_logits(q.row(0), x_i.target.data());
    Gradients grads = work.backward(Tensor({1, g.size()}, g));
    auto params = work.parameters();
    plain.step(params, grads.params, lr);
    reduction += before - sample_loss(work, x_k);
  }
  return reduction;
}

double first_order_tracin(const MlpNetwork& model, const OracleSample& x_i,
                          const OracleSample& x_k, double lr) {
  const auto gi = full_model_gradient(model, x_i);
  const auto gk = full_model_gradient(model, x_k);
  return lr * dot(gk, gi);
}

}  // namespace byoltracin
