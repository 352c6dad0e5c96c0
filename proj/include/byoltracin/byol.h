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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "byoltracin/nn.h"
#include "byoltracin/optim.h"
#include "byoltracin/tensor.h"

namespace byoltracin {

// f(q, z) = 2 - 2 <q, z> / (|q| |z|), in [0, 4]. Throws NumericError naming
// the operand whose norm is at or below 1e-12.
double byol_loss(std::span<const double> q, std::span<const double> z);

enum class EmaMode { kConstant, kCosineToOne };

std::string to_string(EmaMode m);
EmaMode ema_mode_from_string(const std::string& s);

// Target decay rate. In cosine-to-one mode
//   tau(s) = 1 - (1 - tau_base) (cos(pi s / total_steps) + 1) / 2,
// which starts at tau_base and reaches exactly 1 at s == total_steps.
struct EmaSchedule {
  double tau_base = 0.99;
  long total_steps = 1;
  EmaMode mode = EmaMode::kCosineToOne;

  double tau(long step) const;
};

// Widths of the five networks. The encoder maps input_dim through
// encoder_widths (the last entry is the representation size); projector and
// predictor are two-layer MLPs ending in embedding_dim.
struct TowerSpec {
  std::size_t input_dim = 32;
  std::vector<std::size_t> encoder_widths = {128, 64};
  std::size_t projector_hidden = 64;
  std::size_t predictor_hidden = 64;
  std::size_t embedding_dim = 32;

  Topology encoder() const;
  Topology projector() const;
  Topology predictor() const;

  friend bool operator==(const TowerSpec&, const TowerSpec&) = default;
};

// Online encoder/projector/predictor and the EMA target encoder/projector.
// The optimizer only ever sees online_parameters(); target parameters move
// through ema_update alone.
struct ByolTowers {
  MlpNetwork online_encoder;
  MlpNetwork online_projector;
  MlpNetwork online_predictor;
  MlpNetwork target_encoder;
  MlpNetwork target_projector;

  // Online towers drawn from `rng`; targets start as copies.
  static ByolTowers create(const TowerSpec& spec, Rng& rng);

  TowerSpec spec() const;
  std::uint64_t topology_hash() const;
  std::uint64_t parameter_hash() const;

  std::vector<Tensor*> online_parameters();
  std::vector<const Tensor*> online_parameters() const;

  // Online path through encoder, projector and predictor, no caching.
  Tensor predict(const Tensor& x) const;
  // Target path through target encoder and projector.
  Tensor target_embed(const Tensor& x) const;
  // Online encoder + projector.
  Tensor online_embed(const Tensor& x) const;

  void reset_counters();
};

// target <- tau * target + (1 - tau) * online, for encoder and projector.
void ema_update(ByolTowers& towers, double tau);

// Four row-aligned views of one mini-batch. Labels are only for evaluation
// and the supervised baseline.
struct BatchViews {
  Tensor view_a;
  Tensor view_b;
  Tensor tracin_view_a;
  Tensor tracin_view_b;
  std::vector<int> labels;

  std::size_t batch() const { return view_a.rows(); }
  bool has_labels() const { return !labels.empty(); }
  void validate() const;
};

// Per-anchor positive indices, row-major [batch, k].
struct Positives {
  std::size_t batch = 0;
  std::size_t k = 0;
  std::vector<std::size_t> index;

  static Positives top1(std::vector<std::size_t> idx);

  bool empty() const { return index.empty(); }
  std::size_t at(std::size_t i, std::size_t j) const { return index[i * k + j]; }
};

struct StepParams {
  double lr = 0.05;
  double tau = 0.99;
  double lambda = 1.0;
  bool symmetrize = true;
};

struct StepReport {
  double loss_main = 0.0;
  double loss_additional = 0.0;
  double loss_total = 0.0;
};

// Everything that evolves during pretraining.
struct TrainState {
  ByolTowers towers;
  SgdState optimizer;
  long step = 0;
};

// One optimization step. For anchor row i with prediction q_i the per-row
// loss is
//   f(q_i, z'_i) + lambda / k * sum_j f(q_i, z'_{p_ij}),
// where z' comes from the target tower on the opposite view. With symmetrize
// the rows of both view orders are pooled and every loss is the mean over
// them. Gradients update the online towers, then the target follows with
// ema_update(params.tau). Empty `positives` trains plain BYOL.
StepReport train_step(TrainState& state, const BatchViews& batch,
                      const Positives& positives, const StepParams& params);

// Loss of train_step without changing any state.
StepReport evaluate_step_loss(const ByolTowers& towers, const BatchViews& batch,
                              const Positives& positives,
                              const StepParams& params);

}  // namespace byoltracin
