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

#include "byoltracin/byol.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "byoltracin/errors.h"
#include "byoltracin/tracin.h"

namespace byoltracin {
namespace {

void append(std::vector<Tensor*>& dst, MlpNetwork& net) {
  for (Tensor* p : net.parameters()) dst.push_back(p);
}

void append(std::vector<const Tensor*>& dst, const MlpNetwork& net) {
  for (const Tensor* p : net.parameters()) dst.push_back(p);
}

void ema_blend(MlpNetwork& target, const MlpNetwork& online, double tau) {
  auto tp = target.parameters();
  const auto op = online.parameters();
  if (tp.size() != op.size()) {
    throw DimensionError("ema: target and online towers differ in structure");
  }
  for (std::size_t i = 0; i < tp.size(); ++i) {
    Tensor& t = *tp[i];
    const Tensor& o = *op[i];
    if (t.shape() != o.shape()) {
      throw DimensionError("ema: parameter " + std::to_string(i) + " shape " +
                           t.shape_string() + " vs " + o.shape_string());
    }
    for (std::size_t j = 0; j < t.size(); ++j) {
      t[j] = tau * t[j] + (1.0 - tau) * o[j];
    }
  }
}

void check_positives(const Positives& positives, std::size_t batch) {
  if (positives.empty()) return;
  if (positives.batch != batch || positives.k == 0 || positives.k >= batch ||
      positives.index.size() != batch * positives.k) {
    throw ContractError("positives must be [" + std::to_string(batch) +
                        ", k] with 1 <= k < batch");
  }
  for (std::size_t i = 0; i < batch; ++i) {
    for (std::size_t j = 0; j < positives.k; ++j) {
      const std::size_t p = positives.at(i, j);
      if (p >= batch) {
        throw ContractError("positive index " + std::to_string(p) +
                            " out of range for anchor " + std::to_string(i));
      }
      if (p == i) {
        throw ContractError("anchor " + std::to_string(i) +
                            " selected itself as positive");
      }
    }
  }
}

struct StackedViews {
  Tensor online_input;
  Tensor target_input;
};

StackedViews stack_views(const BatchViews& batch, bool symmetrize) {
  if (!symmetrize) return {batch.view_a, batch.view_b};
  return {Tensor::concat_rows(batch.view_a, batch.view_b),
          Tensor::concat_rows(batch.view_b, batch.view_a)};
}

// Per-row losses and, when `grad` is non-null, df/dq for every row. Row r of
// `q` pairs with row r of `z`; its extra positives live in the same half of
// `z` at the positive's sample index.
StepReport row_losses(const Tensor& q, const Tensor& z, std::size_t batch,
                      const Positives& positives, double lambda,
                      Tensor* grad) {
  const std::size_t rows = q.rows();
  const bool with_extra = !positives.empty();
  const bool extra_grad = with_extra && lambda != 0.0;
  double main_sum = 0.0;
  double extra_sum = 0.0;
  if (grad) *grad = Tensor::zeros(rows, q.cols());
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t sample = r % batch;
    const std::size_t half = r / batch;
    main_sum += byol_loss(q.row(r), z.row(r));
    if (grad) {
      const auto g = grad_logits(q.row(r), z.row(r));
      std::copy(g.begin(), g.end(), grad->row(r).begin());
    }
    if (!with_extra) continue;
    const double w = 1.0 / static_cast<double>(positives.k);
    double row_extra = 0.0;
    for (std::size_t j = 0; j < positives.k; ++j) {
      const std::size_t t = half * batch + positives.at(sample, j);
      row_extra += byol_loss(q.row(r), z.row(t));
      if (grad && extra_grad) {
        const auto g = grad_logits(q.row(r), z.row(t));
        auto out = grad->row(r);
        for (std::size_t c = 0; c < g.size(); ++c) out[c] += lambda * w * g[c];
      }
    }
    extra_sum += w * row_extra;
  }
  StepReport report;
  report.loss_main = main_sum / static_cast<double>(rows);
  report.loss_additional = with_extra ? extra_sum / static_cast<double>(rows) : 0.0;
  report.loss_total = report.loss_main + lambda * report.loss_additional;
  return report;
}

}  // namespace

double byol_loss(std::span<const double> q, std::span<const double> z) {
  if (q.size() != z.size()) {
    throw DimensionError("byol_loss: q has " + std::to_string(q.size()) +
                         " entries, z has " + std::to_string(z.size()));
  }
  const double qn = norm2(q);
  const double zn = norm2(z);
  if (!(qn > kNormFloor)) throw NumericError("byol_loss: |q| is degenerate");
  if (!(zn > kNormFloor)) throw NumericError("byol_loss: |z| is degenerate");
  const double cos = std::clamp(dot(q, z) / (qn * zn), -1.0, 1.0);
  return 2.0 - 2.0 * cos;
}

std::string to_string(EmaMode m) {
  return m == EmaMode::kConstant ? "constant" : "cosine-to-one";
}

EmaMode ema_mode_from_string(const std::string& s) {
  if (s == "constant") return EmaMode::kConstant;
  if (s == "cosine-to-one") return EmaMode::kCosineToOne;
  throw ConfigError("unknown ema_mode '" + s +
                    "' (expected constant or cosine-to-one)");
}

double EmaSchedule::tau(long step) const {
  if (mode == EmaMode::kConstant || total_steps <= 0) return tau_base;
  const long s = std::clamp(step, 0L, total_steps);
  if (s == total_steps) return 1.0;
  const double progress = static_cast<double>(s) / static_cast<double>(total_steps);
  return 1.0 - (1.0 - tau_base) * (std::cos(std::numbers::pi * progress) + 1.0) / 2.0;
}

Topology TowerSpec::encoder() const {
  Topology t;
  t.widths.push_back(input_dim);
  t.widths.insert(t.widths.end(), encoder_widths.begin(), encoder_widths.end());
  return t;
}

Topology TowerSpec::projector() const {
  return Topology{{encoder_widths.back(), projector_hidden, embedding_dim}};
}

Topology TowerSpec::predictor() const {
  return Topology{{embedding_dim, predictor_hidden, embedding_dim}};
}

ByolTowers ByolTowers::create(const TowerSpec& spec, Rng& rng) {
  if (spec.encoder_widths.empty()) {
    throw ConfigError("model.encoder_widths must name at least one layer");
  }
  MlpNetwork enc(spec.encoder());
  MlpNetwork proj(spec.projector());
  MlpNetwork pred(spec.predictor());
  enc.initialize(rng);
  proj.initialize(rng);
  pred.initialize(rng);
  return ByolTowers{enc, proj, pred, enc, proj};
}

TowerSpec ByolTowers::spec() const {
  TowerSpec s;
  const auto& ew = online_encoder.topology().widths;
  s.input_dim = ew.front();
  s.encoder_widths.assign(ew.begin() + 1, ew.end());
  s.projector_hidden = online_projector.topology().widths[1];
  s.embedding_dim = online_projector.output_dim();
  s.predictor_hidden = online_predictor.topology().widths[1];
  return s;
}

std::uint64_t ByolTowers::topology_hash() const {
  std::uint64_t h = 0;
  for (const MlpNetwork* n : {&online_encoder, &online_projector,
                              &online_predictor, &target_encoder,
                              &target_projector}) {
    h = byoltracin::topology_hash(n->topology(), h);
  }
  return h;
}

std::uint64_t ByolTowers::parameter_hash() const {
  std::uint64_t h = 0;
  for (const MlpNetwork* n : {&online_encoder, &online_projector,
                              &online_predictor, &target_encoder,
                              &target_projector}) {
    h = mix64(h ^ byoltracin::parameter_hash(*n));
  }
  return h;
}

std::vector<Tensor*> ByolTowers::online_parameters() {
  std::vector<Tensor*> out;
  append(out, online_encoder);
  append(out, online_projector);
  append(out, online_predictor);
  return out;
}

std::vector<const Tensor*> ByolTowers::online_parameters() const {
  std::vector<const Tensor*> out;
  append(out, online_encoder);
  append(out, online_projector);
  append(out, online_predictor);
  return out;
}

Tensor ByolTowers::predict(const Tensor& x) const {
  return online_predictor.infer(online_projector.infer(online_encoder.infer(x)));
}

Tensor ByolTowers::target_embed(const Tensor& x) const {
  return target_projector.infer(target_encoder.infer(x));
}

Tensor ByolTowers::online_embed(const Tensor& x) const {
  return online_projector.infer(online_encoder.infer(x));
}

void ByolTowers::reset_counters() {
  for (MlpNetwork* n : {&online_encoder, &online_projector, &online_predictor,
                        &target_encoder, &target_projector}) {
    n->reset_counters();
  }
}

void ema_update(ByolTowers& towers, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw ConfigError("ema_update: tau must be in [0, 1], got " + std::to_string(tau));
  }
  ema_blend(towers.target_encoder, towers.online_encoder, tau);
  ema_blend(towers.target_projector, towers.online_projector, tau);
}

void BatchViews::validate() const {
  const std::size_t b = view_a.rows();
  for (const Tensor* v : {&view_b, &tracin_view_a, &tracin_view_b}) {
    if (v->shape() != view_a.shape()) {
      throw DimensionError("batch views disagree in shape: " +
                           view_a.shape_string() + " vs " + v->shape_string());
    }
  }
  if (!labels.empty() && labels.size() != b) {
    throw DimensionError("batch has " + std::to_string(b) + " rows but " +
                         std::to_string(labels.size()) + " labels");
  }
}

Positives Positives::top1(std::vector<std::size_t> idx) {
  Positives p;
  p.batch = idx.size();
  p.k = 1;
  p.index = std::move(idx);
  return p;
}

StepReport train_step(TrainState& state, const BatchViews& batch,
                      const Positives& positives, const StepParams& params) {
  batch.validate();
  const std::size_t b = batch.batch();
  if (b < 2) throw ContractError("train_step needs a batch of at least 2");
  check_positives(positives, b);
  if (!(params.lambda >= 0.0)) throw ConfigError("lambda must be >= 0");

  ByolTowers& t = state.towers;
  const StackedViews v = stack_views(batch, params.symmetrize);
  const Tensor z = t.target_embed(v.target_input);

  const Tensor h = t.online_encoder.forward(v.online_input);
  const Tensor p = t.online_projector.forward(h);
  const Tensor q = t.online_predictor.forward(p);

  Tensor grad_q;
  const StepReport report = row_losses(q, z, b, positives, params.lambda, &grad_q);

  Gradients g_pred = t.online_predictor.backward(grad_q);
  Gradients g_proj = t.online_projector.backward(g_pred.input);
  Gradients g_enc = t.online_encoder.backward(g_proj.input);

  std::vector<Tensor> grads;
  grads.reserve(g_enc.params.size() + g_proj.params.size() + g_pred.params.size());
  for (auto* g : {&g_enc, &g_proj, &g_pred}) {
    for (Tensor& x : g->params) grads.push_back(std::move(x));
  }
  auto online = t.online_parameters();
  state.optimizer.step(online, grads, params.lr);
  ema_update(t, params.tau);
  ++state.step;
  return report;
}

StepReport evaluate_step_loss(const ByolTowers& towers, const BatchViews& batch,
                              const Positives& positives,
                              const StepParams& params) {
  batch.validate();
  check_positives(positives, batch.batch());
  const StackedViews v = stack_views(batch, params.symmetrize);
  const Tensor z = towers.target_embed(v.target_input);
  const Tensor q = towers.predict(v.online_input);
  return row_losses(q, z, batch.batch(), positives, params.lambda, nullptr);
}

}  // namespace byoltracin
