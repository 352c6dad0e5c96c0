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

#include "byoltracin/pretrain.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "byoltracin/errors.h"
#include "byoltracin/random.h"

namespace byoltracin {

TrainState initial_state(const RunConfig& config, std::size_t input_dim) {
  Rng rng(derive_seed(config.seed, "init"));
  return TrainState{ByolTowers::create(config.tower_spec(input_dim), rng),
                    SgdState(config.train.momentum, config.train.weight_decay), 0};
}

SelectionPolicy make_policy(const RunConfig& config,
                            std::shared_ptr<const ByolTowers> reference) {
  SelectionPolicy p;
  p.kind = config.policy.kind;
  p.reference_model = std::move(reference);
  p.k = config.train.k;
  p.rng_seed = config.policy_seed();
  p.feature_space = config.policy.feature_space;
  return p;
}

PretrainResult pretrain(const RunConfig& config, const Dataset& train,
                        const SelectionPolicy& policy,
                        const PretrainHooks& hooks) {
  config.validate();
  train.validate();
  const std::size_t batch = config.train.batch_size;
  if (train.size() < batch) {
    throw ConfigError("dataset has " + std::to_string(train.size()) +
                      " samples, fewer than train.batch_size = " +
                      std::to_string(batch));
  }
  if (policy.kind != PolicyKind::kNone) policy.validate(batch);

  PretrainResult result{initial_state(config, train.samples.cols()), EmaSchedule{}, {}};
  const long steps_per_epoch = static_cast<long>(train.size() / batch);
  const long total = steps_per_epoch * config.train.epochs;
  const long warmup = steps_per_epoch * config.train.warmup_epochs;
  result.ema = EmaSchedule{config.train.tau_base, std::max(total - 1, 0L),
                           config.train.ema_mode};

  TrainState& state = result.state;
  std::vector<std::size_t> order(train.size());
  for (int epoch = 0; epoch < config.train.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle(derive_seed(config.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle.engine());

    EpochMetrics m;
    m.epoch = epoch + 1;
    double tp_sum = 0.0;
    long tp_count = 0;
    for (long b = 0; b < steps_per_epoch; ++b) {
      const std::span<const std::size_t> idx(order.data() + b * static_cast<long>(batch), batch);
      const Tensor x = train.samples.gather_rows(idx);
      std::vector<int> labels(batch);
      for (std::size_t i = 0; i < batch; ++i) labels[i] = train.labels[idx[i]];

      const long step = state.step;
      const BatchViews views =
          make_views(x, labels, config.augment, train.meta,
                     derive_seed(config.seed, "views", static_cast<std::uint64_t>(step)));
      const double lr = cosine_lr(step, total, config.train.base_lr, warmup);
      const double tau = result.ema.tau(step);

      const SelectionReport sel = select(policy, views, state.towers,
                                         {lr, static_cast<std::uint64_t>(step)});
      if (sel.tp_rate) {
        tp_sum += *sel.tp_rate;
        ++tp_count;
      }
      if (hooks.on_selection && !sel.positives.empty()) {
        for (std::size_t i = 0; i < batch; ++i) {
          for (std::size_t j = 0; j < sel.positives.k; ++j) {
            const std::size_t s = sel.positives.at(i, j);
            hooks.on_selection({step, i, s,
                                sel.scores.empty()
                                    ? std::numeric_limits<double>::quiet_NaN()
                                    : sel.scores(i, s),
                                labels[s] == labels[i]});
          }
        }
      }

      const StepReport r = train_step(
          state, views, sel.positives,
          StepParams{lr, tau, config.train.lambda, config.train.symmetrize});
      m.loss_main += r.loss_main;
      m.loss_additional += r.loss_additional;
      m.lr = lr;
      m.tau = tau;
    }
    m.loss_main /= static_cast<double>(steps_per_epoch);
    m.loss_additional /= static_cast<double>(steps_per_epoch);
    m.step = state.step;
    if (tp_count > 0) m.tp_rate = tp_sum / static_cast<double>(tp_count);
    result.metrics.push_back(m);
    if (hooks.on_epoch) hooks.on_epoch(m);
    if (hooks.on_checkpoint && config.io.checkpoint_every > 0 &&
        (epoch + 1) % config.io.checkpoint_every == 0 &&
        epoch + 1 < config.train.epochs) {
      hooks.on_checkpoint(epoch + 1, state, result.ema);
    }
  }
  if (hooks.on_checkpoint) hooks.on_checkpoint(config.train.epochs, state, result.ema);
  return result;
}

void write_metrics_header(std::ostream& out) {
  out << "epoch,step,loss_main,loss_additional,lr,tau,tp_rate\n";
}

void write_metrics_row(std::ostream& out, const EpochMetrics& m) {
  out << fmt::format("{},{},{},{},{},{},{}\n", m.epoch, m.step, m.loss_main,
                     m.loss_additional, m.lr, m.tau,
                     m.tp_rate ? fmt::format("{}", *m.tp_rate) : std::string());
}

void write_selection_header(std::ostream& out) {
  out << "step,anchor,selected,score,same_label\n";
}

void write_selection_row(std::ostream& out, const SelectionRecord& r) {
  out << fmt::format("{},{},{},{},{}\n", r.step, r.anchor, r.selected,
                     std::isnan(r.score) ? std::string() : fmt::format("{}", r.score),
                     r.same_label ? 1 : 0);
}

}  // namespace byoltracin
