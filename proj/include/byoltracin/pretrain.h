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

#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <vector>

#include "byoltracin/byol.h"
#include "byoltracin/config.h"
#include "byoltracin/data.h"
#include "byoltracin/selection.h"

namespace byoltracin {

struct EpochMetrics {
  int epoch = 0;  // 1-based: epochs completed
  long step = 0;  // global step count at the end of the epoch
  double loss_main = 0.0;
  double loss_additional = 0.0;
  double lr = 0.0;   // at the epoch's last step
  double tau = 0.0;  // at the epoch's last step
  std::optional<double> tp_rate;
};

struct SelectionRecord {
  long step = 0;
  std::size_t anchor = 0;
  std::size_t selected = 0;
  double score = 0.0;  // NaN for unscored policies
  bool same_label = false;
};

struct PretrainHooks {
  std::function<void(const EpochMetrics&)> on_epoch;
  // Called every io.checkpoint_every epochs and once after the last epoch
  // (also when epochs == 0).
  std::function<void(int epoch, const TrainState&, const EmaSchedule&)> on_checkpoint;
  std::function<void(const SelectionRecord&)> on_selection;
};

struct PretrainResult {
  TrainState state;
  EmaSchedule ema;
  std::vector<EpochMetrics> metrics;
};

// Initialized towers and optimizer for `config`, before any training.
TrainState initial_state(const RunConfig& config, std::size_t input_dim);

// Policy of the config's policy block.
SelectionPolicy make_policy(const RunConfig& config,
                            std::shared_ptr<const ByolTowers> reference = nullptr);

// Full loop: per epoch shuffle, then per batch make_views -> select ->
// train_step. The last partial batch of an epoch is dropped. Every random
// draw derives from config.seed and the policy seed.
PretrainResult pretrain(const RunConfig& config, const Dataset& train,
                        const SelectionPolicy& policy,
                        const PretrainHooks& hooks = {});

void write_metrics_header(std::ostream& out);
void write_metrics_row(std::ostream& out, const EpochMetrics& m);
void write_selection_header(std::ostream& out);
void write_selection_row(std::ostream& out, const SelectionRecord& r);

}  // namespace byoltracin
