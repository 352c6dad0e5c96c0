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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "byoltracin/byol.h"
#include "byoltracin/data.h"
#include "byoltracin/selection.h"

namespace byoltracin {

struct DatasetConfig {
  std::string source = "blobs";  // blobs | idx
  int num_classes = 4;
  int per_class = 500;
  std::size_t dim = 32;
  double cluster_std = 1.0;
  double separation = 4.0;
  double test_fraction = 0.2;
  std::optional<std::uint64_t> seed;
  std::string images_path;
  std::string labels_path;
};

struct ModelConfig {
  std::vector<std::size_t> encoder_widths = {128, 64};
  std::size_t projector_hidden = 64;
  std::size_t predictor_hidden = 64;
  std::size_t embedding_dim = 32;
};

struct TrainConfig {
  int epochs = 20;
  std::size_t batch_size = 64;
  double base_lr = 0.05;
  int warmup_epochs = 2;
  double momentum = 0.9;
  double weight_decay = 1e-5;
  double tau_base = 0.99;
  EmaMode ema_mode = EmaMode::kCosineToOne;
  double lambda = 1.0;
  std::size_t k = 1;
  bool symmetrize = true;
};

struct PolicyConfig {
  PolicyKind kind = PolicyKind::kTracIn;
  std::string reference_checkpoint;
  std::optional<std::uint64_t> seed;
  FeatureSpace feature_space = FeatureSpace::kProjector;
};

struct EvalConfig {
  int probe_epochs = 200;
  double probe_lr = 0.5;
  // Fraction of the labeled training split the probe may use.
  double probe_label_fraction = 1.0;
  std::size_t knn_k = 5;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<std::string> policies = {"none", "tracin", "tracin-pretrained",
                                       "supervised"};
};

struct IoConfig {
  std::string out_dir = "out";
  int checkpoint_every = 0;  // epochs; 0 writes only the final checkpoint
  bool dump_selections = false;
};

struct RunConfig {
  std::uint64_t seed = 0;
  DatasetConfig dataset;
  ModelConfig model;
  AugmentConfig augment;
  TrainConfig train;
  PolicyConfig policy;
  EvalConfig eval;
  IoConfig io;

  // Copy with derived seeds filled in.
  RunConfig resolved() const;
  // Throws ConfigError whose message starts with the offending field path.
  void validate() const;

  std::uint64_t dataset_seed() const;
  std::uint64_t policy_seed() const;
  TowerSpec tower_spec(std::size_t input_dim) const;
};

// Parses YAML. Unknown keys are errors; relative paths are resolved against
// the file's directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& yaml,
                       const std::filesystem::path& base_dir = {});

// Every field, defaults included, in a form parse_config reads back exactly.
std::string to_yaml(const RunConfig& config);

// Dataset named by the config's dataset block.
Dataset load_dataset(const RunConfig& config);

}  // namespace byoltracin
