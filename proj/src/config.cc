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

#include "byoltracin/config.h"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "byoltracin/errors.h"
#include "byoltracin/random.h"

namespace byoltracin {
namespace {

using Keys = std::set<std::string>;

void check_keys(const YAML::Node& node, const std::string& path,
                const Keys& allowed) {
  if (!node.IsMap()) throw ConfigError(path + ": expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) {
      throw ConfigError((path.empty() ? "" : path + ".") + key + ": unknown key");
    }
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, const std::string& path, T& out) {
  const YAML::Node v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path + "." + key + ": cannot parse '" + YAML::Dump(v) + "'");
  }
}

template <typename T>
void read(const YAML::Node& node, const char* key, const std::string& path,
          std::optional<T>& out) {
  const YAML::Node v = node[key];
  if (!v || v.IsNull()) return;
  T value{};
  read(node, key, path, value);
  out = value;
}

template <typename T, typename Parse>
void read_enum(const YAML::Node& node, const char* key, const std::string& path,
               T& out, Parse parse) {
  std::string s;
  read(node, key, path, s);
  if (s.empty()) return;
  try {
    out = parse(s);
  } catch (const ConfigError& e) {
    throw ConfigError(path + "." + key + ": " + e.what());
  }
}

void read_path(const YAML::Node& node, const char* key, const std::string& path,
               const std::filesystem::path& base, std::string& out) {
  read(node, key, path, out);
  if (!out.empty() && !base.empty() && std::filesystem::path(out).is_relative()) {
    out = (base / out).lexically_normal().string();
  }
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field + ": " + what);
}

// Shortest representation that parses back to the same double.
void emit_double(YAML::Emitter& out, const char* key, double v) {
  out << YAML::Key << key << YAML::Value << fmt::format("{}", v);
}

}  // namespace

std::uint64_t RunConfig::dataset_seed() const {
  return dataset.seed.value_or(derive_seed(seed, "dataset"));
}

std::uint64_t RunConfig::policy_seed() const {
  return policy.seed.value_or(derive_seed(seed, "policy"));
}

RunConfig RunConfig::resolved() const {
  RunConfig r = *this;
  r.dataset.seed = dataset_seed();
  r.policy.seed = policy_seed();
  return r;
}

TowerSpec RunConfig::tower_spec(std::size_t input_dim) const {
  TowerSpec s;
  s.input_dim = input_dim;
  s.encoder_widths = model.encoder_widths;
  s.projector_hidden = model.projector_hidden;
  s.predictor_hidden = model.predictor_hidden;
  s.embedding_dim = model.embedding_dim;
  return s;
}

void RunConfig::validate() const {
  require(dataset.source == "blobs" || dataset.source == "idx", "dataset.source",
          "must be blobs or idx");
  if (dataset.source == "blobs") {
    require(dataset.num_classes >= 1, "dataset.num_classes", "must be >= 1");
    require(dataset.per_class >= 1, "dataset.per_class", "must be >= 1");
    require(dataset.dim >= 1, "dataset.dim", "must be >= 1");
    require(dataset.cluster_std > 0.0, "dataset.cluster_std", "must be > 0");
    require(dataset.separation >= 0.0, "dataset.separation", "must be >= 0");
  } else {
    require(std::filesystem::exists(dataset.images_path), "dataset.images_path",
            "file '" + dataset.images_path + "' not found");
    require(std::filesystem::exists(dataset.labels_path), "dataset.labels_path",
            "file '" + dataset.labels_path + "' not found");
  }
  require(dataset.test_fraction > 0.0 && dataset.test_fraction < 1.0,
          "dataset.test_fraction", "must be in (0, 1)");

  require(!model.encoder_widths.empty(), "model.encoder_widths", "must not be empty");
  for (const std::size_t w : model.encoder_widths) {
    require(w >= 1, "model.encoder_widths", "widths must be >= 1");
  }
  require(model.projector_hidden >= 1, "model.projector_hidden", "must be >= 1");
  require(model.predictor_hidden >= 1, "model.predictor_hidden", "must be >= 1");
  require(model.embedding_dim >= 1, "model.embedding_dim", "must be >= 1");

  try {
    augment.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("augment: ") + e.what());
  }

  require(train.epochs >= 0, "train.epochs", "must be >= 0");
  require(train.batch_size >= 2, "train.batch_size", "must be >= 2");
  require(train.base_lr > 0.0, "train.base_lr", "must be > 0");
  require(train.warmup_epochs >= 0, "train.warmup_epochs", "must be >= 0");
  require(train.epochs == 0 || train.warmup_epochs < train.epochs,
          "train.warmup_epochs", "must be below train.epochs");
  require(train.momentum >= 0.0 && train.momentum < 1.0, "train.momentum",
          "must be in [0, 1)");
  require(train.weight_decay >= 0.0, "train.weight_decay", "must be >= 0");
  require(train.tau_base >= 0.0 && train.tau_base <= 1.0, "train.tau_base",
          "must be in [0, 1]");
  require(train.lambda >= 0.0, "train.lambda", "must be >= 0");
  require(train.k >= 1 && train.k <= train.batch_size - 1, "train.k",
          "must be in [1, batch_size - 1]");

  if (!policy.reference_checkpoint.empty()) {
    require(std::filesystem::exists(policy.reference_checkpoint),
            "policy.reference_checkpoint",
            "file '" + policy.reference_checkpoint + "' not found");
  }

  require(eval.probe_epochs >= 0, "eval.probe_epochs", "must be >= 0");
  require(eval.probe_lr > 0.0, "eval.probe_lr", "must be > 0");
  require(eval.probe_label_fraction > 0.0 && eval.probe_label_fraction <= 1.0,
          "eval.probe_label_fraction", "must be in (0, 1]");
  require(eval.knn_k >= 1, "eval.knn_k", "must be >= 1");
  for (const auto& p : eval.policies) {
    try {
      policy_kind_from_string(p);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("eval.policies: ") + e.what());
    }
  }

  require(!io.out_dir.empty(), "io.out_dir", "must not be empty");
  require(io.checkpoint_every >= 0, "io.checkpoint_every", "must be >= 0");
}

RunConfig parse_config(const std::string& yaml,
                       const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig c;
  if (root.IsNull()) return c;
  check_keys(root, "", {"seed", "dataset", "model", "augment", "train", "policy",
                        "eval", "io"});
  read(root, "seed", "config", c.seed);

  if (const auto n = root["dataset"]) {
    const std::string p = "dataset";
    check_keys(n, p, {"source", "num_classes", "per_class", "dim", "cluster_std",
                      "separation", "test_fraction", "seed", "images_path",
                      "labels_path"});
    read(n, "source", p, c.dataset.source);
    read(n, "num_classes", p, c.dataset.num_classes);
    read(n, "per_class", p, c.dataset.per_class);
    read(n, "dim", p, c.dataset.dim);
    read(n, "cluster_std", p, c.dataset.cluster_std);
    read(n, "separation", p, c.dataset.separation);
    read(n, "test_fraction", p, c.dataset.test_fraction);
    read(n, "seed", p, c.dataset.seed);
    read_path(n, "images_path", p, base_dir, c.dataset.images_path);
    read_path(n, "labels_path", p, base_dir, c.dataset.labels_path);
  }
  if (const auto n = root["model"]) {
    const std::string p = "model";
    check_keys(n, p, {"encoder_widths", "projector_hidden", "predictor_hidden",
                      "embedding_dim"});
    read(n, "encoder_widths", p, c.model.encoder_widths);
    read(n, "projector_hidden", p, c.model.projector_hidden);
    read(n, "predictor_hidden", p, c.model.predictor_hidden);
    read(n, "embedding_dim", p, c.model.embedding_dim);
  }
  if (const auto n = root["augment"]) {
    check_keys(n, "augment", {"strong", "light"});
    if (const auto s = n["strong"]) {
      const std::string p = "augment.strong";
      check_keys(s, p, {"hflip_p", "vflip_p", "crop_scale_min", "crop_scale_max",
                        "jitter_std", "rotation_choices"});
      read(s, "hflip_p", p, c.augment.strong.hflip_p);
      read(s, "vflip_p", p, c.augment.strong.vflip_p);
      read(s, "crop_scale_min", p, c.augment.strong.crop_scale_min);
      read(s, "crop_scale_max", p, c.augment.strong.crop_scale_max);
      read(s, "jitter_std", p, c.augment.strong.jitter_std);
      read(s, "rotation_choices", p, c.augment.strong.rotation_choices);
    }
    if (const auto l = n["light"]) {
      const std::string p = "augment.light";
      check_keys(l, p, {"hflip_p", "center_crop_fraction"});
      read(l, "hflip_p", p, c.augment.light.hflip_p);
      read(l, "center_crop_fraction", p, c.augment.light.center_crop_fraction);
    }
  }
  if (const auto n = root["train"]) {
    const std::string p = "train";
    check_keys(n, p, {"epochs", "batch_size", "base_lr", "warmup_epochs", "momentum",
                      "weight_decay", "tau_base", "ema_mode", "lambda", "k",
                      "symmetrize"});
    read(n, "epochs", p, c.train.epochs);
    read(n, "batch_size", p, c.train.batch_size);
    read(n, "base_lr", p, c.train.base_lr);
    read(n, "warmup_epochs", p, c.train.warmup_epochs);
    read(n, "momentum", p, c.train.momentum);
    read(n, "weight_decay", p, c.train.weight_decay);
    read(n, "tau_base", p, c.train.tau_base);
    read_enum(n, "ema_mode", p, c.train.ema_mode, ema_mode_from_string);
    read(n, "lambda", p, c.train.lambda);
    read(n, "k", p, c.train.k);
    read(n, "symmetrize", p, c.train.symmetrize);
  }
  if (const auto n = root["policy"]) {
    const std::string p = "policy";
    check_keys(n, p, {"kind", "reference_checkpoint", "seed", "feature_space"});
    read_enum(n, "kind", p, c.policy.kind, policy_kind_from_string);
    read_path(n, "reference_checkpoint", p, base_dir, c.policy.reference_checkpoint);
    read(n, "seed", p, c.policy.seed);
    read_enum(n, "feature_space", p, c.policy.feature_space, feature_space_from_string);
  }
  if (const auto n = root["eval"]) {
    const std::string p = "eval";
    check_keys(n, p, {"probe_epochs", "probe_lr", "probe_label_fraction", "knn_k",
                      "seeds", "policies"});
    read(n, "probe_epochs", p, c.eval.probe_epochs);
    read(n, "probe_lr", p, c.eval.probe_lr);
    read(n, "probe_label_fraction", p, c.eval.probe_label_fraction);
    read(n, "knn_k", p, c.eval.knn_k);
    read(n, "seeds", p, c.eval.seeds);
    read(n, "policies", p, c.eval.policies);
  }
  if (const auto n = root["io"]) {
    const std::string p = "io";
    check_keys(n, p, {"out_dir", "checkpoint_every", "dump_selections"});
    read_path(n, "out_dir", p, base_dir, c.io.out_dir);
    read(n, "checkpoint_every", p, c.io.checkpoint_every);
    read(n, "dump_selections", p, c.io.dump_selections);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::filesystem::absolute(path).parent_path());
}

std::string to_yaml(const RunConfig& config) {
  const RunConfig c = config.resolved();
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << c.seed;

  out << YAML::Key << "dataset" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "source" << YAML::Value << c.dataset.source;
  out << YAML::Key << "num_classes" << YAML::Value << c.dataset.num_classes;
  out << YAML::Key << "per_class" << YAML::Value << c.dataset.per_class;
  out << YAML::Key << "dim" << YAML::Value << c.dataset.dim;
  emit_double(out, "cluster_std", c.dataset.cluster_std);
  emit_double(out, "separation", c.dataset.separation);
  emit_double(out, "test_fraction", c.dataset.test_fraction);
  out << YAML::Key << "seed" << YAML::Value << *c.dataset.seed;
  out << YAML::Key << "images_path" << YAML::Value << c.dataset.images_path;
  out << YAML::Key << "labels_path" << YAML::Value << c.dataset.labels_path;
  out << YAML::EndMap;

  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "encoder_widths" << YAML::Value << YAML::Flow
      << c.model.encoder_widths;
  out << YAML::Key << "projector_hidden" << YAML::Value << c.model.projector_hidden;
  out << YAML::Key << "predictor_hidden" << YAML::Value << c.model.predictor_hidden;
  out << YAML::Key << "embedding_dim" << YAML::Value << c.model.embedding_dim;
  out << YAML::EndMap;

  out << YAML::Key << "augment" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "strong" << YAML::Value << YAML::BeginMap;
  emit_double(out, "hflip_p", c.augment.strong.hflip_p);
  emit_double(out, "vflip_p", c.augment.strong.vflip_p);
  emit_double(out, "crop_scale_min", c.augment.strong.crop_scale_min);
  emit_double(out, "crop_scale_max", c.augment.strong.crop_scale_max);
  emit_double(out, "jitter_std", c.augment.strong.jitter_std);
  out << YAML::Key << "rotation_choices" << YAML::Value << YAML::Flow
      << c.augment.strong.rotation_choices;
  out << YAML::EndMap;
  out << YAML::Key << "light" << YAML::Value << YAML::BeginMap;
  emit_double(out, "hflip_p", c.augment.light.hflip_p);
  emit_double(out, "center_crop_fraction", c.augment.light.center_crop_fraction);
  out << YAML::EndMap;
  out << YAML::EndMap;

  out << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "epochs" << YAML::Value << c.train.epochs;
  out << YAML::Key << "batch_size" << YAML::Value << c.train.batch_size;
  emit_double(out, "base_lr", c.train.base_lr);
  out << YAML::Key << "warmup_epochs" << YAML::Value << c.train.warmup_epochs;
  emit_double(out, "momentum", c.train.momentum);
  emit_double(out, "weight_decay", c.train.weight_decay);
  emit_double(out, "tau_base", c.train.tau_base);
  out << YAML::Key << "ema_mode" << YAML::Value << to_string(c.train.ema_mode);
  emit_double(out, "lambda", c.train.lambda);
  out << YAML::Key << "k" << YAML::Value << c.train.k;
  out << YAML::Key << "symmetrize" << YAML::Value << c.train.symmetrize;
  out << YAML::EndMap;

  out << YAML::Key << "policy" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kind" << YAML::Value << to_string(c.policy.kind);
  out << YAML::Key << "reference_checkpoint" << YAML::Value
      << c.policy.reference_checkpoint;
  out << YAML::Key << "seed" << YAML::Value << *c.policy.seed;
  out << YAML::Key << "feature_space" << YAML::Value
      << to_string(c.policy.feature_space);
  out << YAML::EndMap;

  out << YAML::Key << "eval" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "probe_epochs" << YAML::Value << c.eval.probe_epochs;
  emit_double(out, "probe_lr", c.eval.probe_lr);
  emit_double(out, "probe_label_fraction", c.eval.probe_label_fraction);
  out << YAML::Key << "knn_k" << YAML::Value << c.eval.knn_k;
  out << YAML::Key << "seeds" << YAML::Value << YAML::Flow << c.eval.seeds;
  out << YAML::Key << "policies" << YAML::Value << YAML::Flow << c.eval.policies;
  out << YAML::EndMap;

  out << YAML::Key << "io" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "out_dir" << YAML::Value << c.io.out_dir;
  out << YAML::Key << "checkpoint_every" << YAML::Value << c.io.checkpoint_every;
  out << YAML::Key << "dump_selections" << YAML::Value << c.io.dump_selections;
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

Dataset load_dataset(const RunConfig& config) {
  if (config.dataset.source == "idx") {
    return load_idx(config.dataset.images_path, config.dataset.labels_path);
  }
  BlobSpec spec;
  spec.num_classes = config.dataset.num_classes;
  spec.per_class = config.dataset.per_class;
  spec.dim = config.dataset.dim;
  spec.cluster_std = config.dataset.cluster_std;
  spec.separation = config.dataset.separation;
  spec.seed = config.dataset_seed();
  return make_blobs(spec);
}

}  // namespace byoltracin
