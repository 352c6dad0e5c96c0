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
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "byoltracin/byol.h"
#include "byoltracin/tensor.h"
#include "byoltracin/tracin.h"

namespace byoltracin {

// kNone disables the additional positive and trains plain BYOL.
enum class PolicyKind {
  kNone,
  kTracIn,
  kTracInPretrained,
  kFeatureSim,
  kFeatureSimPretrained,
  kRandom,
  kSupervisedOracle,
};

std::string to_string(PolicyKind k);
PolicyKind policy_kind_from_string(const std::string& s);
bool needs_reference(PolicyKind k);

// Representation compared by the feature-similarity policies.
enum class FeatureSpace { kProjector, kEncoder };

std::string to_string(FeatureSpace f);
FeatureSpace feature_space_from_string(const std::string& s);

struct SelectionPolicy {
  PolicyKind kind = PolicyKind::kTracIn;
  // Frozen scoring model for the *Pretrained kinds.
  std::shared_ptr<const ByolTowers> reference_model;
  std::size_t k = 1;
  std::uint64_t rng_seed = 0;
  FeatureSpace feature_space = FeatureSpace::kProjector;

  // Throws ConfigError when a reference is required but missing and
  // ContractError when k >= batch.
  void validate(std::size_t batch) const;
};

struct SelectionReport {
  Positives positives;
  PolicyKind score_source = PolicyKind::kNone;
  std::optional<double> tp_rate;
  // Anchors whose class was a singleton in the batch under the supervised
  // policy and therefore got random partners.
  std::vector<std::size_t> fallback_anchors;
  // Unmasked score matrix for the scored kinds, empty otherwise.
  Tensor scores;
};

struct SelectionContext {
  double eta = 1.0;  // learning rate used to scale TracIn scores
  std::uint64_t step = 0;
};

// Runs the policy on one batch. `model` is the model being trained; the
// *Pretrained kinds score with policy.reference_model instead.
SelectionReport select(const SelectionPolicy& policy, const BatchViews& batch,
                       const ByolTowers& model, const SelectionContext& ctx);

// For every row, the k largest off-diagonal entries; ties go to the lower
// index. Throws ContractError when k >= B.
Positives masked_argmax(const Tensor& scores, std::size_t k);

// Fraction of (anchor, positive) pairs that share a label.
double tp_rate(const Positives& positives, std::span<const int> labels);

// q and a from the online towers on tracin_view_a and z from the target
// towers on tracin_view_b: one inference pass through each network.
TracInInputs extract_tracin_inputs(const ByolTowers& model,
                                   const Tensor& tracin_view_a,
                                   const Tensor& tracin_view_b, double eta);

// Row-wise cosine similarity of the chosen representation of tracin_view_a.
Tensor feature_similarity(const ByolTowers& model, const Tensor& tracin_view_a,
                          FeatureSpace space);

}  // namespace byoltracin
