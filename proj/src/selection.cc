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

#include "byoltracin/selection.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "byoltracin/errors.h"
#include "byoltracin/kernels.h"
#include "byoltracin/random.h"

namespace byoltracin {
namespace {

// Draws `count` distinct entries of `pool` (partial Fisher-Yates).
std::vector<std::size_t> sample_distinct(std::vector<std::size_t> pool,
                                         std::size_t count, Rng& rng) {
  count = std::min(count, pool.size());
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t pick = j + rng.below(pool.size() - j);
    std::swap(pool[j], pool[pick]);
  }
  pool.resize(count);
  return pool;
}

Positives random_positives(std::size_t batch, std::size_t k, Rng& rng) {
  Positives p{batch, k, {}};
  p.index.reserve(batch * k);
  for (std::size_t i = 0; i < batch; ++i) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < batch; ++j) {
      if (j != i) others.push_back(j);
    }
    for (const std::size_t j : sample_distinct(std::move(others), k, rng)) {
      p.index.push_back(j);
    }
  }
  return p;
}

Positives supervised_positives(std::span<const int> labels, std::size_t k,
                               Rng& rng, std::vector<std::size_t>& fallback) {
  const std::size_t batch = labels.size();
  Positives p{batch, k, {}};
  p.index.reserve(batch * k);
  for (std::size_t i = 0; i < batch; ++i) {
    std::vector<std::size_t> same;
    std::vector<std::size_t> other;
    for (std::size_t j = 0; j < batch; ++j) {
      if (j == i) continue;
      (labels[j] == labels[i] ? same : other).push_back(j);
    }
    auto chosen = sample_distinct(std::move(same), k, rng);
    if (chosen.size() < k) {
      fallback.push_back(i);
      for (const std::size_t j : sample_distinct(std::move(other), k - chosen.size(), rng)) {
        chosen.push_back(j);
      }
    }
    p.index.insert(p.index.end(), chosen.begin(), chosen.end());
  }
  return p;
}

const ByolTowers& scoring_model(const SelectionPolicy& policy,
                                const ByolTowers& model) {
  return needs_reference(policy.kind) ? *policy.reference_model : model;
}

}  // namespace

std::string to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kNone:
      return "none";
    case PolicyKind::kTracIn:
      return "tracin";
    case PolicyKind::kTracInPretrained:
      return "tracin-pretrained";
    case PolicyKind::kFeatureSim:
      return "feature-sim";
    case PolicyKind::kFeatureSimPretrained:
      return "feature-sim-pretrained";
    case PolicyKind::kRandom:
      return "random";
    case PolicyKind::kSupervisedOracle:
      return "supervised";
  }
  return "unknown";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  for (const PolicyKind k :
       {PolicyKind::kNone, PolicyKind::kTracIn, PolicyKind::kTracInPretrained,
        PolicyKind::kFeatureSim, PolicyKind::kFeatureSimPretrained,
        PolicyKind::kRandom, PolicyKind::kSupervisedOracle}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown policy kind '" + s + "'");
}

bool needs_reference(PolicyKind k) {
  return k == PolicyKind::kTracInPretrained ||
         k == PolicyKind::kFeatureSimPretrained;
}

std::string to_string(FeatureSpace f) {
  return f == FeatureSpace::kProjector ? "projector" : "encoder";
}

FeatureSpace feature_space_from_string(const std::string& s) {
  if (s == "projector") return FeatureSpace::kProjector;
  if (s == "encoder") return FeatureSpace::kEncoder;
  throw ConfigError("unknown feature_space '" + s + "' (expected projector or encoder)");
}

void SelectionPolicy::validate(std::size_t batch) const {
  if (needs_reference(kind) && !reference_model) {
    throw ConfigError("policy " + to_string(kind) + " requires a reference model");
  }
  if (k == 0) throw ContractError("selection k must be >= 1");
  if (batch < 2) throw ContractError("selection needs a batch of at least 2");
  if (k >= batch) {
    throw ContractError("selection k=" + std::to_string(k) +
                        " must be below the batch size " + std::to_string(batch));
  }
}

SelectionReport select(const SelectionPolicy& policy, const BatchViews& batch,
                       const ByolTowers& model, const SelectionContext& ctx) {
  SelectionReport report;
  report.score_source = policy.kind;
  if (policy.kind == PolicyKind::kNone) return report;
  batch.validate();
  const std::size_t b = batch.batch();
  policy.validate(b);
  Rng rng(derive_seed(policy.rng_seed, "select", ctx.step));

  switch (policy.kind) {
    case PolicyKind::kTracIn:
    case PolicyKind::kTracInPretrained: {
      const TracInInputs inputs = extract_tracin_inputs(
          scoring_model(policy, model), batch.tracin_view_a,
          batch.tracin_view_b, ctx.eta);
      report.scores = pairwise_tracin(inputs).scores;
      report.positives = masked_argmax(report.scores, policy.k);
      break;
    }
    case PolicyKind::kFeatureSim:
    case PolicyKind::kFeatureSimPretrained:
      report.scores = feature_similarity(scoring_model(policy, model),
                                         batch.tracin_view_a,
                                         policy.feature_space);
      report.positives = masked_argmax(report.scores, policy.k);
      break;
    case PolicyKind::kRandom:
      report.positives = random_positives(b, policy.k, rng);
      break;
    case PolicyKind::kSupervisedOracle:
      if (!batch.has_labels()) {
        throw ConfigError("supervised policy needs labels in the batch");
      }
      report.positives =
          supervised_positives(batch.labels, policy.k, rng, report.fallback_anchors);
      break;
    case PolicyKind::kNone:
      break;
  }
  if (batch.has_labels()) report.tp_rate = tp_rate(report.positives, batch.labels);
  return report;
}

Positives masked_argmax(const Tensor& scores, std::size_t k) {
  const std::size_t b = scores.rows();
  if (scores.rank() != 2 || scores.cols() != b) {
    throw DimensionError("masked_argmax needs a square matrix, got " +
                         scores.shape_string());
  }
  if (k == 0 || k >= b) {
    throw ContractError("masked_argmax: k=" + std::to_string(k) +
                        " must be in [1, " + std::to_string(b) + ")");
  }
  Positives p{b, k, std::vector<std::size_t>(b * k)};
  std::vector<std::size_t> order(b - 1);
  for (std::size_t i = 0; i < b; ++i) {
    std::iota(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(i), 0);
    std::iota(order.begin() + static_cast<std::ptrdiff_t>(i), order.end(), i + 1);
    const auto row = scores.row(i);
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                      order.end(), [&](std::size_t x, std::size_t y) {
                        return row[x] > row[y] || (row[x] == row[y] && x < y);
                      });
    std::copy_n(order.begin(), k, p.index.begin() + static_cast<std::ptrdiff_t>(i * k));
  }
  return p;
}

double tp_rate(const Positives& positives, std::span<const int> labels) {
  if (positives.batch != labels.size()) {
    throw DimensionError("tp_rate: " + std::to_string(positives.batch) +
                         " anchors but " + std::to_string(labels.size()) +
                         " labels");
  }
  if (positives.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < positives.batch; ++i) {
    for (std::size_t j = 0; j < positives.k; ++j) {
      if (labels[positives.at(i, j)] == labels[i]) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(positives.index.size());
}

TracInInputs extract_tracin_inputs(const ByolTowers& model,
                                   const Tensor& tracin_view_a,
                                   const Tensor& tracin_view_b, double eta) {
  const Tensor p = model.online_projector.infer(model.online_encoder.infer(tracin_view_a));
  MlpNetwork::Features f = model.online_predictor.infer_with_features(p);
  TracInInputs in;
  in.logits_q = std::move(f.output);
  in.activations_a = std::move(f.last_input);
  in.targets_z = model.target_embed(tracin_view_b);
  in.eta = eta;
  return in;
}

Tensor feature_similarity(const ByolTowers& model, const Tensor& tracin_view_a,
                          FeatureSpace space) {
  Tensor e = space == FeatureSpace::kProjector
                 ? model.online_embed(tracin_view_a)
                 : model.online_encoder.infer(tracin_view_a);
  for (std::size_t i = 0; i < e.rows(); ++i) {
    auto row = e.row(i);
    const double n = norm2(row);
    if (!(n > kNormFloor)) {
      throw NumericError("feature similarity: sample " + std::to_string(i) +
                         " has a degenerate embedding");
    }
    for (double& v : row) v /= n;
  }
  Tensor sim;
  kernels::gram(e, sim);
  return sim;
}

}  // namespace byoltracin
