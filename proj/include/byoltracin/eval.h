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
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "byoltracin/config.h"
#include "byoltracin/data.h"
#include "byoltracin/nn.h"

namespace byoltracin {

struct ProbeResult {
  double accuracy = 0.0;
  std::vector<std::string> warnings;
};

// Multinomial logistic regression on standardized frozen features, trained
// by full-batch gradient descent from a zero classifier. Predictions break
// ties toward the lowest class index. Throws StateError if the encoder's
// parameters change during the call.
ProbeResult linear_probe(const MlpNetwork& encoder, const Dataset& train,
                         const Dataset& test, int epochs, double lr);

// Cosine-distance k-nearest-neighbour vote; equal distances prefer the lower
// train index and tied votes the lowest label. Throws ConfigError when
// k == 0 or k > |train|.
double knn_eval(const MlpNetwork& encoder, const Dataset& train,
                const Dataset& test, std::size_t k);

// Train/test split of the config's dataset, seeded from the dataset seed.
TrainTestSplit load_split(const RunConfig& config);

// Probe subset of `train`: a stratified `fraction` of each class.
Dataset probe_subset(const Dataset& train, double fraction, std::uint64_t seed);

// Label of the encoder row that never pretrains.
inline constexpr const char* kRandomEncoderRow = "random-encoder";

struct CellResult {
  std::string policy;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  double probe_accuracy = 0.0;
  double knn_accuracy = 0.0;
  std::vector<double> tp_rate_curve;  // one entry per epoch, may be empty
  std::vector<std::string> warnings;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single value
  std::size_t n = 0;
};

Summary summarize(const std::vector<double>& values);

struct PolicyRow {
  std::string policy;
  std::vector<std::uint64_t> seeds;  // seeds whose cell succeeded
  std::size_t failed = 0;
  Summary probe;
  Summary knn;
  std::optional<Summary> final_tp_rate;
  std::vector<double> mean_tp_rate_curve;
};

struct CompareReport {
  std::vector<CellResult> cells;  // sorted by (row order, seed order)
  std::vector<PolicyRow> rows;
  bool any_failed() const;
  const PolicyRow& row(const std::string& policy) const;
};

// Runs pretrain -> linear probe + kNN for every (policy, seed) and an extra
// random-encoder row. Policies needing a reference model score with the
// same-seed plain BYOL run. Throws ConfigError for fewer than two policies
// or fewer than three distinct seeds. Cell failures are recorded, not thrown.
CompareReport compare_policies(const RunConfig& config,
                               const std::vector<std::string>& policies,
                               const std::vector<std::uint64_t>& seeds);

void write_cells_csv(std::ostream& out, const CompareReport& report);
void write_report_csv(std::ostream& out, const CompareReport& report);
void write_report_table(std::ostream& out, const CompareReport& report);

}  // namespace byoltracin
