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

// Generators and file fixtures shared by the tests.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "byoltracin/byol.h"
#include "byoltracin/config.h"
#include "byoltracin/random.h"
#include "byoltracin/tensor.h"
#include "byoltracin/tracin.h"

namespace byoltracin::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

Tensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0);
std::vector<double> random_vector(Rng& rng, std::size_t n, double scale = 1.0);
std::size_t random_between(Rng& rng, std::size_t lo, std::size_t hi);  // inclusive

// Small towers for oracle checks: a few dozen parameters per network.
TowerSpec tiny_spec(std::size_t input_dim = 4);

// Gaussian biases so that narrow ReLU networks never emit an exact zero row.
void randomize_biases(MlpNetwork& net, Rng& rng, double scale = 0.3);

// tiny_spec towers with random biases; targets start as copies.
ByolTowers tiny_towers(Rng& rng, std::size_t input_dim = 4);

// Random TracIn inputs with batch in [2, max_batch] and widths in [1, max_n]
// and [1, max_m]. Logit and target rows have norm well above the floor.
TracInInputs random_tracin_inputs(Rng& rng, std::size_t max_batch, std::size_t max_n,
                                  std::size_t max_m);

BatchViews random_views(Rng& rng, std::size_t batch, std::size_t dim);
Positives random_positives(Rng& rng, std::size_t batch, std::size_t k);

void write_idx_images(const std::filesystem::path& path, std::uint32_t count,
                      std::uint32_t rows, std::uint32_t cols,
                      const std::vector<std::uint8_t>& pixels);
void write_idx_labels(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& labels);
void write_file(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

// Small blob config that pretrains in well under a second.
RunConfig small_run_config(const std::filesystem::path& out_dir);

}  // namespace byoltracin::testing
