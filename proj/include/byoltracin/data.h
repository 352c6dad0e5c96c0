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
#include <span>
#include <string>
#include <vector>

#include "byoltracin/byol.h"
#include "byoltracin/tensor.h"

namespace byoltracin {

struct DatasetMeta {
  std::string source;
  std::size_t dim = 0;
  // Non-zero for raster data; dim == height * width.
  std::size_t height = 0;
  std::size_t width = 0;
  int num_classes = 0;

  bool is_raster() const { return height > 0 && width > 0; }
};

struct Dataset {
  Tensor samples;  // [N, d]
  std::vector<int> labels;
  DatasetMeta meta;

  std::size_t size() const { return samples.rows(); }
  Dataset subset(std::span<const std::size_t> indices) const;
  void validate() const;
};

struct BlobSpec {
  int num_classes = 4;
  int per_class = 500;
  std::size_t dim = 32;
  double cluster_std = 1.0;
  // Expected distance between two class means.
  double separation = 4.0;
  std::uint64_t seed = 0;
};

// Class means ~ N(0, s^2 I) with s chosen so E|mu_a - mu_b| == separation;
// samples are mean + cluster_std * N(0, I). Rows are grouped by class.
Dataset make_blobs(const BlobSpec& spec);

// Reads an IDX3 ubyte image file and its IDX1 label file. Pixels are scaled
// to [0, 1]. Throws FormatError with the byte offset of the first problem.
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

// Stratified split; each class contributes round(test_fraction * count)
// samples to the test side.
struct TrainTestSplit {
  Dataset train;
  Dataset test;
};
TrainTestSplit split_dataset(const Dataset& data, double test_fraction,
                             std::uint64_t seed);

struct StrongAugment {
  double hflip_p = 0.5;
  double vflip_p = 0.0;
  double crop_scale_min = 1.0;
  double crop_scale_max = 1.0;
  double jitter_std = 0.0;
  std::vector<int> rotation_choices = {0};
};

struct LightAugment {
  double hflip_p = 0.5;
  double center_crop_fraction = 1.0;
};

struct AugmentConfig {
  StrongAugment strong;
  LightAugment light;

  void validate() const;
  // All-neutral strong stack (no flips, full crop, no jitter).
  static AugmentConfig neutral();
};

enum class AugmentTier { kNone, kLight, kStrong };

// Rasters: flip -> rotate -> random-resized crop -> brightness/contrast
// jitter (clamped to [0, 1]). Vectors: hflip sign-flips a random half of the
// coordinates, crop keeps a random subset (light: a centered block) and
// zeroes the rest, jitter adds Gaussian noise. vflip and rotation are raster
// only. Every row draws from its own stream derived from (seed, row).
Tensor augment(const Tensor& batch, const AugmentConfig& cfg, AugmentTier tier,
               const DatasetMeta& meta, std::uint64_t seed);

// view_a and view_b: independent strong draws; tracin_view_a: the source;
// tracin_view_b: light tier.
BatchViews make_views(const Tensor& batch, std::span<const int> labels,
                      const AugmentConfig& cfg, const DatasetMeta& meta,
                      std::uint64_t seed);

}  // namespace byoltracin
