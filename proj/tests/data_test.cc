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


#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "byoltracin/data.h"
#include "byoltracin/errors.h"
#include "support/fixtures.h"

namespace byoltracin {
namespace {

using testing::random_between;
using testing::TempDir;
using testing::write_file;
using testing::write_idx_images;
using testing::write_idx_labels;

DatasetMeta vector_meta(std::size_t d) { return DatasetMeta{"blobs", d, 0, 0, 2}; }
DatasetMeta raster_meta(std::size_t h, std::size_t w) { return DatasetMeta{"idx", h * w, h, w, 2}; }

TEST(Blobs, TwoSingletonClasses) {
  const Dataset d = make_blobs(BlobSpec{2, 1, 5, 1.0, 4.0, 3});
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1}));
  EXPECT_EQ(d.meta.num_classes, 2);
  EXPECT_EQ(d.meta.dim, 5u);
  EXPECT_NO_THROW(d.validate());
}

TEST(Blobs, TinyNoiseCollapsesEachClass) {
  const Dataset d = make_blobs(BlobSpec{3, 4, 6, 1e-12, 4.0, 5});
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (d.labels[i] != d.labels[k]) continue;
      for (std::size_t c = 0; c < 6; ++c) EXPECT_NEAR(d.samples(i, c), d.samples(k, c), 1e-10);
    }
  }
}

TEST(Blobs, DeterministicPerSeed) {
  const BlobSpec s{4, 20, 8, 1.0, 4.0, 9};
  EXPECT_EQ(make_blobs(s).samples, make_blobs(s).samples);
  BlobSpec other = s;
  other.seed = 10;
  EXPECT_FALSE(make_blobs(other).samples == make_blobs(s).samples);
}

// Mean pairwise distance of class centers estimated from many classes.
TEST(Blobs, SeparationIsTheExpectedInterMeanDistance) {
  const Dataset d = make_blobs(BlobSpec{300, 1, 32, 1e-9, 4.0, 17});
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t k = i + 1; k < d.size(); ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < 32; ++c) {
        const double diff = d.samples(i, c) - d.samples(k, c);
        s += diff * diff;
      }
      total += std::sqrt(s);
      ++pairs;
    }
  }
  EXPECT_NEAR(total / static_cast<double>(pairs), 4.0, 0.2);
}

TEST(Blobs, WithinClassSpreadMatchesClusterStd) {
  const Dataset d = make_blobs(BlobSpec{2, 2000, 4, 0.5, 4.0, 19});
  std::vector<double> mean(4, 0.0);
  for (std::size_t i = 0; i < 2000; ++i) {
    for (std::size_t c = 0; c < 4; ++c) mean[c] += d.samples(i, c) / 2000.0;
  }
  double var = 0.0;
  for (std::size_t i = 0; i < 2000; ++i) {
    for (std::size_t c = 0; c < 4; ++c) var += std::pow(d.samples(i, c) - mean[c], 2) / 8000.0;
  }
  EXPECT_NEAR(std::sqrt(var), 0.5, 0.02);
}

TEST(Blobs, InvalidSpecs) {
  EXPECT_THROW(make_blobs(BlobSpec{0, 1, 2, 1.0, 4.0, 0}), ConfigError);
  EXPECT_THROW(make_blobs(BlobSpec{2, 1, 2, 0.0, 4.0, 0}), ConfigError);
  EXPECT_THROW(make_blobs(BlobSpec{2, 1, 0, 1.0, 4.0, 0}), ConfigError);
}

TEST(Idx, ScalesPixels) {
  TempDir dir;
  write_idx_images(dir / "img", 1, 2, 2, {0, 255, 128, 64});
  write_idx_labels(dir / "lbl", {3});
  const Dataset d = load_idx(dir / "img", dir / "lbl");
  EXPECT_EQ(d.samples.shape(), (std::vector<std::size_t>{1, 4}));
  EXPECT_EQ(d.samples[0], 0.0);
  EXPECT_EQ(d.samples[1], 1.0);
  EXPECT_EQ(d.samples[2], 128.0 / 255.0);
  EXPECT_EQ(d.samples[3], 64.0 / 255.0);
  EXPECT_EQ(d.labels, (std::vector<int>{3}));
  EXPECT_EQ(d.meta.height, 2u);
  EXPECT_EQ(d.meta.width, 2u);
  EXPECT_TRUE(d.meta.is_raster());
}

TEST(Idx, RoundTrip) {
  Rng rng(20);
  TempDir dir;
  for (int trial = 0; trial < 10; ++trial) {
    const std::uint32_t n = random_between(rng, 1, 20);
    const std::uint32_t h = random_between(rng, 1, 6), w = random_between(rng, 1, 6);
    std::vector<std::uint8_t> pixels(n * h * w), labels(n);
    for (auto& p : pixels) p = static_cast<std::uint8_t>(rng.below(256));
    for (auto& l : labels) l = static_cast<std::uint8_t>(rng.below(10));
    write_idx_images(dir / "img", n, h, w, pixels);
    write_idx_labels(dir / "lbl", labels);
    const Dataset d = load_idx(dir / "img", dir / "lbl");
    ASSERT_EQ(d.size(), n);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      EXPECT_EQ(static_cast<int>(std::lround(d.samples[i] * 255.0)), pixels[i]);
      EXPECT_GE(d.samples[i], 0.0);
      EXPECT_LE(d.samples[i], 1.0);
    }
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(d.labels[i], labels[i]);
  }
}

std::uint64_t format_offset(const std::filesystem::path& img, const std::filesystem::path& lbl) {
  try {
    load_idx(img, lbl);
  } catch (const FormatError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "expected FormatError";
  return 0;
}

TEST(Idx, FormatErrorsCarryOffsets) {
  TempDir dir;
  write_idx_images(dir / "img", 2, 2, 2, {1, 2, 3, 4, 5, 6, 7, 8});
  write_idx_labels(dir / "lbl", {0, 1});
  write_idx_labels(dir / "lbl3", {0, 1, 1});
  EXPECT_EQ(format_offset(dir / "img", dir / "lbl3"), 4u);
  // Label file used as image file: wrong magic.
  EXPECT_EQ(format_offset(dir / "lbl", dir / "lbl"), 0u);
  EXPECT_EQ(format_offset(dir / "img", dir / "img"), 0u);

  std::string bytes = testing::read_file(dir / "img");
  write_file(dir / "short", bytes.substr(0, 20));
  EXPECT_EQ(format_offset(dir / "short", dir / "lbl"), 20u);
  write_file(dir / "header", bytes.substr(0, 6));
  EXPECT_THROW(load_idx(dir / "header", dir / "lbl"), FormatError);
  EXPECT_THROW(load_idx(dir / "missing", dir / "lbl"), ConfigError);
}

TEST(Split, StratifiedDisjointAndDeterministic) {
  const Dataset d = make_blobs(BlobSpec{3, 20, 4, 1.0, 4.0, 2});
  const TrainTestSplit s = split_dataset(d, 0.25, 8);
  EXPECT_EQ(s.test.size(), 15u);
  EXPECT_EQ(s.train.size(), 45u);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(std::count(s.test.labels.begin(), s.test.labels.end(), c), 5);
  }
  std::set<std::vector<double>> train_rows;
  for (std::size_t i = 0; i < s.train.size(); ++i) {
    const auto r = s.train.samples.row(i);
    train_rows.emplace(r.begin(), r.end());
  }
  for (std::size_t i = 0; i < s.test.size(); ++i) {
    const auto r = s.test.samples.row(i);
    EXPECT_EQ(train_rows.count(std::vector<double>(r.begin(), r.end())), 0u);
  }
  EXPECT_EQ(split_dataset(d, 0.25, 8).test.samples, s.test.samples);
  EXPECT_THROW(split_dataset(d, 1.0, 8), ConfigError);
  EXPECT_THROW(split_dataset(d, 0.0, 8), ConfigError);
}

TEST(DatasetInvariants, Validation) {
  Dataset d = make_blobs(BlobSpec{2, 3, 2, 1.0, 4.0, 1});
  d.labels[0] = 2;
  EXPECT_THROW(d.validate(), ConfigError);
  d.labels[0] = 0;
  d.samples(1, 1) = std::nan("");
  EXPECT_THROW(d.validate(), NumericError);
  Dataset empty;
  EXPECT_THROW(empty.validate(), ConfigError);
}

Tensor tagged_rows(std::size_t b, std::size_t d) {
  Tensor t = Tensor::zeros(b, d);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t c = 0; c < d; ++c) t(i, c) = static_cast<double>(i + 1);
  }
  return t;
}

TEST(Augment, NoneTierIsIdentity) {
  Rng rng(30);
  const Tensor x = testing::random_tensor(rng, 5, 6);
  EXPECT_EQ(augment(x, AugmentConfig{}, AugmentTier::kNone, vector_meta(6), 3), x);
}

TEST(Augment, NeutralStrongIsIdentity) {
  Rng rng(31);
  const Tensor x = testing::random_tensor(rng, 5, 16);
  for (const std::uint64_t seed : {1u, 2u, 3u}) {
    EXPECT_EQ(augment(x, AugmentConfig::neutral(), AugmentTier::kStrong, vector_meta(16), seed), x);
    EXPECT_EQ(augment(x, AugmentConfig::neutral(), AugmentTier::kStrong, raster_meta(4, 4), seed), x);
  }
}

TEST(Augment, RasterHorizontalFlipIsAnInvolution) {
  AugmentConfig cfg = AugmentConfig::neutral();
  cfg.strong.hflip_p = 1.0;
  cfg.light.hflip_p = 1.0;
  const Tensor x = Tensor::matrix({{1, 2, 3, 4, 5, 6}});
  const DatasetMeta meta = raster_meta(2, 3);
  const Tensor once = augment(x, cfg, AugmentTier::kStrong, meta, 1);
  EXPECT_EQ(once, Tensor::matrix({{3, 2, 1, 6, 5, 4}}));
  EXPECT_EQ(augment(once, cfg, AugmentTier::kStrong, meta, 2), x);
  EXPECT_EQ(augment(augment(x, cfg, AugmentTier::kLight, meta, 3), cfg, AugmentTier::kLight, meta, 4), x);
}

TEST(Augment, VectorSignFlipIsAnInvolutionForAFixedSeed) {
  AugmentConfig cfg = AugmentConfig::neutral();
  cfg.strong.hflip_p = 1.0;
  Rng rng(32);
  const Tensor x = testing::random_tensor(rng, 4, 10);
  const Tensor once = augment(x, cfg, AugmentTier::kStrong, vector_meta(10), 5);
  EXPECT_FALSE(once == x);
  EXPECT_EQ(augment(once, cfg, AugmentTier::kStrong, vector_meta(10), 5), x);
}

TEST(Augment, RasterOpsOnVectorDataAreRejected) {
  AugmentConfig cfg = AugmentConfig::neutral();
  cfg.strong.vflip_p = 0.5;
  EXPECT_THROW(augment(Tensor::zeros(2, 4), cfg, AugmentTier::kStrong, vector_meta(4), 0), ConfigError);
  cfg = AugmentConfig::neutral();
  cfg.strong.rotation_choices = {0, 90};
  EXPECT_THROW(augment(Tensor::zeros(2, 4), cfg, AugmentTier::kStrong, vector_meta(4), 0), ConfigError);
  EXPECT_THROW(augment(Tensor::zeros(2, 6), cfg, AugmentTier::kStrong, raster_meta(2, 3), 0), ConfigError);
  EXPECT_THROW(augment(Tensor::zeros(2, 5), cfg, AugmentTier::kStrong, raster_meta(2, 3), 0), DimensionError);
}

TEST(Augment, ConfigValidation) {
  AugmentConfig cfg;
  cfg.strong.hflip_p = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AugmentConfig{};
  cfg.light.center_crop_fraction = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AugmentConfig{};
  cfg.strong.crop_scale_min = 0.9;
  cfg.strong.crop_scale_max = 0.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AugmentConfig{};
  cfg.strong.jitter_std = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

AugmentConfig busy_config() {
  AugmentConfig cfg;
  cfg.strong = StrongAugment{0.5, 0.5, 0.4, 1.0, 0.3, {0, 90, 180, 270}};
  cfg.light = LightAugment{0.5, 0.75};
  return cfg;
}

TEST(Augment, RasterOutputsStayInUnitRange) {
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = testing::random_tensor(rng, 6, 36);
    for (double& v : x.data()) v = std::abs(v) / (1.0 + std::abs(v));
    for (const AugmentTier tier : {AugmentTier::kLight, AugmentTier::kStrong}) {
      const Tensor y = augment(x, busy_config(), tier, raster_meta(6, 6), trial);
      EXPECT_TRUE(y.all_finite());
      for (const double v : y.data()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
  }
}

TEST(MakeViews, NeutralConfigCopiesTheSource) {
  Rng rng(34);
  const Tensor x = testing::random_tensor(rng, 4, 8);
  const BatchViews v = make_views(x, std::vector<int>{0, 1, 0, 1}, AugmentConfig::neutral(),
                                  vector_meta(8), 12);
  EXPECT_EQ(v.view_a, x);
  EXPECT_EQ(v.view_b, x);
  EXPECT_EQ(v.tracin_view_a, x);
  EXPECT_EQ(v.labels, (std::vector<int>{0, 1, 0, 1}));
}

TEST(MakeViews, DeterministicAndTracinViewIsTheSource) {
  Rng rng(35);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor x = testing::random_tensor(rng, 5, 16);
    for (double& v : x.data()) v = std::abs(v) / (1.0 + std::abs(v));
    AugmentConfig cfg = busy_config();
    const BatchViews a = make_views(x, {}, cfg, raster_meta(4, 4), trial);
    const BatchViews b = make_views(x, {}, cfg, raster_meta(4, 4), trial);
    EXPECT_EQ(a.view_a, b.view_a);
    EXPECT_EQ(a.view_b, b.view_b);
    EXPECT_EQ(a.tracin_view_b, b.tracin_view_b);
    EXPECT_EQ(a.tracin_view_a, x);
    EXPECT_FALSE(a.view_a == a.view_b);
  }
  EXPECT_THROW(make_views(Tensor::zeros(0, 3), {}, AugmentConfig{}, vector_meta(3), 0),
               ConfigError);
}

// Each source row carries a distinct magnitude; every view row must contain
// only that magnitude (possibly sign-flipped or masked to zero).
TEST(MakeViews, RowsStayAligned) {
  Rng rng(36);
  AugmentConfig cfg;
  cfg.strong = StrongAugment{0.5, 0.0, 0.3, 0.9, 0.0, {0}};
  cfg.light = LightAugment{0.5, 0.6};
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t b = random_between(rng, 2, 16);
    const Tensor x = tagged_rows(b, 12);
    const BatchViews v = make_views(x, {}, cfg, vector_meta(12), trial);
    for (const Tensor* view : {&v.view_a, &v.view_b, &v.tracin_view_a, &v.tracin_view_b}) {
      for (std::size_t i = 0; i < b; ++i) {
        for (const double value : view->row(i)) {
          EXPECT_TRUE(value == 0.0 || std::abs(value) == static_cast<double>(i + 1));
        }
      }
    }
  }
}

}  // namespace
}  // namespace byoltracin
