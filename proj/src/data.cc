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

#include "byoltracin/data.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "byoltracin/errors.h"
#include "byoltracin/random.h"

namespace byoltracin {
namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& buf, std::size_t offset,
                        const std::string& file) {
  if (buf.size() < offset + 4) {
    throw FormatError(file + ": truncated header", buf.size());
  }
  return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
         (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

// Expected value of a chi random variable with k degrees of freedom.
double chi_mean(double k) {
  return std::sqrt(2.0) * std::exp(std::lgamma((k + 1.0) / 2.0) - std::lgamma(k / 2.0));
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError(std::string("augment.") + name + " must be in [0, 1]");
  }
}

void check_fraction(double f, const char* name) {
  if (!(f > 0.0 && f <= 1.0)) {
    throw ConfigError(std::string("augment.") + name + " must be in (0, 1]");
  }
}

// ---- raster ops on one H x W image --------------------------------------

void hflip_image(std::span<double> px, std::size_t h, std::size_t w) {
  for (std::size_t r = 0; r < h; ++r) {
    std::reverse(px.begin() + static_cast<std::ptrdiff_t>(r * w),
                 px.begin() + static_cast<std::ptrdiff_t>((r + 1) * w));
  }
}

void vflip_image(std::span<double> px, std::size_t h, std::size_t w) {
  for (std::size_t r = 0; r < h / 2; ++r) {
    std::swap_ranges(px.begin() + static_cast<std::ptrdiff_t>(r * w),
                     px.begin() + static_cast<std::ptrdiff_t>((r + 1) * w),
                     px.begin() + static_cast<std::ptrdiff_t>((h - 1 - r) * w));
  }
}

// Counter-clockwise by quarter turns; square images only.
void rotate_image(std::span<double> px, std::size_t n, int quarter_turns) {
  std::vector<double> src(px.begin(), px.end());
  for (int t = 0; t < quarter_turns; ++t) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) px[(n - 1 - c) * n + r] = src[r * n + c];
    }
    std::copy(px.begin(), px.end(), src.begin());
  }
}

// Resamples the [top, top+ch) x [left, left+cw) window to h x w with
// align-corners bilinear interpolation; a full-size window is an exact copy.
void crop_resize(std::span<double> px, std::size_t h, std::size_t w,
                 std::size_t top, std::size_t left, std::size_t ch,
                 std::size_t cw) {
  const std::vector<double> src(px.begin(), px.end());
  const auto coord = [](std::size_t i, std::size_t out, std::size_t in) {
    return out > 1 ? static_cast<double>(i) * static_cast<double>(in - 1) /
                         static_cast<double>(out - 1)
                   : 0.0;
  };
  for (std::size_t r = 0; r < h; ++r) {
    const double y = static_cast<double>(top) + coord(r, h, ch);
    const auto y0 = static_cast<std::size_t>(std::floor(y));
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < w; ++c) {
      const double x = static_cast<double>(left) + coord(c, w, cw);
      const auto x0 = static_cast<std::size_t>(std::floor(x));
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double fx = x - static_cast<double>(x0);
      double v = src[y0 * w + x0];
      if (fx > 0.0 || fy > 0.0) {
        v = (1 - fy) * ((1 - fx) * src[y0 * w + x0] + fx * src[y0 * w + x1]) +
            fy * ((1 - fx) * src[y1 * w + x0] + fx * src[y1 * w + x1]);
      }
      px[r * w + c] = v;
    }
  }
}

std::size_t scaled_side(std::size_t side, double fraction) {
  const auto s = static_cast<std::size_t>(std::lround(static_cast<double>(side) * fraction));
  return std::clamp<std::size_t>(s, 1, side);
}

void strong_raster(std::span<double> px, const DatasetMeta& meta,
                   const StrongAugment& cfg, Rng& rng) {
  const std::size_t h = meta.height;
  const std::size_t w = meta.width;
  if (rng.bernoulli(cfg.hflip_p)) hflip_image(px, h, w);
  if (rng.bernoulli(cfg.vflip_p)) vflip_image(px, h, w);
  const int degrees = cfg.rotation_choices[rng.below(cfg.rotation_choices.size())];
  if (degrees == 180) {
    hflip_image(px, h, w);
    vflip_image(px, h, w);
  } else if (degrees != 0) {
    rotate_image(px, h, degrees / 90);
  }
  const double scale = cfg.crop_scale_min == cfg.crop_scale_max
                           ? cfg.crop_scale_min
                           : rng.uniform(cfg.crop_scale_min, cfg.crop_scale_max);
  if (scale < 1.0) {
    const double side = std::sqrt(scale);
    const std::size_t ch = scaled_side(h, side);
    const std::size_t cw = scaled_side(w, side);
    const std::size_t top = rng.below(h - ch + 1);
    const std::size_t left = rng.below(w - cw + 1);
    crop_resize(px, h, w, top, left, ch, cw);
  }
  if (cfg.jitter_std > 0.0) {
    const double brightness = cfg.jitter_std * rng.normal();
    const double contrast = 1.0 + cfg.jitter_std * rng.normal();
    const double mean = std::accumulate(px.begin(), px.end(), 0.0) /
                        static_cast<double>(px.size());
    for (double& v : px) {
      v = std::clamp((v - mean) * contrast + mean + brightness, 0.0, 1.0);
    }
  }
}

void light_raster(std::span<double> px, const DatasetMeta& meta,
                  const LightAugment& cfg, Rng& rng) {
  const std::size_t h = meta.height;
  const std::size_t w = meta.width;
  if (rng.bernoulli(cfg.hflip_p)) hflip_image(px, h, w);
  if (cfg.center_crop_fraction < 1.0) {
    const std::size_t ch = scaled_side(h, cfg.center_crop_fraction);
    const std::size_t cw = scaled_side(w, cfg.center_crop_fraction);
    crop_resize(px, h, w, (h - ch) / 2, (w - cw) / 2, ch, cw);
  }
}

// ---- vector analogues ----------------------------------------------------

void sign_flip_half(std::span<double> x, Rng& rng) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng.engine());
  for (std::size_t j = 0; j < x.size() / 2; ++j) x[idx[j]] = -x[idx[j]];
}

void strong_vector(std::span<double> x, const StrongAugment& cfg, Rng& rng) {
  if (rng.bernoulli(cfg.hflip_p)) sign_flip_half(x, rng);
  const double scale = cfg.crop_scale_min == cfg.crop_scale_max
                           ? cfg.crop_scale_min
                           : rng.uniform(cfg.crop_scale_min, cfg.crop_scale_max);
  if (scale < 1.0) {
    const std::size_t keep = scaled_side(x.size(), scale);
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    for (std::size_t j = keep; j < x.size(); ++j) x[idx[j]] = 0.0;
  }
  if (cfg.jitter_std > 0.0) {
    for (double& v : x) v += cfg.jitter_std * rng.normal();
  }
}

void light_vector(std::span<double> x, const LightAugment& cfg, Rng& rng) {
  if (rng.bernoulli(cfg.hflip_p)) sign_flip_half(x, rng);
  if (cfg.center_crop_fraction < 1.0) {
    const std::size_t keep = scaled_side(x.size(), cfg.center_crop_fraction);
    const std::size_t begin = (x.size() - keep) / 2;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j < begin || j >= begin + keep) x[j] = 0.0;
    }
  }
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.samples = samples.gather_rows(indices);
  out.labels.reserve(indices.size());
  for (const std::size_t i : indices) out.labels.push_back(labels[i]);
  out.meta = meta;
  return out;
}

void Dataset::validate() const {
  if (size() == 0) throw ConfigError("dataset is empty");
  if (labels.size() != size()) {
    throw DimensionError("dataset has " + std::to_string(size()) +
                         " samples but " + std::to_string(labels.size()) +
                         " labels");
  }
  for (const int l : labels) {
    if (l < 0 || l >= meta.num_classes) {
      throw ConfigError("label " + std::to_string(l) + " outside [0, " +
                        std::to_string(meta.num_classes) + ")");
    }
  }
  if (!samples.all_finite()) throw NumericError("dataset has non-finite features");
}

Dataset make_blobs(const BlobSpec& spec) {
  if (spec.num_classes < 1 || spec.per_class < 1 || spec.dim < 1) {
    throw ConfigError("make_blobs: num_classes, per_class and dim must be >= 1");
  }
  if (!(spec.cluster_std > 0.0)) throw ConfigError("make_blobs: cluster_std must be > 0");
  if (!(spec.separation >= 0.0)) throw ConfigError("make_blobs: separation must be >= 0");

  Rng rng(derive_seed(spec.seed, "blobs"));
  const auto d = static_cast<double>(spec.dim);
  // mu_a - mu_b ~ N(0, 2 s^2 I), so E|mu_a - mu_b| = s sqrt(2) E[chi_d].
  const double spread = spec.separation / (std::sqrt(2.0) * chi_mean(d));
  Tensor means = Tensor::zeros(static_cast<std::size_t>(spec.num_classes), spec.dim);
  for (double& m : means.data()) m = spread * rng.normal();

  const std::size_t n = static_cast<std::size_t>(spec.num_classes) *
                        static_cast<std::size_t>(spec.per_class);
  Dataset out;
  out.samples = Tensor::zeros(n, spec.dim);
  out.labels.resize(n);
  std::size_t row = 0;
  for (int c = 0; c < spec.num_classes; ++c) {
    const auto mu = means.row(static_cast<std::size_t>(c));
    for (int s = 0; s < spec.per_class; ++s, ++row) {
      auto x = out.samples.row(row);
      for (std::size_t j = 0; j < spec.dim; ++j) {
        x[j] = mu[j] + spec.cluster_std * rng.normal();
      }
      out.labels[row] = c;
    }
  }
  out.meta = DatasetMeta{"blobs", spec.dim, 0, 0, spec.num_classes};
  return out;
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);
  const std::string img_name = images_path.filename().string();
  const std::string lbl_name = labels_path.filename().string();

  if (read_be32(images, 0, img_name) != kIdxImagesMagic) {
    throw FormatError(img_name + ": bad magic, expected 0x00000803", 0);
  }
  const std::size_t count = read_be32(images, 4, img_name);
  const std::size_t rows = read_be32(images, 8, img_name);
  const std::size_t cols = read_be32(images, 12, img_name);
  const std::size_t pixels = rows * cols;
  if (pixels == 0) throw FormatError(img_name + ": zero-sized images", 8);
  const std::size_t need = 16 + count * pixels;
  if (images.size() < need) {
    throw FormatError(img_name + ": truncated pixel data (" +
                          std::to_string(count) + " images of " +
                          std::to_string(rows) + "x" + std::to_string(cols) +
                          " need " + std::to_string(need) + " bytes)",
                      images.size());
  }

  if (read_be32(labels, 0, lbl_name) != kIdxLabelsMagic) {
    throw FormatError(lbl_name + ": bad magic, expected 0x00000801", 0);
  }
  const std::size_t label_count = read_be32(labels, 4, lbl_name);
  if (label_count != count) {
    throw FormatError(lbl_name + ": " + std::to_string(label_count) +
                          " labels for " + std::to_string(count) + " images",
                      4);
  }
  if (labels.size() < 8 + count) {
    throw FormatError(lbl_name + ": truncated label data", labels.size());
  }

  Dataset out;
  out.samples = Tensor::zeros(count, pixels);
  for (std::size_t i = 0; i < count * pixels; ++i) {
    out.samples[i] = static_cast<double>(images[16 + i]) / 255.0;
  }
  out.labels.resize(count);
  int max_label = -1;
  for (std::size_t i = 0; i < count; ++i) {
    out.labels[i] = labels[8 + i];
    max_label = std::max(max_label, out.labels[i]);
  }
  out.meta = DatasetMeta{"idx", pixels, rows, cols, max_label + 1};
  return out;
}

TrainTestSplit split_dataset(const Dataset& data, double test_fraction,
                             std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test_fraction must be in (0, 1)");
  }
  Rng rng(derive_seed(seed, "split"));
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  for (int c = 0; c < data.meta.num_classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.labels[i] == c) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng.engine());
    const auto n_test = static_cast<std::size_t>(
        std::lround(test_fraction * static_cast<double>(members.size())));
    test_idx.insert(test_idx.end(), members.begin(),
                    members.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_idx.insert(train_idx.end(),
                     members.begin() + static_cast<std::ptrdiff_t>(n_test),
                     members.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {data.subset(train_idx), data.subset(test_idx)};
}

void AugmentConfig::validate() const {
  check_probability(strong.hflip_p, "strong.hflip_p");
  check_probability(strong.vflip_p, "strong.vflip_p");
  check_probability(light.hflip_p, "light.hflip_p");
  check_fraction(strong.crop_scale_min, "strong.crop_scale_min");
  check_fraction(strong.crop_scale_max, "strong.crop_scale_max");
  check_fraction(light.center_crop_fraction, "light.center_crop_fraction");
  if (strong.crop_scale_min > strong.crop_scale_max) {
    throw ConfigError("augment.strong.crop_scale_min exceeds crop_scale_max");
  }
  if (!(strong.jitter_std >= 0.0)) {
    throw ConfigError("augment.strong.jitter_std must be >= 0");
  }
  if (strong.rotation_choices.empty()) {
    throw ConfigError("augment.strong.rotation_choices must not be empty");
  }
  for (const int r : strong.rotation_choices) {
    if (r != 0 && r != 90 && r != 180 && r != 270) {
      throw ConfigError("augment.strong.rotation_choices accepts 0, 90, 180, 270");
    }
  }
}

AugmentConfig AugmentConfig::neutral() {
  AugmentConfig cfg;
  cfg.strong.hflip_p = 0.0;
  cfg.light.hflip_p = 0.0;
  return cfg;
}

Tensor augment(const Tensor& batch, const AugmentConfig& cfg, AugmentTier tier,
               const DatasetMeta& meta, std::uint64_t seed) {
  if (tier == AugmentTier::kNone) return batch;
  cfg.validate();
  if (meta.is_raster()) {
    if (meta.height * meta.width != batch.cols()) {
      throw DimensionError("augment: raster " + std::to_string(meta.height) +
                           "x" + std::to_string(meta.width) +
                           " does not match batch " + batch.shape_string());
    }
    const bool rotates = std::any_of(cfg.strong.rotation_choices.begin(),
                                     cfg.strong.rotation_choices.end(),
                                     [](int r) { return r % 180 != 0; });
    if (tier == AugmentTier::kStrong && rotates && meta.height != meta.width) {
      throw ConfigError("augment: quarter-turn rotation needs square images");
    }
  } else if (tier == AugmentTier::kStrong) {
    const bool rotates = std::any_of(cfg.strong.rotation_choices.begin(),
                                     cfg.strong.rotation_choices.end(),
                                     [](int r) { return r != 0; });
    if (cfg.strong.vflip_p > 0.0 || rotates) {
      throw ConfigError("augment: vflip and rotation need raster data (" +
                        meta.source + " is vector data)");
    }
  }

  Tensor out = batch;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    Rng rng(derive_seed(seed, tier == AugmentTier::kStrong ? "strong" : "light", i));
    auto row = out.row(i);
    if (meta.is_raster()) {
      if (tier == AugmentTier::kStrong) {
        strong_raster(row, meta, cfg.strong, rng);
      } else {
        light_raster(row, meta, cfg.light, rng);
      }
    } else if (tier == AugmentTier::kStrong) {
      strong_vector(row, cfg.strong, rng);
    } else {
      light_vector(row, cfg.light, rng);
    }
  }
  return out;
}

BatchViews make_views(const Tensor& batch, std::span<const int> labels,
                      const AugmentConfig& cfg, const DatasetMeta& meta,
                      std::uint64_t seed) {
  if (batch.rows() == 0) throw ConfigError("make_views: empty batch");
  BatchViews v;
  v.view_a = augment(batch, cfg, AugmentTier::kStrong, meta, derive_seed(seed, "view_a"));
  v.view_b = augment(batch, cfg, AugmentTier::kStrong, meta, derive_seed(seed, "view_b"));
  v.tracin_view_a = batch;
  v.tracin_view_b = augment(batch, cfg, AugmentTier::kLight, meta, derive_seed(seed, "tracin_b"));
  v.labels.assign(labels.begin(), labels.end());
  return v;
}

}  // namespace byoltracin
