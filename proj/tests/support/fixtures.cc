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


#include "support/fixtures.h"

#include <stdlib.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace byoltracin::testing {

TempDir::TempDir() {
  std::string tmpl = (std::filesystem::temp_directory_path() / "byoltracin-test-XXXXXX").string();
  if (mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

Tensor random_tensor(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
  Tensor t = Tensor::zeros(rows, cols);
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

std::vector<double> random_vector(Rng& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.normal();
  return v;
}

std::size_t random_between(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + rng.below(hi - lo + 1);
}

TowerSpec tiny_spec(std::size_t input_dim) {
  TowerSpec s;
  s.input_dim = input_dim;
  s.encoder_widths = {5, 4};
  s.projector_hidden = 4;
  s.predictor_hidden = 4;
  s.embedding_dim = 3;
  return s;
}

void randomize_biases(MlpNetwork& net, Rng& rng, double scale) {
  for (LinearLayer& layer : net.layers()) {
    for (double& b : layer.bias_values()) b = scale * rng.normal();
  }
}

ByolTowers tiny_towers(Rng& rng, std::size_t input_dim) {
  ByolTowers t = ByolTowers::create(tiny_spec(input_dim), rng);
  randomize_biases(t.online_encoder, rng);
  randomize_biases(t.online_projector, rng);
  randomize_biases(t.online_predictor, rng);
  t.target_encoder = t.online_encoder;
  t.target_projector = t.online_projector;
  return t;
}

TracInInputs random_tracin_inputs(Rng& rng, std::size_t max_batch, std::size_t max_n,
                                  std::size_t max_m) {
  const std::size_t b = random_between(rng, 2, max_batch);
  const std::size_t n = random_between(rng, 1, max_n);
  const std::size_t m = random_between(rng, 1, max_m);
  TracInInputs in;
  in.eta = rng.uniform(1e-3, 1.0);
  in.logits_q = random_tensor(rng, b, n);
  in.targets_z = random_tensor(rng, b, n);
  in.activations_a = random_tensor(rng, b, m);
  // Keep every logit and target row comfortably away from zero.
  for (Tensor* t : {&in.logits_q, &in.targets_z}) {
    for (std::size_t r = 0; r < b; ++r) {
      if (norm2(t->row(r)) < 0.1) t->row(r)[0] += 1.0;
    }
  }
  return in;
}

BatchViews random_views(Rng& rng, std::size_t batch, std::size_t dim) {
  BatchViews v;
  v.view_a = random_tensor(rng, batch, dim);
  v.view_b = random_tensor(rng, batch, dim);
  v.tracin_view_a = random_tensor(rng, batch, dim);
  v.tracin_view_b = random_tensor(rng, batch, dim);
  return v;
}

Positives random_positives(Rng& rng, std::size_t batch, std::size_t k) {
  Positives p;
  p.batch = batch;
  p.k = k;
  for (std::size_t i = 0; i < batch; ++i) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < batch; ++j) {
      if (j != i) others.push_back(j);
    }
    std::shuffle(others.begin(), others.end(), rng.engine());
    p.index.insert(p.index.end(), others.begin(), others.begin() + static_cast<long>(k));
  }
  return p;
}

namespace {

void put_be32(std::ofstream& f, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  f.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

void write_idx_images(const std::filesystem::path& path, std::uint32_t count,
                      std::uint32_t rows, std::uint32_t cols,
                      const std::vector<std::uint8_t>& pixels) {
  std::ofstream f(path, std::ios::binary);
  put_be32(f, 0x00000803);
  put_be32(f, count);
  put_be32(f, rows);
  put_be32(f, cols);
  f.write(reinterpret_cast<const char*>(pixels.data()),
          static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& labels) {
  std::ofstream f(path, std::ios::binary);
  put_be32(f, 0x00000801);
  put_be32(f, static_cast<std::uint32_t>(labels.size()));
  f.write(reinterpret_cast<const char*>(labels.data()),
          static_cast<std::streamsize>(labels.size()));
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  f << contents;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

RunConfig small_run_config(const std::filesystem::path& out_dir) {
  RunConfig c;
  c.seed = 11;
  c.dataset.num_classes = 3;
  c.dataset.per_class = 40;
  c.dataset.dim = 8;
  c.model.encoder_widths = {16, 8};
  c.model.projector_hidden = 16;
  c.model.predictor_hidden = 16;
  c.model.embedding_dim = 8;
  c.augment.strong.hflip_p = 0.0;
  c.augment.strong.crop_scale_min = 0.5;
  c.augment.strong.jitter_std = 0.3;
  c.augment.light.hflip_p = 0.0;
  c.train.epochs = 2;
  c.train.batch_size = 16;
  c.train.warmup_epochs = 0;
  c.eval.probe_epochs = 50;
  c.eval.knn_k = 3;
  c.eval.seeds = {1, 2, 3};
  c.eval.policies = {"none", "tracin"};
  c.io.out_dir = out_dir.string();
  return c;
}

}  // namespace byoltracin::testing
