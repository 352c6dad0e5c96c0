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

#include "byoltracin/nn.h"

#include <cmath>
#include <cstring>

#include "byoltracin/errors.h"
#include "byoltracin/kernels.h"

namespace byoltracin {
namespace {

void relu_inplace(Tensor& t) {
  for (double& v : t.data()) v = v > 0.0 ? v : 0.0;
}

std::uint64_t hash_bytes(const void* p, std::size_t n, std::uint64_t h) {
  return fnv1a64(std::string_view(static_cast<const char*>(p), n), h);
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "identity") return Activation::kIdentity;
  throw ConfigError("unknown activation '" + s + "'");
}

std::uint64_t topology_hash(const Topology& t, std::uint64_t seed) {
  std::uint64_t h = mix64(seed ^ 0x746f706fULL);
  for (const std::size_t w : t.widths) h = mix64(h ^ w);
  h = mix64(h ^ static_cast<std::uint64_t>(t.hidden));
  return mix64(h ^ (t.bias ? 1u : 0u));
}

LinearLayer::LinearLayer(std::size_t n_in, std::size_t n_out, bool bias)
    : weight_(Tensor::zeros(n_out, n_in)),
      bias_(bias ? Tensor({n_out}) : Tensor()) {
  if (n_in == 0 || n_out == 0) {
    throw DimensionError("linear layer widths must be positive");
  }
}

void LinearLayer::set_weight(Tensor w) {
  if (w.shape() != weight_.shape()) {
    throw DimensionError("weight shape is fixed at " + weight_.shape_string() +
                         ", got " + w.shape_string());
  }
  weight_ = std::move(w);
}

void LinearLayer::set_bias(Tensor b) {
  if (b.shape() != bias_.shape()) {
    throw DimensionError("bias shape is fixed at " + bias_.shape_string() +
                         ", got " + b.shape_string());
  }
  bias_ = std::move(b);
}

Tensor LinearLayer::forward(const Tensor& x) {
  Tensor y = apply(x);
  cached_input_ = x;
  return y;
}

Tensor LinearLayer::apply(const Tensor& x) const {
  Tensor y;
  kernels::affine_forward(x, weight_, bias_, y);
  return y;
}

const Tensor& LinearLayer::cached_input() const {
  if (!cached_input_) throw StateError("linear layer has no cached input");
  return *cached_input_;
}

Tensor LinearLayer::take_cached_input() {
  if (!cached_input_) throw StateError("linear layer has no cached input");
  Tensor x = std::move(*cached_input_);
  cached_input_.reset();
  return x;
}

MlpNetwork::MlpNetwork(Topology topology) : topology_(std::move(topology)) {
  if (topology_.widths.size() < 2) {
    throw DimensionError("network needs at least input and output widths");
  }
  layers_.reserve(topology_.num_linear());
  for (std::size_t l = 0; l < topology_.num_linear(); ++l) {
    layers_.emplace_back(topology_.widths[l], topology_.widths[l + 1],
                         topology_.bias);
  }
}

void MlpNetwork::initialize(Rng& rng) {
  for (LinearLayer& layer : layers_) {
    const double std = std::sqrt(2.0 / static_cast<double>(layer.n_in()));
    for (double& w : layer.weight_.data()) w = std * rng.normal();
    layer.bias_.fill(0.0);
  }
}

MlpNetwork MlpNetwork::identity(std::size_t dim) {
  MlpNetwork net(Topology{{dim, dim}, Activation::kIdentity, false});
  net.layers_[0].weight_ = Tensor::identity(dim);
  return net;
}

void MlpNetwork::check_input(const Tensor& x) const {
  if (x.rank() != 2 || x.cols() != input_dim()) {
    throw DimensionError("layer 0: expected input [B, " +
                         std::to_string(input_dim()) + "], got " +
                         x.shape_string());
  }
  if (x.rows() == 0) throw DimensionError("layer 0: empty batch");
}

Tensor MlpNetwork::forward(const Tensor& x) {
  check_input(x);
  forward_count_.bump();
  Tensor h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    h = layers_[l].forward(h);
    if (l + 1 < layers_.size() && topology_.hidden == Activation::kRelu) {
      relu_inplace(h);
    }
  }
  return h;
}

Tensor MlpNetwork::infer(const Tensor& x) const {
  return infer_with_features(x).output;
}

MlpNetwork::Features MlpNetwork::infer_with_features(const Tensor& x) const {
  check_input(x);
  forward_count_.bump();
  Features f;
  Tensor h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (l + 1 == layers_.size()) f.last_input = h;
    h = layers_[l].apply(h);
    if (l + 1 < layers_.size() && topology_.hidden == Activation::kRelu) {
      relu_inplace(h);
    }
  }
  f.output = std::move(h);
  return f;
}

bool MlpNetwork::has_pending_forward() const {
  for (const LinearLayer& layer : layers_) {
    if (layer.has_cached_input()) return true;
  }
  return false;
}

Gradients MlpNetwork::backward(const Tensor& grad_out) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (!layers_[l].has_cached_input()) {
      throw StateError("backward without forward (layer " + std::to_string(l) +
                       " has no cached input)");
    }
  }
  const std::size_t batch = layers_.back().cached_input().rows();
  if (grad_out.rank() != 2 || grad_out.rows() != batch ||
      grad_out.cols() != output_dim()) {
    throw DimensionError("layer " + std::to_string(layers_.size() - 1) +
                         ": expected output gradient [" +
                         std::to_string(batch) + ", " +
                         std::to_string(output_dim()) + "], got " +
                         grad_out.shape_string());
  }
  backward_count_.bump();

  const double scale = 1.0 / static_cast<double>(batch);
  Gradients grads;
  grads.params.resize(2 * layers_.size());
  Tensor g = grad_out;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    LinearLayer& layer = layers_[l];
    const Tensor x = layer.take_cached_input();
    kernels::weight_grad(g, x, scale, grads.params[2 * l]);
    if (layer.has_bias()) kernels::bias_grad(g, scale, grads.params[2 * l + 1]);
    Tensor gx;
    kernels::input_grad(g, layer.weight(), gx);
    // x is the ReLU output of the previous layer, so x > 0 marks the active
    // units.
    if (l > 0 && topology_.hidden == Activation::kRelu) {
      for (std::size_t i = 0; i < gx.size(); ++i) {
        if (!(x[i] > 0.0)) gx[i] = 0.0;
      }
    }
    g = std::move(gx);
  }
  grads.input = std::move(g);
  if (!topology_.bias) {
    std::vector<Tensor> weights;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      weights.push_back(std::move(grads.params[2 * l]));
    }
    grads.params = std::move(weights);
  }
  return grads;
}

std::vector<Tensor*> MlpNetwork::parameters() {
  std::vector<Tensor*> out;
  for (LinearLayer& layer : layers_) {
    out.push_back(&layer.weight_);
    if (layer.has_bias()) out.push_back(&layer.bias_);
  }
  return out;
}

std::vector<const Tensor*> MlpNetwork::parameters() const {
  std::vector<const Tensor*> out;
  for (const LinearLayer& layer : layers_) {
    out.push_back(&layer.weight_);
    if (layer.has_bias()) out.push_back(&layer.bias_);
  }
  return out;
}

std::size_t MlpNetwork::num_parameters() const {
  std::size_t n = 0;
  for (const Tensor* p : parameters()) n += p->size();
  return n;
}

std::vector<double> MlpNetwork::flat_parameters() const {
  std::vector<double> flat;
  flat.reserve(num_parameters());
  for (const Tensor* p : parameters()) {
    flat.insert(flat.end(), p->data().begin(), p->data().end());
  }
  return flat;
}

void MlpNetwork::set_flat_parameters(std::span<const double> flat) {
  if (flat.size() != num_parameters()) {
    throw DimensionError("expected " + std::to_string(num_parameters()) +
                         " parameters, got " + std::to_string(flat.size()));
  }
  std::size_t offset = 0;
  for (Tensor* p : parameters()) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
              flat.begin() + static_cast<std::ptrdiff_t>(offset + p->size()),
              p->data().begin());
    offset += p->size();
  }
}

std::uint64_t parameter_hash(const MlpNetwork& net) {
  std::uint64_t h = topology_hash(net.topology());
  for (const Tensor* p : net.parameters()) {
    h = hash_bytes(p->data().data(), p->size() * sizeof(double), h);
  }
  return h;
}

}  // namespace byoltracin
