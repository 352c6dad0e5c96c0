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

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "byoltracin/random.h"
#include "byoltracin/tensor.h"

namespace byoltracin {

enum class Activation { kIdentity, kRelu };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Layer widths [in, h1, ..., out]; `hidden` is applied after every linear
// layer except the last.
struct Topology {
  std::vector<std::size_t> widths;
  Activation hidden = Activation::kRelu;
  bool bias = true;

  std::size_t input_dim() const { return widths.front(); }
  std::size_t output_dim() const { return widths.back(); }
  std::size_t num_linear() const { return widths.size() - 1; }

  friend bool operator==(const Topology&, const Topology&) = default;
};

std::uint64_t topology_hash(const Topology& t, std::uint64_t seed = 0);

// Affine map y = x W^T + b with W stored as [n_out, n_in].
class LinearLayer {
 public:
  LinearLayer(std::size_t n_in, std::size_t n_out, bool bias = true);

  std::size_t n_in() const { return weight_.cols(); }
  std::size_t n_out() const { return weight_.rows(); }
  bool has_bias() const { return !bias_.empty(); }

  const Tensor& weight() const { return weight_; }
  const Tensor& bias() const { return bias_; }
  // Values can change; the shape cannot.
  void set_weight(Tensor w);
  void set_bias(Tensor b);
  std::span<double> weight_values() { return weight_.data(); }
  std::span<double> bias_values() { return bias_.data(); }

  // Caches `x` for backward.
  Tensor forward(const Tensor& x);
  // Same result without touching the cache.
  Tensor apply(const Tensor& x) const;

  bool has_cached_input() const { return cached_input_.has_value(); }
  const Tensor& cached_input() const;
  // Releases the cached input.
  Tensor take_cached_input();

 private:
  friend class MlpNetwork;

  Tensor weight_;
  Tensor bias_;
  std::optional<Tensor> cached_input_;
};

// Forward/backward invocation counts, copied along with the network.
class PassCounter {
 public:
  PassCounter() = default;
  PassCounter(const PassCounter& o) : n_(o.get()) {}
  PassCounter& operator=(const PassCounter& o) {
    n_.store(o.get());
    return *this;
  }
  void bump() { n_.fetch_add(1, std::memory_order_relaxed); }
  std::uint64_t get() const { return n_.load(std::memory_order_relaxed); }
  void reset() { n_.store(0); }

 private:
  std::atomic<std::uint64_t> n_{0};
};

// Parameter gradients in parameters() order, plus the per-sample gradient
// with respect to the network input.
struct Gradients {
  std::vector<Tensor> params;
  Tensor input;
};

class MlpNetwork {
 public:
  explicit MlpNetwork(Topology topology);

  // He-normal weights, zero biases.
  void initialize(Rng& rng);
  // Single bias-free linear layer with W = I.
  static MlpNetwork identity(std::size_t dim);

  const Topology& topology() const { return topology_; }
  std::size_t input_dim() const { return topology_.input_dim(); }
  std::size_t output_dim() const { return topology_.output_dim(); }

  std::vector<LinearLayer>& layers() { return layers_; }
  const std::vector<LinearLayer>& layers() const { return layers_; }
  const LinearLayer& last_linear() const { return layers_.back(); }

  // Training forward: every linear layer caches its input.
  Tensor forward(const Tensor& x);

  // Inference forward; no state besides the pass counter changes.
  Tensor infer(const Tensor& x) const;

  struct Features {
    Tensor output;
    Tensor last_input;  // input to the final linear layer
  };
  Features infer_with_features(const Tensor& x) const;

  // `grad_out` holds per-sample loss gradients dl_b/dy_b. Parameter
  // gradients are averaged over the batch; the input gradient is per sample.
  // Clears the cached inputs. Throws StateError without a prior forward.
  Gradients backward(const Tensor& grad_out);

  bool has_pending_forward() const;

  // Weight then bias for each layer, in layer order.
  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;
  std::size_t num_parameters() const;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(std::span<const double> flat);

  std::uint64_t forward_passes() const { return forward_count_.get(); }
  std::uint64_t backward_passes() const { return backward_count_.get(); }
  void reset_counters() {
    forward_count_.reset();
    backward_count_.reset();
  }

 private:
  void check_input(const Tensor& x) const;

  Topology topology_;
  std::vector<LinearLayer> layers_;
  mutable PassCounter forward_count_;
  PassCounter backward_count_;
};

// FNV-1a over parameter bytes; identical values give identical hashes.
std::uint64_t parameter_hash(const MlpNetwork& net);

}  // namespace byoltracin
