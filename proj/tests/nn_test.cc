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

#include "byoltracin/errors.h"
#include "byoltracin/nn.h"
#include "support/fixtures.h"
#include "support/oracles.h"

namespace byoltracin {
namespace {

using testing::naive_forward;
using testing::random_between;
using testing::random_tensor;

MlpNetwork random_net(Rng& rng, std::size_t max_width, std::size_t depth) {
  Topology t;
  for (std::size_t i = 0; i <= depth; ++i) t.widths.push_back(random_between(rng, 1, max_width));
  MlpNetwork net(t);
  net.initialize(rng);
  // Non-zero biases so the bias path is exercised.
  for (Tensor* p : net.parameters()) {
    if (p->rank() == 1) {
      for (double& v : p->data()) v = 0.1 * rng.normal();
    }
  }
  return net;
}

TEST(MlpNetwork, IdentityLayerPassesInputThrough) {
  MlpNetwork net = MlpNetwork::identity(2);
  const Tensor x = Tensor::matrix({{1, 2}});
  EXPECT_EQ(net.forward(x), x);
  EXPECT_EQ(net.infer(x), x);
}

TEST(MlpNetwork, ZeroWeightsGiveZeroOutput) {
  MlpNetwork net(Topology{{3, 4, 2}});
  const Tensor y = net.infer(Tensor::matrix({{1, -2, 3}, {0.5, 0, 7}}));
  for (const double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(MlpNetwork, ForwardMatchesStraightLineOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    MlpNetwork net = random_net(rng, 12, 2);
    const Tensor x = random_tensor(rng, random_between(rng, 1, 6), net.input_dim());
    const Tensor y = net.forward(x);
    const Tensor expect = naive_forward(net, x);
    ASSERT_EQ(y.shape(), expect.shape());
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], expect[i], 1e-12);
  }
}

TEST(MlpNetwork, ShapeErrorsNameTheLayer) {
  MlpNetwork net(Topology{{3, 4, 2}});
  try {
    net.forward(Tensor::zeros(2, 5));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos) << e.what();
  }
  net.forward(Tensor::zeros(2, 3));
  try {
    net.backward(Tensor::zeros(2, 3));
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos) << e.what();
  }
}

TEST(MlpNetwork, BackwardWithoutForwardIsStateError) {
  MlpNetwork net(Topology{{3, 2}});
  EXPECT_THROW(net.backward(Tensor::zeros(1, 2)), StateError);
  net.forward(Tensor::zeros(1, 3));
  EXPECT_TRUE(net.has_pending_forward());
  net.backward(Tensor::zeros(1, 2));
  EXPECT_FALSE(net.has_pending_forward());
  EXPECT_THROW(net.backward(Tensor::zeros(1, 2)), StateError);
}

TEST(MlpNetwork, InferDoesNotCache) {
  MlpNetwork net(Topology{{3, 2}});
  net.infer(Tensor::zeros(1, 3));
  EXPECT_FALSE(net.has_pending_forward());
  EXPECT_THROW(net.backward(Tensor::zeros(1, 2)), StateError);
}

TEST(MlpNetwork, ZeroUpstreamGradientGivesZeroGradients) {
  Rng rng(8);
  MlpNetwork net = random_net(rng, 8, 2);
  net.forward(random_tensor(rng, 4, net.input_dim()));
  const Gradients g = net.backward(Tensor::zeros(4, net.output_dim()));
  for (const Tensor& p : g.params) {
    for (const double v : p.data()) EXPECT_EQ(v, 0.0);
  }
}

TEST(MlpNetwork, SingleLayerGradientIsOuterProduct) {
  Rng rng(9);
  MlpNetwork net(Topology{{3, 2}});
  net.initialize(rng);
  const Tensor x = Tensor::matrix({{1, -2, 0.5}});
  const Tensor g = Tensor::matrix({{0.3, -1.5}});
  net.forward(x);
  const Gradients grads = net.backward(g);
  for (std::size_t o = 0; o < 2; ++o) {
    for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(grads.params[0](o, i), g(0, o) * x(0, i));
    EXPECT_DOUBLE_EQ(grads.params[1][o], g(0, o));
  }
}

// l_b = sum_o c_bo y_bo + 0.5 y_bo^2, so dl_b/dy_b = c_b + y_b.
TEST(MlpNetwork, ParameterGradientsMatchFiniteDifferences) {
  Rng rng(10);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    MlpNetwork net = random_net(rng, 16, random_between(rng, 1, 3));
    const std::size_t b = random_between(rng, 1, 8);
    const Tensor x = random_tensor(rng, b, net.input_dim());
    const Tensor c = random_tensor(rng, b, net.output_dim());

    Tensor y = net.forward(x);
    Tensor up = y;
    for (std::size_t i = 0; i < up.size(); ++i) up[i] = c[i] + y[i];
    const Gradients g = net.backward(up);
    std::vector<double> analytic;
    for (const Tensor& p : g.params) analytic.insert(analytic.end(), p.data().begin(), p.data().end());

    auto loss = [&](std::span<const double> flat) {
      MlpNetwork probe = net;
      probe.set_flat_parameters(flat);
      const Tensor out = naive_forward(probe, x);
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) s += c[i] * out[i] + 0.5 * out[i] * out[i];
      return s / static_cast<double>(b);
    };
    const auto numeric = testing::central_difference(loss, net.flat_parameters(), 1e-5);
    ASSERT_EQ(analytic.size(), numeric.size());
    EXPECT_LT(max_relative_error(analytic, numeric, 1e-4), 1e-4) << "trial " << trial;
    ++checked;
  }
  EXPECT_EQ(checked, 100);
}

TEST(MlpNetwork, InputGradientMatchesFiniteDifferences) {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    MlpNetwork net = random_net(rng, 10, 2);
    const Tensor x = random_tensor(rng, 1, net.input_dim());
    const Tensor c = random_tensor(rng, 1, net.output_dim());
    net.forward(x);
    const Gradients g = net.backward(c);
    auto loss = [&](std::span<const double> in) {
      const Tensor out = naive_forward(net, Tensor({1, in.size()}, {in.begin(), in.end()}));
      return dot(out.data(), c.data());
    };
    const auto numeric = testing::central_difference(loss, x.data(), 1e-6);
    EXPECT_LT(max_relative_error(g.input.data(), numeric, 1e-4), 1e-5);
  }
}

TEST(MlpNetwork, BackwardIsLinearInUpstreamGradient) {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    MlpNetwork net = random_net(rng, 12, 2);
    const std::size_t b = random_between(rng, 1, 6);
    const Tensor x = random_tensor(rng, b, net.input_dim());
    const Tensor g1 = random_tensor(rng, b, net.output_dim());
    const Tensor g2 = random_tensor(rng, b, net.output_dim());
    const double alpha = rng.uniform(-2, 2), beta = rng.uniform(-2, 2);
    Tensor mix = g1;
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * g1[i] + beta * g2[i];

    net.forward(x);
    const Gradients r1 = net.backward(g1);
    net.forward(x);
    const Gradients r2 = net.backward(g2);
    net.forward(x);
    const Gradients rm = net.backward(mix);
    for (std::size_t p = 0; p < rm.params.size(); ++p) {
      for (std::size_t i = 0; i < rm.params[p].size(); ++i) {
        EXPECT_NEAR(rm.params[p][i], alpha * r1.params[p][i] + beta * r2.params[p][i], 1e-10);
      }
    }
  }
}

TEST(MlpNetwork, InitializationIsDeterministic) {
  Rng a(5), b(5);
  MlpNetwork n1(Topology{{4, 8, 3}}), n2(Topology{{4, 8, 3}});
  n1.initialize(a);
  n2.initialize(b);
  EXPECT_EQ(n1.flat_parameters(), n2.flat_parameters());
  EXPECT_EQ(parameter_hash(n1), parameter_hash(n2));
  n2.layers()[0].weight_values()[0] += 1e-9;
  EXPECT_NE(parameter_hash(n1), parameter_hash(n2));
}

TEST(MlpNetwork, FlatParametersRoundTrip) {
  Rng rng(13);
  MlpNetwork net = random_net(rng, 6, 2);
  const auto flat = net.flat_parameters();
  EXPECT_EQ(flat.size(), net.num_parameters());
  MlpNetwork other(net.topology());
  other.set_flat_parameters(flat);
  EXPECT_EQ(other.flat_parameters(), flat);
  EXPECT_THROW(other.set_flat_parameters(std::vector<double>(flat.size() + 1)), DimensionError);
}

TEST(LinearLayer, WeightShapeIsFixed) {
  LinearLayer l(3, 2);
  EXPECT_THROW(l.set_weight(Tensor::zeros(3, 2)), DimensionError);
  EXPECT_NO_THROW(l.set_weight(Tensor::zeros(2, 3)));
  EXPECT_THROW(l.set_bias(Tensor::vector({1, 2, 3})), DimensionError);
}

TEST(LinearLayer, CacheLifecycle) {
  LinearLayer l(2, 2);
  EXPECT_FALSE(l.has_cached_input());
  l.forward(Tensor::matrix({{1, 2}}));
  EXPECT_TRUE(l.has_cached_input());
  EXPECT_EQ(l.take_cached_input(), Tensor::matrix({{1, 2}}));
  EXPECT_FALSE(l.has_cached_input());
  EXPECT_THROW(l.cached_input(), StateError);
}

TEST(MlpNetwork, CountsPasses) {
  MlpNetwork net(Topology{{2, 2}});
  net.infer(Tensor::zeros(1, 2));
  net.forward(Tensor::zeros(1, 2));
  net.backward(Tensor::zeros(1, 2));
  EXPECT_EQ(net.forward_passes(), 2u);
  EXPECT_EQ(net.backward_passes(), 1u);
  net.reset_counters();
  EXPECT_EQ(net.forward_passes(), 0u);
}

TEST(Activation, StringRoundTrip) {
  EXPECT_EQ(activation_from_string(to_string(Activation::kRelu)), Activation::kRelu);
  EXPECT_EQ(activation_from_string(to_string(Activation::kIdentity)), Activation::kIdentity);
  EXPECT_THROW(activation_from_string("tanh"), ConfigError);
}

}  // namespace
}  // namespace byoltracin
