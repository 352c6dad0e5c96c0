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
#include <limits>

#include "byoltracin/errors.h"
#include "byoltracin/optim.h"
#include "support/fixtures.h"

namespace byoltracin {
namespace {

TEST(Sgd, VanillaGradientDescent) {
  Tensor p = Tensor::vector({1.0, -2.0});
  SgdState s(0.0, 0.0);
  std::vector<Tensor*> params = {&p};
  s.step(params, std::vector<Tensor>{Tensor::vector({0.5, 0.25})}, 0.1);
  EXPECT_DOUBLE_EQ(p[0], 1.0 - 0.1 * 0.5);
  EXPECT_DOUBLE_EQ(p[1], -2.0 - 0.1 * 0.25);
}

TEST(Sgd, ZeroLearningRateLeavesParameters) {
  Tensor p = Tensor::vector({1.0, -2.0});
  SgdState s;
  std::vector<Tensor*> params = {&p};
  s.step(params, std::vector<Tensor>{Tensor::vector({3.0, 4.0})}, 0.0);
  EXPECT_EQ(p, Tensor::vector({1.0, -2.0}));
}

TEST(Sgd, MomentumUnrollsOverTwoSteps) {
  const double lr = 0.1, g = 0.7;
  Tensor p = Tensor::vector({2.0});
  SgdState s(0.9, 0.0);
  std::vector<Tensor*> params = {&p};
  const std::vector<Tensor> grads = {Tensor::vector({g})};
  s.step(params, grads, lr);
  s.step(params, grads, lr);
  EXPECT_NEAR(2.0 - p[0], lr * (g + 1.9 * g), 1e-15);
}

TEST(Sgd, WeightDecayEntersTheBuffer) {
  Tensor p = Tensor::vector({2.0});
  SgdState s(0.0, 0.5);
  std::vector<Tensor*> params = {&p};
  s.step(params, std::vector<Tensor>{Tensor::vector({0.0})}, 0.1);
  EXPECT_DOUBLE_EQ(p[0], 2.0 - 0.1 * 0.5 * 2.0);
}

TEST(Sgd, RecurrenceMatchesHandUnrolledOracle) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const double m = rng.uniform(0.0, 0.99), wd = rng.uniform(0.0, 0.1);
    const std::size_t n = testing::random_between(rng, 1, 6);
    Tensor p = Tensor::vector(testing::random_vector(rng, n));
    std::vector<double> ref(p.data().begin(), p.data().end()), buf(n, 0.0);
    SgdState s(m, wd);
    std::vector<Tensor*> params = {&p};
    for (int step = 0; step < 5; ++step) {
      const auto g = testing::random_vector(rng, n);
      const double lr = rng.uniform(0.0, 0.2);
      s.step(params, std::vector<Tensor>{Tensor::vector(g)}, lr);
      for (std::size_t i = 0; i < n; ++i) {
        buf[i] = m * buf[i] + g[i] + wd * ref[i];
        ref[i] -= lr * buf[i];
      }
    }
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(p[i], ref[i], 1e-14);
  }
}

TEST(Sgd, RejectsBadInputs) {
  EXPECT_THROW(SgdState(1.0, 0.0), ConfigError);
  EXPECT_THROW(SgdState(-0.1, 0.0), ConfigError);
  EXPECT_THROW(SgdState(0.9, -1e-3), ConfigError);
  Tensor p = Tensor::vector({1.0, 2.0});
  std::vector<Tensor*> params = {&p};
  SgdState s;
  EXPECT_THROW(s.step(params, std::vector<Tensor>{Tensor::vector({1.0})}, 0.1), DimensionError);
  EXPECT_THROW(s.step(params, std::vector<Tensor>{}, 0.1), DimensionError);
  EXPECT_THROW(s.step(params, std::vector<Tensor>{Tensor::vector({1.0, 1.0})}, -0.1), ConfigError);
}

TEST(Sgd, NonFiniteGradientIsNumericError) {
  if (!kCheckedMode) GTEST_SKIP();
  Tensor p = Tensor::vector({1.0});
  Tensor g = Tensor::vector({0.0});
  g[0] = std::numeric_limits<double>::quiet_NaN();
  std::vector<Tensor*> params = {&p};
  SgdState s;
  EXPECT_THROW(s.step(params, std::vector<Tensor>{g}, 0.1), NumericError);
}

TEST(CosineLr, Endpoints) {
  EXPECT_DOUBLE_EQ(cosine_lr(0, 100, 0.1, 0), 0.1);
  EXPECT_NEAR(cosine_lr(100, 100, 0.1, 0), 0.0, 1e-12);
  EXPECT_NEAR(cosine_lr(60, 100, 0.1, 20), 0.05, 1e-12);
}

TEST(CosineLr, ConstantDuringWarmupThenNonIncreasing) {
  const long total = 97, warmup = 13;
  for (long s = 0; s < warmup; ++s) EXPECT_EQ(cosine_lr(s, total, 0.3, warmup), 0.3);
  for (long s = warmup; s < total; ++s) {
    EXPECT_GE(cosine_lr(s, total, 0.3, warmup), cosine_lr(s + 1, total, 0.3, warmup));
  }
}

TEST(CosineLr, Validation) {
  EXPECT_THROW(cosine_lr(0, 0, 0.1, 0), ConfigError);
  EXPECT_THROW(cosine_lr(11, 10, 0.1, 0), ConfigError);
  EXPECT_THROW(cosine_lr(-1, 10, 0.1, 0), ConfigError);
  EXPECT_THROW(cosine_lr(0, 10, 0.1, 10), ConfigError);
}

}  // namespace
}  // namespace byoltracin
