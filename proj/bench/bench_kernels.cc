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


// Parallel kernels against their serial reference versions.

#include <benchmark/benchmark.h>

#include "byoltracin/kernels.h"
#include "byoltracin/random.h"
#include "byoltracin/tensor.h"

namespace {

using byoltracin::Rng;
using byoltracin::Tensor;
namespace kernels = byoltracin::kernels;

Tensor random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Tensor t = Tensor::zeros(rows, cols);
  for (double& v : t.data()) v = rng.normal();
  return t;
}

template <bool kParallel>
void BM_AffineForward(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const Tensor x = random_matrix(b, n, 1);
  const Tensor w = random_matrix(n, n, 2);
  Tensor y = Tensor::zeros(b, n);
  for (auto _ : state) {
    if constexpr (kParallel) {
      kernels::affine_forward(x, w, Tensor(), y);
    } else {
      kernels::serial::affine_forward(x, w, Tensor(), y);
    }
    benchmark::DoNotOptimize(y.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(b * n * n));
}

template <bool kParallel>
void BM_WeightGrad(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const Tensor g = random_matrix(b, n, 4);
  const Tensor x = random_matrix(b, n, 5);
  Tensor gw = Tensor::zeros(n, n);
  for (auto _ : state) {
    if constexpr (kParallel) {
      kernels::weight_grad(g, x, 1.0 / static_cast<double>(b), gw);
    } else {
      kernels::serial::weight_grad(g, x, 1.0 / static_cast<double>(b), gw);
    }
    benchmark::DoNotOptimize(gw.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(b * n * n));
}

template <bool kParallel>
void BM_Gram(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const Tensor x = random_matrix(b, n, 6);
  Tensor out = Tensor::zeros(b, b);
  for (auto _ : state) {
    if constexpr (kParallel) {
      kernels::gram(x, out);
    } else {
      kernels::serial::gram(x, out);
    }
    benchmark::DoNotOptimize(out.data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(b * b * n / 2));
}

void Shapes(benchmark::internal::Benchmark* b) {
  b->Args({64, 64})->Args({128, 128})->Args({256, 256})->Args({512, 256});
}

BENCHMARK(BM_AffineForward<false>)->Name("affine_forward/serial")->Apply(Shapes);
BENCHMARK(BM_AffineForward<true>)->Name("affine_forward/openmp")->Apply(Shapes);
BENCHMARK(BM_WeightGrad<false>)->Name("weight_grad/serial")->Apply(Shapes);
BENCHMARK(BM_WeightGrad<true>)->Name("weight_grad/openmp")->Apply(Shapes);
BENCHMARK(BM_Gram<false>)->Name("gram/serial")->Apply(Shapes);
BENCHMARK(BM_Gram<true>)->Name("gram/openmp")->Apply(Shapes);

}  // namespace

BENCHMARK_MAIN();
