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

#include "byoltracin/tensor.h"

// Dense batch kernels behind the network and the TracIn Gram factors.
//
// Every output element is produced by exactly one thread and accumulated in
// ascending index order, so the OpenMP kernels are bitwise identical to the
// serial reference versions in `kernels::serial` for any thread count.
namespace byoltracin::kernels {

// y[B, out] = x[B, in] * w[out, in]^T + bias[out]. `bias` may be empty.
void affine_forward(const Tensor& x, const Tensor& w, const Tensor& bias,
                    Tensor& y);

// gw[out, in] = scale * g[B, out]^T * x[B, in].
void weight_grad(const Tensor& g, const Tensor& x, double scale, Tensor& gw);

// gb[out] = scale * sum_b g[b, :].
void bias_grad(const Tensor& g, double scale, Tensor& gb);

// gx[B, in] = g[B, out] * w[out, in].
void input_grad(const Tensor& g, const Tensor& w, Tensor& gx);

// out[B, B] = x[B, d] * x[B, d]^T.
void gram(const Tensor& x, Tensor& out);

namespace serial {

void affine_forward(const Tensor& x, const Tensor& w, const Tensor& bias,
                    Tensor& y);
void weight_grad(const Tensor& g, const Tensor& x, double scale, Tensor& gw);
void bias_grad(const Tensor& g, double scale, Tensor& gb);
void input_grad(const Tensor& g, const Tensor& w, Tensor& gx);
void gram(const Tensor& x, Tensor& out);

}  // namespace serial

// Threads available to the parallel kernels (1 when built without OpenMP).
int max_threads();

}  // namespace byoltracin::kernels
