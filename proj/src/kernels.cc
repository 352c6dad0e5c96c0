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

#include "byoltracin/kernels.h"

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "byoltracin/errors.h"

namespace byoltracin::kernels {
namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::int64_t kParallelWork = 1 << 15;

void check_affine(const Tensor& x, const Tensor& w, const Tensor& bias,
                  Tensor& y) {
  if (x.cols() != w.cols()) {
    throw DimensionError("affine: input width " + std::to_string(x.cols()) +
                         " does not match weight " + w.shape_string());
  }
  if (!bias.empty() && bias.size() != w.rows()) {
    throw DimensionError("affine: bias " + bias.shape_string() +
                         " does not match weight " + w.shape_string());
  }
  if (y.rows() != x.rows() || y.cols() != w.rows()) {
    y = Tensor::zeros(x.rows(), w.rows());
  }
}

// Row kernels shared by the serial and parallel paths so that both evaluate
// identical instruction sequences per output element.
inline void affine_row(const double* x, const Tensor& w, const Tensor& bias,
                       std::size_t in, std::size_t out, double* y) {
  for (std::size_t o = 0; o < out; ++o) {
    const double* wr = w.data().data() + o * in;
    double s = 0.0;
    for (std::size_t j = 0; j < in; ++j) s += x[j] * wr[j];
    y[o] = bias.empty() ? s : s + bias[o];
  }
}

inline void weight_grad_row(const Tensor& g, const Tensor& x, std::size_t o,
                            double scale, double* gw) {
  const std::size_t batch = g.rows();
  const std::size_t out = g.cols();
  const std::size_t in = x.cols();
  for (std::size_t j = 0; j < in; ++j) {
    double s = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      s += g.data()[b * out + o] * x.data()[b * in + j];
    }
    gw[j] = scale * s;
  }
}

inline void input_grad_row(const double* g, const Tensor& w, std::size_t out,
                           std::size_t in, double* gx) {
  for (std::size_t j = 0; j < in; ++j) {
    double s = 0.0;
    for (std::size_t o = 0; o < out; ++o) s += g[o] * w.data()[o * in + j];
    gx[j] = s;
  }
}

inline double row_dot(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) s += a[j] * b[j];
  return s;
}

void check_weight_grad(const Tensor& g, const Tensor& x, Tensor& gw) {
  if (g.rows() != x.rows()) {
    throw DimensionError("weight_grad: batch mismatch " + g.shape_string() +
                         " vs " + x.shape_string());
  }
  if (gw.rows() != g.cols() || gw.cols() != x.cols()) {
    gw = Tensor::zeros(g.cols(), x.cols());
  }
}

void check_input_grad(const Tensor& g, const Tensor& w, Tensor& gx) {
  if (g.cols() != w.rows()) {
    throw DimensionError("input_grad: gradient " + g.shape_string() +
                         " does not match weight " + w.shape_string());
  }
  if (gx.rows() != g.rows() || gx.cols() != w.cols()) {
    gx = Tensor::zeros(g.rows(), w.cols());
  }
}

void check_gram(const Tensor& x, Tensor& out) {
  if (out.rows() != x.rows() || out.cols() != x.rows()) {
    out = Tensor::zeros(x.rows(), x.rows());
  }
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void affine_forward(const Tensor& x, const Tensor& w, const Tensor& bias,
                    Tensor& y) {
  check_affine(x, w, bias, y);
  const auto batch = static_cast<std::int64_t>(x.rows());
  const std::size_t in = w.cols();
  const std::size_t out = w.rows();
  const double* xs = x.data().data();
  double* ys = y.data().data();
#pragma omp parallel for schedule(static) \
    if (batch * static_cast<std::int64_t>(in * out) > kParallelWork)
  for (std::int64_t b = 0; b < batch; ++b) {
    affine_row(xs + b * in, w, bias, in, out, ys + b * out);
  }
}

void weight_grad(const Tensor& g, const Tensor& x, double scale, Tensor& gw) {
  check_weight_grad(g, x, gw);
  const auto out = static_cast<std::int64_t>(g.cols());
  const std::size_t in = x.cols();
  double* gws = gw.data().data();
#pragma omp parallel for schedule(static) \
    if (out * static_cast<std::int64_t>(in * g.rows()) > kParallelWork)
  for (std::int64_t o = 0; o < out; ++o) {
    weight_grad_row(g, x, static_cast<std::size_t>(o), scale, gws + o * in);
  }
}

void bias_grad(const Tensor& g, double scale, Tensor& gb) {
  serial::bias_grad(g, scale, gb);
}

void input_grad(const Tensor& g, const Tensor& w, Tensor& gx) {
  check_input_grad(g, w, gx);
  const auto batch = static_cast<std::int64_t>(g.rows());
  const std::size_t out = w.rows();
  const std::size_t in = w.cols();
  const double* gs = g.data().data();
  double* gxs = gx.data().data();
#pragma omp parallel for schedule(static) \
    if (batch * static_cast<std::int64_t>(in * out) > kParallelWork)
  for (std::int64_t b = 0; b < batch; ++b) {
    input_grad_row(gs + b * out, w, out, in, gxs + b * in);
  }
}

void gram(const Tensor& x, Tensor& out) {
  check_gram(x, out);
  const auto n = static_cast<std::int64_t>(x.rows());
  const std::size_t d = x.cols();
  const double* xs = x.data().data();
  double* os = out.data().data();
  // Upper triangle per row, mirrored; dot(i, k) and dot(k, i) are evaluated
  // by the same expression so the result is exactly symmetric.
#pragma omp parallel for schedule(dynamic, 4) \
    if (n * n * static_cast<std::int64_t>(d) > kParallelWork)
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t k = i; k < n; ++k) {
      const double v = row_dot(xs + i * d, xs + k * d, d);
      os[i * n + k] = v;
      os[k * n + i] = v;
    }
  }
}

namespace serial {

void affine_forward(const Tensor& x, const Tensor& w, const Tensor& bias,
                    Tensor& y) {
  check_affine(x, w, bias, y);
  const std::size_t in = w.cols();
  const std::size_t out = w.rows();
  for (std::size_t b = 0; b < x.rows(); ++b) {
    affine_row(x.data().data() + b * in, w, bias, in, out,
               y.data().data() + b * out);
  }
}

void weight_grad(const Tensor& g, const Tensor& x, double scale, Tensor& gw) {
  check_weight_grad(g, x, gw);
  for (std::size_t o = 0; o < g.cols(); ++o) {
    weight_grad_row(g, x, o, scale, gw.data().data() + o * x.cols());
  }
}

void bias_grad(const Tensor& g, double scale, Tensor& gb) {
  const std::size_t out = g.cols();
  if (gb.size() != out) gb = Tensor({out});
  for (std::size_t o = 0; o < out; ++o) {
    double s = 0.0;
    for (std::size_t b = 0; b < g.rows(); ++b) s += g(b, o);
    gb[o] = scale * s;
  }
}

void input_grad(const Tensor& g, const Tensor& w, Tensor& gx) {
  check_input_grad(g, w, gx);
  for (std::size_t b = 0; b < g.rows(); ++b) {
    input_grad_row(g.data().data() + b * w.rows(), w, w.rows(), w.cols(),
                   gx.data().data() + b * w.cols());
  }
}

void gram(const Tensor& x, Tensor& out) {
  check_gram(x, out);
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i; k < n; ++k) {
      const double v = row_dot(x.data().data() + i * d,
                               x.data().data() + k * d, d);
      out(i, k) = v;
      out(k, i) = v;
    }
  }
}

}  // namespace serial
}  // namespace byoltracin::kernels
