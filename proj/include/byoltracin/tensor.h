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

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace byoltracin {

// Checked mode validates finiteness whenever a tensor is built from external
// data and whenever optimizer inputs are consumed. Define
// BYOLTRACIN_UNCHECKED to compile the checks out.
#ifdef BYOLTRACIN_UNCHECKED
inline constexpr bool kCheckedMode = false;
#else
inline constexpr bool kCheckedMode = true;
#endif

// Dense row-major array of doubles. Rank 1 and rank 2 are the common cases;
// rows() is the leading dimension and cols() the product of the rest.
class Tensor {
 public:
  Tensor() = default;

  // Zero-filled tensor of the given shape.
  explicit Tensor(std::vector<std::size_t> shape);

  // Throws DimensionError if product(shape) != data.size() and, in checked
  // mode, NumericError on any non-finite entry.
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor zeros(std::size_t rows, std::size_t cols) {
    return Tensor({rows, cols});
  }
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  // Copy of rows [begin, end).
  Tensor slice_rows(std::size_t begin, std::size_t end) const;
  // Copy of the rows at `indices`, in that order.
  Tensor gather_rows(std::span<const std::size_t> indices) const;
  // Vertical concatenation; both operands must have equal cols().
  static Tensor concat_rows(const Tensor& top, const Tensor& bottom);

  void fill(double value);
  bool all_finite() const;

  std::string shape_string() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

// Largest |a_i - b_i| / max(|b_i|, floor) over all entries.
double max_relative_error(std::span<const double> actual,
                          std::span<const double> expected,
                          double floor = 1e-12);

}  // namespace byoltracin
