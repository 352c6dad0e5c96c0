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

#include <cstdint>
#include <stdexcept>
#include <string>

namespace byoltracin {

// Root of the library's exception hierarchy. The CLI maps ConfigError,
// FormatError and TopologyMismatch to exit code 2 and everything else to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible tensor or layer shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An object was used out of order (e.g. backward without forward).
class StateError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf values or degenerate norms.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Invalid hyperparameters, missing inputs, unknown config keys.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller broke an operation precondition (self-positive, k >= B, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents. `offset` is the byte position of the problem.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

class TopologyMismatch : public Error {
 public:
  explicit TopologyMismatch(const std::string& detail)
      : Error("checkpoint/model topology mismatch: " + detail) {}
};

}  // namespace byoltracin
