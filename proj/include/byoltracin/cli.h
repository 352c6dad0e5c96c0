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
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace byoltracin::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

struct CommonOptions {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> checkpoint;
};

// Rows [offset, offset + size) of the unshuffled train split; each
// (src, dst) pair then overwrites batch row dst with batch row src.
struct BatchSpec {
  std::size_t size = 8;
  std::size_t offset = 0;
  std::vector<std::pair<std::size_t, std::size_t>> duplicates;
};

// Each command returns a process exit code and reports errors on `err`.
int cmd_pretrain(const CommonOptions& opts, std::ostream& out, std::ostream& err);
int cmd_eval(const CommonOptions& opts, std::ostream& out, std::ostream& err);
int cmd_compare(const CommonOptions& opts, std::ostream& out, std::ostream& err);
int cmd_tracin_dump(const CommonOptions& opts, const BatchSpec& batch,
                    std::ostream& out, std::ostream& err);

// Argument parsing and dispatch for the command-line tool.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace byoltracin::cli
