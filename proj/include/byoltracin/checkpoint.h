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

#include <filesystem>
#include <optional>

#include "byoltracin/byol.h"

namespace byoltracin {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  TrainState state;
  EmaSchedule ema;
};

// JSON container: format tag, version, tower widths and their topology hash,
// flat parameter arrays per network, optimizer buffers and EMA schedule.
void save_checkpoint(const std::filesystem::path& path, const TrainState& state,
                     const EmaSchedule& ema);

// Throws ConfigError if the file is missing, FormatError if it is not a
// checkpoint, and TopologyMismatch if the stored hash disagrees with the
// stored widths or with `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<TowerSpec>& expected = std::nullopt);

}  // namespace byoltracin
