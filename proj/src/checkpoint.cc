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

#include "byoltracin/checkpoint.h"

#include <fmt/format.h>

#include <fstream>

#include "byoltracin/errors.h"
#include "json.hpp"

namespace byoltracin {
namespace {

using nlohmann::json;

constexpr const char* kFormatTag = "byoltracin-checkpoint";

std::string hex(std::uint64_t v) { return fmt::format("{:016x}", v); }

json spec_to_json(const TowerSpec& s) {
  return {{"input_dim", s.input_dim},
          {"encoder_widths", s.encoder_widths},
          {"projector_hidden", s.projector_hidden},
          {"predictor_hidden", s.predictor_hidden},
          {"embedding_dim", s.embedding_dim}};
}

TowerSpec spec_from_json(const json& j) {
  TowerSpec s;
  s.input_dim = j.at("input_dim").get<std::size_t>();
  s.encoder_widths = j.at("encoder_widths").get<std::vector<std::size_t>>();
  s.projector_hidden = j.at("projector_hidden").get<std::size_t>();
  s.predictor_hidden = j.at("predictor_hidden").get<std::size_t>();
  s.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  return s;
}

// Placeholder towers with the right shapes; values are overwritten on load.
ByolTowers blank_towers(const TowerSpec& spec) {
  MlpNetwork enc(spec.encoder());
  MlpNetwork proj(spec.projector());
  MlpNetwork pred(spec.predictor());
  return ByolTowers{enc, proj, pred, enc, proj};
}

std::uint64_t spec_hash(const TowerSpec& spec) {
  return blank_towers(spec).topology_hash();
}

void load_network(const json& j, const char* name, MlpNetwork& net) {
  const auto flat = j.at(name).get<std::vector<double>>();
  if (flat.size() != net.num_parameters()) {
    throw TopologyMismatch(std::string(name) + " stores " +
                           std::to_string(flat.size()) + " parameters, topology needs " +
                           std::to_string(net.num_parameters()));
  }
  net.set_flat_parameters(flat);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TrainState& state,
                     const EmaSchedule& ema) {
  const ByolTowers& t = state.towers;
  json j;
  j["format"] = kFormatTag;
  j["version"] = kCheckpointVersion;
  j["spec"] = spec_to_json(t.spec());
  j["topology_hash"] = hex(t.topology_hash());
  j["step"] = state.step;
  j["ema"] = {{"tau_base", ema.tau_base},
              {"total_steps", ema.total_steps},
              {"mode", to_string(ema.mode)}};
  json buffers = json::array();
  for (const Tensor& b : state.optimizer.buffers()) buffers.push_back(b.values());
  j["optimizer"] = {{"momentum", state.optimizer.momentum()},
                    {"weight_decay", state.optimizer.weight_decay()},
                    {"buffers", buffers}};
  j["networks"] = {{"online_encoder", t.online_encoder.flat_parameters()},
                   {"online_projector", t.online_projector.flat_parameters()},
                   {"online_predictor", t.online_predictor.flat_parameters()},
                   {"target_encoder", t.target_encoder.flat_parameters()},
                   {"target_projector", t.target_projector.flat_parameters()}};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
  out << j.dump() << '\n';
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<TowerSpec>& expected) {
  std::ifstream in(path);
  if (!in) throw ConfigError("checkpoint '" + path.string() + "' not found");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("checkpoint '" + path.string() + "' is not valid JSON",
                      e.byte);
  }
  try {
    if (j.value("format", "") != kFormatTag) {
      throw FormatError("'" + path.string() + "' is not a byoltracin checkpoint", 0);
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw FormatError("unsupported checkpoint version " +
                            std::to_string(j.at("version").get<int>()),
                        0);
    }
    const TowerSpec spec = spec_from_json(j.at("spec"));
    const std::string stored = j.at("topology_hash").get<std::string>();
    if (stored != hex(spec_hash(spec))) {
      throw TopologyMismatch("stored hash " + stored +
                             " does not match the stored widths");
    }
    if (expected && hex(spec_hash(*expected)) != stored) {
      throw TopologyMismatch("checkpoint hash " + stored + ", model hash " +
                             hex(spec_hash(*expected)));
    }

    Checkpoint c{TrainState{blank_towers(spec),
                            SgdState(j.at("optimizer").at("momentum").get<double>(),
                                     j.at("optimizer").at("weight_decay").get<double>()),
                            j.at("step").get<long>()},
                 EmaSchedule{}};
    const json& nets = j.at("networks");
    ByolTowers& t = c.state.towers;
    load_network(nets, "online_encoder", t.online_encoder);
    load_network(nets, "online_projector", t.online_projector);
    load_network(nets, "online_predictor", t.online_predictor);
    load_network(nets, "target_encoder", t.target_encoder);
    load_network(nets, "target_projector", t.target_projector);

    const json& bufs = j.at("optimizer").at("buffers");
    if (!bufs.empty()) {
      const auto params = t.online_parameters();
      if (bufs.size() != params.size()) {
        throw TopologyMismatch("optimizer state has " + std::to_string(bufs.size()) +
                               " buffers for " + std::to_string(params.size()) +
                               " parameters");
      }
      std::vector<Tensor> buffers;
      for (std::size_t i = 0; i < params.size(); ++i) {
        buffers.emplace_back(params[i]->shape(), bufs[i].get<std::vector<double>>());
      }
      c.state.optimizer.set_buffers(std::move(buffers));
    }
    c.ema.tau_base = j.at("ema").at("tau_base").get<double>();
    c.ema.total_steps = j.at("ema").at("total_steps").get<long>();
    c.ema.mode = ema_mode_from_string(j.at("ema").at("mode").get<std::string>());
    return c;
  } catch (const json::exception& e) {
    throw FormatError("checkpoint '" + path.string() + "': " + e.what(), 0);
  } catch (const DimensionError& e) {
    throw TopologyMismatch(e.what());
  }
}

}  // namespace byoltracin
