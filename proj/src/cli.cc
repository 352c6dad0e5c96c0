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

#include "byoltracin/cli.h"

#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>

#include "CLI11.hpp"
#include "byoltracin/checkpoint.h"
#include "byoltracin/config.h"
#include "byoltracin/errors.h"
#include "byoltracin/eval.h"
#include "byoltracin/pretrain.h"
#include "byoltracin/random.h"
#include "byoltracin/tracin.h"

namespace byoltracin::cli {
namespace {

namespace fs = std::filesystem;

std::string absolute(const std::string& p) {
  return p.empty() ? p : fs::absolute(p).lexically_normal().string();
}

RunConfig prepare(const CommonOptions& opts) {
  if (opts.config_path.empty()) throw ConfigError("--config: required");
  RunConfig config = load_config(opts.config_path);
  if (opts.out_dir) config.io.out_dir = absolute(*opts.out_dir);
  if (opts.seed) config.seed = *opts.seed;
  config.io.out_dir = absolute(config.io.out_dir);
  config.validate();
  return config.resolved();
}

fs::path out_path(const RunConfig& config, const std::string& name) {
  fs::create_directories(config.io.out_dir);
  return fs::path(config.io.out_dir) / name;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  return f;
}

void echo_config(const RunConfig& config) {
  open_output(out_path(config, "config.yaml")) << to_yaml(config) << '\n';
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const TopologyMismatch& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

Checkpoint require_checkpoint(const std::optional<std::string>& path,
                              const RunConfig& config, std::size_t input_dim) {
  if (!path || path->empty()) throw ConfigError("--checkpoint: required");
  return load_checkpoint(*path, config.tower_spec(input_dim));
}

}  // namespace

int cmd_pretrain(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig config = prepare(opts);
    if (opts.checkpoint) {
      config.policy.reference_checkpoint = absolute(*opts.checkpoint);
      config.validate();
    }
    const TrainTestSplit split = load_split(config);
    const std::size_t dim = split.train.samples.cols();

    std::shared_ptr<const ByolTowers> reference;
    if (needs_reference(config.policy.kind)) {
      if (config.policy.reference_checkpoint.empty()) {
        throw ConfigError("policy.reference_checkpoint: required for policy kind " +
                          to_string(config.policy.kind));
      }
      reference = std::make_shared<const ByolTowers>(
          load_checkpoint(config.policy.reference_checkpoint, config.tower_spec(dim))
              .state.towers);
    }

    echo_config(config);
    std::ofstream metrics = open_output(out_path(config, "metrics.csv"));
    write_metrics_header(metrics);
    std::ofstream selections;
    if (config.io.dump_selections) {
      selections = open_output(out_path(config, "selections.csv"));
      write_selection_header(selections);
    }

    PretrainHooks hooks;
    hooks.on_epoch = [&](const EpochMetrics& m) {
      write_metrics_row(metrics, m);
      out << fmt::format("epoch {} step {} loss {:.6f} additional {:.6f}{}\n", m.epoch,
                         m.step, m.loss_main, m.loss_additional,
                         m.tp_rate ? fmt::format(" tp_rate {:.4f}", *m.tp_rate) : "");
    };
    hooks.on_checkpoint = [&](int epoch, const TrainState& s, const EmaSchedule& ema) {
      const std::string name = epoch == config.train.epochs
                                   ? std::string("checkpoint.json")
                                   : fmt::format("checkpoint_epoch{:04}.json", epoch);
      save_checkpoint(out_path(config, name), s, ema);
    };
    if (config.io.dump_selections) {
      hooks.on_selection = [&](const SelectionRecord& r) { write_selection_row(selections, r); };
    }
    pretrain(config, split.train, make_policy(config, reference), hooks);
    out << "wrote " << config.io.out_dir << '\n';
    return kExitOk;
  });
}

int cmd_eval(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = prepare(opts);
    const TrainTestSplit split = load_split(config);
    const Checkpoint ck =
        require_checkpoint(opts.checkpoint, config, split.train.samples.cols());
    const Dataset probe_train =
        probe_subset(split.train, config.eval.probe_label_fraction,
                     derive_seed(config.seed, "probe_labels"));
    const MlpNetwork& encoder = ck.state.towers.online_encoder;
    const ProbeResult probe = linear_probe(encoder, probe_train, split.test,
                                           config.eval.probe_epochs, config.eval.probe_lr);
    const double knn = knn_eval(encoder, probe_train, split.test, config.eval.knn_k);
    for (const std::string& w : probe.warnings) err << "warning: " << w << '\n';

    echo_config(config);
    std::ofstream f = open_output(out_path(config, "eval.csv"));
    f << "metric,value\n";
    f << fmt::format("probe_accuracy,{}\nknn_accuracy,{}\n", probe.accuracy, knn);
    out << fmt::format("probe_accuracy {:.4f}\nknn_accuracy {:.4f}\n", probe.accuracy, knn);
    return kExitOk;
  });
}

int cmd_compare(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = prepare(opts);
    const CompareReport report =
        compare_policies(config, config.eval.policies, config.eval.seeds);
    echo_config(config);
    {
      std::ofstream f = open_output(out_path(config, "compare_cells.csv"));
      write_cells_csv(f, report);
    }
    {
      std::ofstream f = open_output(out_path(config, "compare.csv"));
      write_report_csv(f, report);
    }
    {
      std::ofstream f = open_output(out_path(config, "compare.txt"));
      write_report_table(f, report);
    }
    write_report_table(out, report);
    if (report.any_failed()) {
      for (const CellResult& c : report.cells) {
        if (c.failed) {
          err << fmt::format("error: policy {} seed {} failed: {}\n", c.policy, c.seed,
                             c.error);
        }
      }
      return kExitRuntime;
    }
    return kExitOk;
  });
}

int cmd_tracin_dump(const CommonOptions& opts, const BatchSpec& batch,
                    std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = prepare(opts);
    const TrainTestSplit split = load_split(config);
    const Checkpoint ck =
        require_checkpoint(opts.checkpoint, config, split.train.samples.cols());

    if (batch.size < 2) throw ConfigError("--batch-size: must be >= 2");
    if (batch.offset + batch.size > split.train.size()) {
      throw ConfigError(fmt::format("--batch-offset: rows [{}, {}) exceed the {} train samples",
                                    batch.offset, batch.offset + batch.size,
                                    split.train.size()));
    }
    std::vector<std::size_t> rows(batch.size);
    for (std::size_t i = 0; i < batch.size; ++i) rows[i] = batch.offset + i;
    for (const auto& [src, dst] : batch.duplicates) {
      if (src >= batch.size || dst >= batch.size || src == dst) {
        throw ConfigError(fmt::format("--duplicate: {}:{} must name two distinct rows below {}",
                                      src, dst, batch.size));
      }
      rows[dst] = rows[src];
    }
    const Dataset picked = split.train.subset(rows);
    const BatchViews views = make_views(picked.samples, picked.labels, config.augment,
                                        picked.meta, derive_seed(config.seed, "tracin_dump"));
    const TracInMatrix m = pairwise_tracin(extract_tracin_inputs(
        ck.state.towers, views.tracin_view_a, views.tracin_view_b, config.train.base_lr));
    const Positives top = masked_argmax(m.scores, 1);

    echo_config(config);
    std::ofstream f = open_output(out_path(config, "tracin.csv"));
    f << "anchor,label,argmax,argmax_label";
    for (std::size_t j = 0; j < batch.size; ++j) f << ",s" << j;
    f << '\n';
    for (std::size_t i = 0; i < batch.size; ++i) {
      const std::size_t a = top.at(i, 0);
      f << fmt::format("{},{},{},{}", i, picked.labels[i], a, picked.labels[a]);
      for (std::size_t j = 0; j < batch.size; ++j) f << fmt::format(",{}", m.scores(i, j));
      f << '\n';
    }
    out << fmt::format("wrote {} x {} TracIn matrix to {}\n", batch.size, batch.size,
                       (fs::path(config.io.out_dir) / "tracin.csv").string());
    return kExitOk;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"BYOL pretraining with TracIn-mined additional positives"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string checkpoint;
  BatchSpec batch;
  std::vector<std::string> duplicates;

  auto add_common = [&](CLI::App* sub, bool needs_checkpoint) {
    sub->add_option("--config", opts.config_path, "run configuration (YAML)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides io.out_dir)");
    sub->add_option("--seed", seed, "root seed override");
    sub->add_option("--checkpoint", checkpoint,
                    needs_checkpoint ? "model checkpoint"
                                     : "reference checkpoint for *-pretrained policies");
  };
  CLI::App* pre = app.add_subcommand("pretrain", "pretrain and write metrics + checkpoints");
  add_common(pre, false);
  CLI::App* ev = app.add_subcommand("eval", "linear probe and kNN on a checkpoint");
  add_common(ev, true);
  CLI::App* cmp = app.add_subcommand("compare", "compare selection policies over seeds");
  add_common(cmp, false);
  CLI::App* dump = app.add_subcommand("tracin-dump", "dump the TracIn matrix of one batch");
  add_common(dump, true);
  dump->add_option("--batch-size", batch.size, "rows in the batch");
  dump->add_option("--batch-offset", batch.offset, "first train row of the batch");
  dump->add_option("--duplicate", duplicates, "copy batch row SRC over row DST (SRC:DST)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  CLI::App* chosen = app.get_subcommands().front();
  if (chosen->count("--out") > 0) opts.out_dir = out_dir;
  if (chosen->count("--seed") > 0) opts.seed = seed;
  if (chosen->count("--checkpoint") > 0) opts.checkpoint = checkpoint;

  for (const std::string& d : duplicates) {
    const auto colon = d.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument(d);
      batch.duplicates.emplace_back(std::stoul(d.substr(0, colon)),
                                    std::stoul(d.substr(colon + 1)));
    } catch (const std::exception&) {
      err << "error: --duplicate: expected SRC:DST, got '" << d << "'\n";
      return kExitConfig;
    }
  }

  if (chosen == pre) return cmd_pretrain(opts, out, err);
  if (chosen == ev) return cmd_eval(opts, out, err);
  if (chosen == cmp) return cmd_compare(opts, out, err);
  return cmd_tracin_dump(opts, batch, out, err);
}

}  // namespace byoltracin::cli
