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

#include "byoltracin/eval.h"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <set>

#include "byoltracin/errors.h"
#include "byoltracin/kernels.h"
#include "byoltracin/pretrain.h"
#include "byoltracin/random.h"

namespace byoltracin {
namespace {

int class_count(const Dataset& a, const Dataset& b) {
  int k = std::max(a.meta.num_classes, b.meta.num_classes);
  for (const int y : a.labels) k = std::max(k, y + 1);
  for (const int y : b.labels) k = std::max(k, y + 1);
  return k;
}

std::size_t argmax_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

void standardize(Tensor& f, const std::vector<double>& mean,
                 const std::vector<double>& scale) {
  for (std::size_t r = 0; r < f.rows(); ++r) {
    auto row = f.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - mean[c]) / scale[c];
  }
}

void normalize_rows(Tensor& f) {
  for (std::size_t r = 0; r < f.rows(); ++r) {
    auto row = f.row(r);
    const double n = norm2(row);
    if (n <= 1e-12) continue;
    for (double& v : row) v /= n;
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

ProbeResult linear_probe(const MlpNetwork& encoder, const Dataset& train,
                         const Dataset& test, int epochs, double lr) {
  if (epochs < 0) throw ConfigError("eval.probe_epochs: must be >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("eval.probe_lr: must be > 0");
  if (train.size() == 0) throw ConfigError("linear probe needs a non-empty train set");
  const std::uint64_t before = parameter_hash(encoder);

  ProbeResult result;
  const int k = class_count(train, test);
  std::vector<std::size_t> counts(k, 0);
  for (const int y : train.labels) ++counts[y];
  for (int c = 0; c < k; ++c) {
    if (counts[c] == 0) {
      result.warnings.push_back(fmt::format("class {} absent from probe training set", c));
    }
  }

  Tensor ftrain = encoder.infer(train.samples);
  Tensor ftest = encoder.infer(test.samples);
  const std::size_t d = ftrain.cols();
  const std::size_t n = ftrain.rows();
  std::vector<double> mean(d, 0.0), scale(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) mean[c] += ftrain(r, c);
  }
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double e = ftrain(r, c) - mean[c];
      scale[c] += e * e;
    }
  }
  for (double& s : scale) {
    s = std::sqrt(s / static_cast<double>(n));
    if (s <= 1e-12) s = 1.0;
  }
  standardize(ftrain, mean, scale);
  standardize(ftest, mean, scale);

  const auto uk = static_cast<std::size_t>(k);
  Tensor w({uk, d});
  Tensor b({uk});
  Tensor logits({n, uk});
  Tensor gw({uk, d});
  Tensor gb({uk});
  for (int e = 0; e < epochs; ++e) {
    kernels::affine_forward(ftrain, w, b, logits);
    for (std::size_t r = 0; r < n; ++r) {
      auto row = logits.row(r);
      const double mx = *std::max_element(row.begin(), row.end());
      double z = 0.0;
      for (double& v : row) {
        v = std::exp(v - mx);
        z += v;
      }
      for (double& v : row) v /= z;
      row[train.labels[r]] -= 1.0;
    }
    kernels::weight_grad(logits, ftrain, 1.0 / static_cast<double>(n), gw);
    kernels::bias_grad(logits, 1.0 / static_cast<double>(n), gb);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
    for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * gb[i];
  }

  Tensor out({test.size(), uk});
  kernels::affine_forward(ftest, w, b, out);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < test.size(); ++r) {
    if (static_cast<int>(argmax_lowest(out.row(r))) == test.labels[r]) ++correct;
  }
  result.accuracy = test.size() == 0
                        ? 0.0
                        : static_cast<double>(correct) / static_cast<double>(test.size());
  if (parameter_hash(encoder) != before) {
    throw StateError("encoder parameters changed during the linear probe");
  }
  return result;
}

double knn_eval(const MlpNetwork& encoder, const Dataset& train,
                const Dataset& test, std::size_t k) {
  if (k == 0 || k > train.size()) {
    throw ConfigError(fmt::format("eval.knn_k: must be in [1, {}], got {}",
                                  train.size(), k));
  }
  const std::uint64_t before = parameter_hash(encoder);
  Tensor ftrain = encoder.infer(train.samples);
  Tensor ftest = encoder.infer(test.samples);
  normalize_rows(ftrain);
  normalize_rows(ftest);
  const int classes = class_count(train, test);

  std::vector<std::size_t> order(train.size());
  std::vector<double> dist(train.size());
  std::vector<int> votes(classes);
  std::size_t correct = 0;
  for (std::size_t t = 0; t < test.size(); ++t) {
    for (std::size_t i = 0; i < train.size(); ++i) {
      dist[i] = 1.0 - dot(ftest.row(t), ftrain.row(i));
    }
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(k), order.end(),
                      [&](std::size_t a, std::size_t b) {
                        return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                      });
    std::fill(votes.begin(), votes.end(), 0);
    for (std::size_t j = 0; j < k; ++j) ++votes[train.labels[order[j]]];
    const auto pred = std::max_element(votes.begin(), votes.end()) - votes.begin();
    if (pred == test.labels[t]) ++correct;
  }
  if (parameter_hash(encoder) != before) {
    throw StateError("encoder parameters changed during kNN evaluation");
  }
  return test.size() == 0 ? 0.0
                          : static_cast<double>(correct) / static_cast<double>(test.size());
}

TrainTestSplit load_split(const RunConfig& config) {
  const Dataset data = load_dataset(config);
  return split_dataset(data, config.dataset.test_fraction,
                       derive_seed(config.dataset_seed(), "split"));
}

Dataset probe_subset(const Dataset& train, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ConfigError("eval.probe_label_fraction: must be in (0, 1]");
  }
  if (fraction == 1.0) return train;
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < train.size(); ++i) by_class[train.labels[i]].push_back(i);
  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (auto& [label, idx] : by_class) {
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    const auto n = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(fraction * static_cast<double>(idx.size()))));
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<long>(n));
  }
  std::sort(keep.begin(), keep.end());
  return train.subset(keep);
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

bool CompareReport::any_failed() const {
  return std::any_of(cells.begin(), cells.end(),
                     [](const CellResult& c) { return c.failed; });
}

const PolicyRow& CompareReport::row(const std::string& policy) const {
  for (const PolicyRow& r : rows) {
    if (r.policy == policy) return r;
  }
  throw ContractError("no report row for policy '" + policy + "'");
}

CompareReport compare_policies(const RunConfig& config,
                               const std::vector<std::string>& policies,
                               const std::vector<std::uint64_t>& seeds) {
  if (policies.size() < 2) {
    throw ConfigError("eval.policies: at least 2 policies required, got " +
                      std::to_string(policies.size()));
  }
  std::vector<PolicyKind> kinds;
  for (const std::string& p : policies) kinds.push_back(policy_kind_from_string(p));
  if (std::set<std::string>(policies.begin(), policies.end()).size() != policies.size()) {
    throw ConfigError("eval.policies: entries must be distinct");
  }
  const std::set<std::uint64_t> distinct(seeds.begin(), seeds.end());
  if (distinct.size() != seeds.size()) {
    throw ConfigError("eval.seeds: seeds must differ");
  }
  if (seeds.size() < 3) {
    throw ConfigError("eval.seeds: at least 3 seeds required, got " +
                      std::to_string(seeds.size()));
  }
  config.validate();

  // The dataset and its split stay fixed across cells; only training seeds vary.
  RunConfig base = config;
  base.dataset.seed = config.dataset_seed();
  const TrainTestSplit split = load_split(base);

  auto cell_config = [&](std::uint64_t seed, PolicyKind kind) {
    RunConfig c = base;
    c.seed = seed;
    c.policy.kind = kind;
    return c;
  };
  auto evaluate = [&](const MlpNetwork& encoder, std::uint64_t seed, CellResult& cell) {
    const Dataset probe_train = probe_subset(split.train, base.eval.probe_label_fraction,
                                             derive_seed(seed, "probe_labels"));
    const ProbeResult probe = linear_probe(encoder, probe_train, split.test,
                                           base.eval.probe_epochs, base.eval.probe_lr);
    cell.probe_accuracy = probe.accuracy;
    cell.warnings = probe.warnings;
    cell.knn_accuracy = knn_eval(encoder, probe_train, split.test, base.eval.knn_k);
  };
  auto curve = [](const PretrainResult& r) {
    std::vector<double> out;
    for (const EpochMetrics& m : r.metrics) {
      if (m.tp_rate) out.push_back(*m.tp_rate);
    }
    return out;
  };

  // Plain BYOL runs double as the reference model and the "none" row.
  const bool need_reference =
      std::any_of(kinds.begin(), kinds.end(), [](PolicyKind k) {
        return k == PolicyKind::kNone || needs_reference(k);
      });
  const long ns = static_cast<long>(seeds.size());
  std::vector<std::shared_ptr<const ByolTowers>> reference(seeds.size());
  std::vector<CellResult> reference_cells(seeds.size());
  if (need_reference) {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < ns; ++i) {
      CellResult& cell = reference_cells[i];
      cell.policy = to_string(PolicyKind::kNone);
      cell.seed = seeds[i];
      try {
        const RunConfig c = cell_config(seeds[i], PolicyKind::kNone);
        PretrainResult r = pretrain(c, split.train, make_policy(c));
        evaluate(r.state.towers.online_encoder, seeds[i], cell);
        reference[i] = std::make_shared<const ByolTowers>(std::move(r.state.towers));
      } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
      }
    }
  }

  std::vector<std::string> row_names = {kRandomEncoderRow};
  row_names.insert(row_names.end(), policies.begin(), policies.end());
  std::vector<CellResult> cells(row_names.size() * seeds.size());
  const long total = static_cast<long>(cells.size());
#pragma omp parallel for schedule(dynamic)
  for (long t = 0; t < total; ++t) {
    const std::size_t row = static_cast<std::size_t>(t) / seeds.size();
    const std::size_t si = static_cast<std::size_t>(t) % seeds.size();
    CellResult& cell = cells[t];
    cell.policy = row_names[row];
    cell.seed = seeds[si];
    try {
      if (row == 0) {
        const RunConfig c = cell_config(seeds[si], PolicyKind::kNone);
        const TrainState init = initial_state(c, split.train.samples.cols());
        evaluate(init.towers.online_encoder, seeds[si], cell);
        continue;
      }
      const PolicyKind kind = kinds[row - 1];
      if (kind == PolicyKind::kNone) {
        cell = reference_cells[si];
        continue;
      }
      std::shared_ptr<const ByolTowers> ref;
      if (needs_reference(kind)) {
        if (!reference[si]) {
          throw Error("reference run failed: " + reference_cells[si].error);
        }
        ref = reference[si];
      }
      const RunConfig c = cell_config(seeds[si], kind);
      const PretrainResult r = pretrain(c, split.train, make_policy(c, ref));
      cell.tp_rate_curve = curve(r);
      evaluate(r.state.towers.online_encoder, seeds[si], cell);
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.error = e.what();
    }
  }

  CompareReport report;
  report.cells = std::move(cells);
  for (std::size_t row = 0; row < row_names.size(); ++row) {
    PolicyRow pr;
    pr.policy = row_names[row];
    std::vector<double> probe, knn, final_tp;
    std::vector<std::vector<double>> curves;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      const CellResult& cell = report.cells[row * seeds.size() + si];
      if (cell.failed) {
        ++pr.failed;
        continue;
      }
      pr.seeds.push_back(cell.seed);
      probe.push_back(cell.probe_accuracy);
      knn.push_back(cell.knn_accuracy);
      if (!cell.tp_rate_curve.empty()) {
        final_tp.push_back(cell.tp_rate_curve.back());
        curves.push_back(cell.tp_rate_curve);
      }
    }
    pr.probe = summarize(probe);
    pr.knn = summarize(knn);
    if (!final_tp.empty()) {
      pr.final_tp_rate = summarize(final_tp);
      const std::size_t len = curves.front().size();
      pr.mean_tp_rate_curve.assign(len, 0.0);
      for (const auto& c : curves) {
        for (std::size_t e = 0; e < len && e < c.size(); ++e) {
          pr.mean_tp_rate_curve[e] += c[e] / static_cast<double>(curves.size());
        }
      }
    }
    report.rows.push_back(std::move(pr));
  }
  return report;
}

void write_cells_csv(std::ostream& out, const CompareReport& report) {
  out << "policy,seed,status,probe_accuracy,knn_accuracy,final_tp_rate,error\n";
  for (const CellResult& c : report.cells) {
    out << fmt::format("{},{},{},{},{},{},{}\n", c.policy, c.seed,
                       c.failed ? "failed" : "ok",
                       c.failed ? std::string() : fmt::format("{}", c.probe_accuracy),
                       c.failed ? std::string() : fmt::format("{}", c.knn_accuracy),
                       c.tp_rate_curve.empty()
                           ? std::string()
                           : fmt::format("{}", c.tp_rate_curve.back()),
                       csv_field(c.error));
  }
}

void write_report_csv(std::ostream& out, const CompareReport& report) {
  out << "policy,n,failed,probe_mean,probe_std,knn_mean,knn_std,tp_rate_mean,tp_rate_std\n";
  for (const PolicyRow& r : report.rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.policy, r.seeds.size(), r.failed,
                       r.probe.mean, r.probe.std, r.knn.mean, r.knn.std,
                       r.final_tp_rate ? fmt::format("{}", r.final_tp_rate->mean) : "",
                       r.final_tp_rate ? fmt::format("{}", r.final_tp_rate->std) : "");
  }
}

void write_report_table(std::ostream& out, const CompareReport& report) {
  std::size_t w = 6;
  for (const PolicyRow& r : report.rows) w = std::max(w, r.policy.size());
  out << fmt::format("{:<{}}  {:>3}  {:>6}  {:>17}  {:>17}  {:>17}\n", "policy", w, "n",
                     "failed", "probe", "knn", "tp_rate");
  for (const PolicyRow& r : report.rows) {
    const std::string tp = r.final_tp_rate ? fmt::format("{:.4f} +- {:.4f}",
                                                         r.final_tp_rate->mean,
                                                         r.final_tp_rate->std)
                                           : std::string("-");
    out << fmt::format("{:<{}}  {:>3}  {:>6}  {:>17}  {:>17}  {:>17}\n", r.policy, w,
                       r.seeds.size(), r.failed,
                       fmt::format("{:.4f} +- {:.4f}", r.probe.mean, r.probe.std),
                       fmt::format("{:.4f} +- {:.4f}", r.knn.mean, r.knn.std), tp);
  }
}

}  // namespace byoltracin
