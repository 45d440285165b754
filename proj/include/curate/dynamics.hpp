// Copyright 2026 The curate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Forgetting events from per-epoch predictions, and bootstrapped label
// correction driven by them.

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "curate/corpus.hpp"
#include "curate/error.hpp"
#include "curate/metrics.hpp"
#include "curate/model.hpp"

namespace curate {

struct ForgettingStats {
  std::string sample_id;
  std::vector<bool> correctness;
  int forget_count = 0;
  bool ever_correct = false;
};

// Correct -> incorrect transitions. Every such transition necessarily
// follows the first correct epoch, so never-correct rows count 0.
inline int count_forgetting(const std::vector<bool>& correctness) {
  int events = 0;
  for (std::size_t e = 1; e < correctness.size(); ++e) {
    if (correctness[e - 1] && !correctness[e]) ++events;
  }
  return events;
}

inline std::vector<ForgettingStats> forgetting_counts(const EpochTrace& trace) {
  if (trace.ids.empty()) throw Error(ErrorCode::kRange, "empty epoch trace");
  std::vector<ForgettingStats> out;
  out.reserve(trace.ids.size());
  for (std::size_t i = 0; i < trace.ids.size(); ++i) {
    ForgettingStats s;
    s.sample_id = trace.ids[i];
    s.correctness = trace.correctness(i);
    s.forget_count = count_forgetting(s.correctness);
    s.ever_correct = std::find(s.correctness.begin(), s.correctness.end(), true) != s.correctness.end();
    out.push_back(std::move(s));
  }
  return out;
}

// Most frequent prediction other than `exclude`; ties go to the smaller
// LabelId. nullopt when every epoch predicted `exclude`.
inline std::optional<LabelId> modal_label(const std::vector<LabelId>& epoch_preds, LabelId exclude) {
  std::map<LabelId, int> counts;
  for (LabelId p : epoch_preds) {
    if (p != exclude) ++counts[p];
  }
  std::optional<LabelId> best;
  int best_count = 0;
  for (const auto& [label, c] : counts) {
    if (c > best_count) {
      best = label;
      best_count = c;
    }
  }
  return best;
}

// forget_count -> number of samples.
inline std::map<int, std::size_t> forgetting_histogram(const std::vector<ForgettingStats>& stats) {
  std::map<int, std::size_t> h;
  for (const ForgettingStats& s : stats) ++h[s.forget_count];
  return h;
}

enum class BootstrapPolicy { kCorrect, kDelete, kHybrid };

inline std::string_view bootstrap_policy_name(BootstrapPolicy p) {
  switch (p) {
    case BootstrapPolicy::kCorrect: return "correct";
    case BootstrapPolicy::kDelete: return "delete";
    case BootstrapPolicy::kHybrid: return "hybrid";
  }
  return "correct";
}

inline BootstrapPolicy parse_bootstrap_policy(std::string_view s) {
  for (BootstrapPolicy p : {BootstrapPolicy::kCorrect, BootstrapPolicy::kDelete, BootstrapPolicy::kHybrid}) {
    if (bootstrap_policy_name(p) == s) return p;
  }
  throw Error(ErrorCode::kConfig, "unknown bootstrap policy '" + std::string(s) + "'");
}

inline constexpr int kNoThreshold = std::numeric_limits<int>::max();

struct BootstrapConfig {
  int forget_threshold = 2;
  int max_iters = 3;
  BootstrapPolicy policy = BootstrapPolicy::kCorrect;
  // Carve a dev set once (stratified, frozen across iterations) and stop
  // when its macro-F1 stops improving, undoing the last round of changes.
  bool stop_on_no_gain = false;
  double dev_fraction = 1.0 / 6.0;
  std::uint64_t seed = 0;
};

struct BootstrapResult {
  Dataset data;
  std::vector<ExperimentReport> reports;  // one per trained iteration
  CorrectionLog log;
  std::vector<std::string> deleted;
  std::vector<std::map<int, std::size_t>> histograms;  // per iteration
  bool converged = false;
};

// Each iteration trains on the working set, flags samples whose
// forget_count reaches the threshold, and relabels them to their modal
// non-current prediction (policy=correct; no candidate means deletion) or
// drops them (policy=delete). Hybrid corrects on all but the last
// iteration and deletes on the last.
inline BootstrapResult bootstrap_correct(const Dataset& data, const ModelConfig& mcfg,
                                         const BootstrapConfig& bcfg) {
  if (bcfg.max_iters < 1) throw Error(ErrorCode::kRange, "max_iters must be >= 1");
  BootstrapResult out;

  Dataset work = data;
  std::optional<Dataset> dev;
  if (bcfg.stop_on_no_gain) {
    auto [train_part, dev_part] = stratified_split(data, {bcfg.dev_fraction, bcfg.seed});
    work = std::move(train_part);
    dev = std::move(dev_part);
  }

  struct Snapshot {
    Dataset work;
    std::size_t log_size;
    std::size_t deleted_size;
  };
  std::optional<Snapshot> before_last_change;
  double prev_f1 = -1.0;

  for (int iter = 1; iter <= bcfg.max_iters; ++iter) {
    ModelConfig cfg = mcfg;
    cfg.seed = derive_seed(mcfg.seed, static_cast<std::uint64_t>(iter));
    const TrainResult tr = train(work, cfg);

    const Dataset& eval_set = dev ? *dev : work;
    ExperimentReport report =
        evaluate_predictions(gold_labels(eval_set), predict(tr.model, eval_set), data.labels());
    report.seed = cfg.seed;
    report.extra["iteration"] = iter;
    report.extra["evaluated_on"] = dev ? "held-out-dev" : "training-set";
    report.extra["train_size"] = work.size();

    if (bcfg.stop_on_no_gain && iter > 1 && report.macro_f1 <= prev_f1) {
      report.extra["stopped"] = "no dev gain; last corrections undone";
      out.reports.push_back(std::move(report));
      if (before_last_change) {
        work = before_last_change->work;
        out.log.resize(before_last_change->log_size);
        out.deleted.resize(before_last_change->deleted_size);
      }
      break;
    }
    prev_f1 = report.macro_f1;

    const std::vector<ForgettingStats> stats = forgetting_counts(tr.trace);
    out.histograms.push_back(forgetting_histogram(stats));

    BootstrapPolicy now = bcfg.policy;
    if (now == BootstrapPolicy::kHybrid) {
      now = iter == bcfg.max_iters ? BootstrapPolicy::kDelete : BootstrapPolicy::kCorrect;
    }

    std::vector<Sample> next;
    next.reserve(work.size());
    std::size_t changes = 0;
    const Snapshot snap{work, out.log.size(), out.deleted.size()};
    for (std::size_t i = 0; i < work.size(); ++i) {
      const Sample& s = work[i];
      if (stats[i].forget_count < bcfg.forget_threshold) {
        next.push_back(s);
        continue;
      }
      ++changes;
      std::optional<LabelId> target;
      if (now == BootstrapPolicy::kCorrect) target = modal_label(tr.trace.predicted[i], s.label);
      if (!target) {
        out.deleted.push_back(s.id);
        continue;
      }
      const auto& preds = tr.trace.predicted[i];
      const double share = static_cast<double>(std::count(preds.begin(), preds.end(), *target)) /
                           static_cast<double>(preds.size());
      out.log.push_back({s.id, s.label, *target, Mechanism::kForgetting, share});
      Sample c = s;
      c.label = *target;
      c.origin = Origin::kCorrected;
      next.push_back(std::move(c));
    }
    report.extra["flagged"] = changes;
    out.reports.push_back(std::move(report));
    if (changes == 0) {
      out.converged = true;
      break;
    }
    before_last_change = snap;
    work = work.with_samples(std::move(next));
  }

  // Reassemble in the input order: dev rows untouched, corrected rows
  // replaced, deleted rows gone.
  std::vector<Sample> merged;
  merged.reserve(data.size());
  for (const Sample& s : data.samples()) {
    if (dev && dev->find(s.id)) {
      merged.push_back(s);
    } else if (auto idx = work.find(s.id)) {
      merged.push_back(work[*idx]);
    }
  }
  out.data = data.with_samples(std::move(merged));
  return out;
}

}  // namespace curate
