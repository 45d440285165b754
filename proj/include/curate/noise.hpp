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

// Benchmark-style label noise: an exact budget of samples is drawn without
// replacement and each gets a different label, either uniformly (random
// flip) or among the model's most probable alternatives (hard flip).

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "curate/corpus.hpp"
#include "curate/error.hpp"
#include "curate/model.hpp"
#include "curate/rng.hpp"

namespace curate {

enum class FlipStrategy { kRandom, kHard, kMixed };

inline std::string_view flip_strategy_name(FlipStrategy s) {
  switch (s) {
    case FlipStrategy::kRandom: return "random_flip";
    case FlipStrategy::kHard: return "hard_flip";
    case FlipStrategy::kMixed: return "mixed";
  }
  return "random_flip";
}

inline FlipStrategy parse_flip_strategy(std::string_view s) {
  for (FlipStrategy f : {FlipStrategy::kRandom, FlipStrategy::kHard, FlipStrategy::kMixed}) {
    if (flip_strategy_name(f) == s) return f;
  }
  if (s == "random") return FlipStrategy::kRandom;
  if (s == "hard") return FlipStrategy::kHard;
  throw Error(ErrorCode::kConfig, "unknown noise strategy '" + std::string(s) + "'");
}

struct NoiseSpec {
  double rate = 0.4;
  FlipStrategy strategy = FlipStrategy::kMixed;
  std::uint64_t seed = 0;
  int top_k = 5;
};

struct FlipEntry {
  std::string sample_id;
  LabelId old_label{};
  LabelId new_label{};
  FlipStrategy strategy = FlipStrategy::kRandom;  // kRandom or kHard, never kMixed

  bool operator==(const FlipEntry&) const = default;
};

using FlipLog = std::vector<FlipEntry>;

struct NoiseResult {
  Dataset data;
  FlipLog log;
  std::vector<std::string> warnings;
};

// The top_k most probable labels once `original` is removed, most probable
// first; equal probabilities order by smaller LabelId.
inline std::vector<LabelId> hard_flip_candidates(const std::vector<double>& probs,
                                                 const std::vector<LabelId>& labels,
                                                 LabelId original, int top_k) {
  if (probs.size() != labels.size()) {
    throw Error(ErrorCode::kShape, "probability vector and label list differ in length");
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != original) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return labels[a] < labels[b];
  });
  if (order.size() > static_cast<std::size_t>(std::max(top_k, 0))) order.resize(top_k);
  std::vector<LabelId> out;
  for (std::size_t i : order) out.push_back(labels[i]);
  return out;
}

inline std::size_t flip_budget(std::size_t n, double rate) {
  return static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
}

// `model` may be null for random_flip; hard_flip and mixed require it.
inline NoiseResult inject_noise(const Dataset& data, const NoiseSpec& spec,
                                const TrainedModel* model) {
  if (!(spec.rate >= 0.0 && spec.rate <= 1.0)) {
    throw Error(ErrorCode::kRange, "noise rate must lie in [0,1]");
  }
  if (spec.top_k < 1) throw Error(ErrorCode::kRange, "top_k must be >= 1");
  NoiseResult result;
  const std::size_t budget = flip_budget(data.size(), spec.rate);
  if (budget == 0) {
    result.data = data;
    return result;
  }
  const std::vector<LabelId>& labels = data.labels();
  if (labels.size() < 2) {
    throw Error(ErrorCode::kDegenerate, "label noise needs at least 2 labels");
  }
  if (spec.strategy != FlipStrategy::kRandom) {
    if (!model) throw Error(ErrorCode::kConfig, "hard_flip needs a trained model");
    if (model->labels() != labels) {
      throw Error(ErrorCode::kSchema, "noise model label set differs from the dataset's");
    }
    if (labels.size() == 2) {
      result.warnings.push_back(
          "hard_flip on a 2-label dataset degenerates to the only other label");
    }
  }

  const std::vector<std::size_t> order = data.id_order();
  Rng select_rng(derive_seed(spec.seed, "select"));
  std::vector<std::size_t> picked = select_rng.sample_indices(order.size(), budget);
  std::sort(picked.begin(), picked.end());

  Rng rng(derive_seed(spec.seed, "assign"));
  std::vector<Sample> samples = data.samples();
  for (std::size_t p : picked) {
    Sample& s = samples[order[p]];
    FlipStrategy used = spec.strategy;
    if (used == FlipStrategy::kMixed) {
      used = rng.bernoulli(0.5) ? FlipStrategy::kHard : FlipStrategy::kRandom;
    }
    LabelId next{};
    if (used == FlipStrategy::kRandom) {
      std::vector<LabelId> others;
      for (LabelId l : labels) if (l != s.label) others.push_back(l);
      next = others[rng.below(others.size())];
    } else {
      const std::vector<LabelId> cands =
          hard_flip_candidates(predict_proba(*model, s.text), labels, s.label, spec.top_k);
      next = cands[rng.below(cands.size())];
    }
    result.log.push_back({s.id, s.label, next, used});
    s.label = next;
  }
  result.data = data.with_samples(std::move(samples));
  return result;
}

inline void write_flip_log(const FlipLog& log, std::ostream& out) {
  for (const FlipEntry& e : log) {
    Json j;
    j["id"] = e.sample_id;
    j["old_label"] = to_int(e.old_label);
    j["new_label"] = to_int(e.new_label);
    j["strategy"] = flip_strategy_name(e.strategy);
    out << j.dump() << '\n';
  }
}

inline void save_flip_log(const FlipLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  write_flip_log(log, out);
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

inline FlipLog load_flip_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  FlipLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    const std::string at = detail::where(path, lineno);
    try {
      Json j = Json::parse(line);
      FlipEntry e;
      e.sample_id = j.at("id").get<std::string>();
      e.old_label = detail::parse_label_field(j.at("old_label"), at);
      e.new_label = detail::parse_label_field(j.at("new_label"), at);
      e.strategy = parse_flip_strategy(j.value("strategy", std::string("random_flip")));
      log.push_back(std::move(e));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParse, at + ": " + e.what());
    }
  }
  return log;
}

}  // namespace curate
