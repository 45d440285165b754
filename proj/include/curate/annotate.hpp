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

// Annotation task selection, a simulated annotator for synthetic corpora,
// and merging corrections back into a dataset.

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "curate/corpus.hpp"
#include "curate/detect.hpp"
#include "curate/error.hpp"
#include "curate/noise.hpp"
#include "curate/rng.hpp"
#include "curate/synth.hpp"

namespace curate {

enum class SelectionStrategy { kRandom, kSelective };

inline std::string_view selection_strategy_name(SelectionStrategy s) {
  return s == SelectionStrategy::kRandom ? "random" : "selective";
}

inline SelectionStrategy parse_selection_strategy(std::string_view s) {
  if (s == "random") return SelectionStrategy::kRandom;
  if (s == "selective") return SelectionStrategy::kSelective;
  throw Error(ErrorCode::kConfig, "unknown selection strategy '" + std::string(s) + "'");
}

enum class TaskStatus { kPending, kDone, kSkipped };

inline std::string_view task_status_name(TaskStatus s) {
  switch (s) {
    case TaskStatus::kPending: return "pending";
    case TaskStatus::kDone: return "done";
    case TaskStatus::kSkipped: return "skipped";
  }
  return "pending";
}

struct Suggestion {
  LabelId label{};
  double probability = 0.0;

  bool operator==(const Suggestion&) const = default;
};

struct AnnotationTask {
  std::string sample_id;
  std::string text;
  LabelId current_label{};
  std::vector<Suggestion> suggested;  // probability descending
  TaskStatus status = TaskStatus::kPending;

  bool operator==(const AnnotationTask&) const = default;
};

inline Json task_to_json(const AnnotationTask& t) {
  Json j;
  j["id"] = t.sample_id;
  j["text"] = t.text;
  j["current_label"] = to_int(t.current_label);
  Json sug = Json::array();
  for (const Suggestion& s : t.suggested) {
    sug.push_back({{"label", to_int(s.label)}, {"probability", s.probability}});
  }
  j["suggested"] = std::move(sug);
  j["status"] = task_status_name(t.status);
  return j;
}

// Top-k labels of a probability vector, ties by smaller LabelId.
inline std::vector<Suggestion> top_suggestions(const std::vector<double>& probs,
                                               const std::vector<LabelId>& labels, std::size_t k = 5) {
  std::vector<std::size_t> order(labels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return labels[a] < labels[b];
  });
  if (order.size() > k) order.resize(k);
  std::vector<Suggestion> out;
  for (std::size_t i : order) out.push_back({labels[i], probs[i]});
  return out;
}

// `scores` must be rank-ordered (as produced by rank_suspicious); `cv`
// supplies the suggestions. Random picks are returned in rank order so the
// two strategies present tasks the same way.
inline std::vector<AnnotationTask> select_for_annotation(const Dataset& data,
                                                         const std::vector<SuspicionScore>& scores,
                                                         const CrossValResult& cv, std::size_t budget,
                                                         SelectionStrategy strategy, std::uint64_t seed) {
  if (budget > scores.size()) {
    throw Error(ErrorCode::kRange, "annotation budget " + std::to_string(budget) + " exceeds " +
                                       std::to_string(scores.size()) + " scored samples");
  }
  std::vector<std::size_t> picked;
  if (strategy == SelectionStrategy::kSelective) {
    for (std::size_t i = 0; i < budget; ++i) picked.push_back(i);
  } else {
    // Draw over id order so the sample does not depend on score ordering.
    std::vector<std::size_t> by_id(scores.size());
    for (std::size_t i = 0; i < by_id.size(); ++i) by_id[i] = i;
    std::sort(by_id.begin(), by_id.end(),
              [&](std::size_t a, std::size_t b) { return scores[a].sample_id < scores[b].sample_id; });
    Rng rng(derive_seed(seed, "annotate"));
    for (std::size_t k : rng.sample_indices(by_id.size(), budget)) picked.push_back(by_id[k]);
    std::sort(picked.begin(), picked.end());
  }

  std::unordered_map<std::string, const PredictionRecord*> record_of;
  for (const PredictionRecord& r : cv.records) record_of[r.sample_id] = &r;

  std::vector<AnnotationTask> tasks;
  tasks.reserve(picked.size());
  for (std::size_t i : picked) {
    const std::string& id = scores[i].sample_id;
    const auto idx = data.find(id);
    if (!idx) throw Error(ErrorCode::kReference, "score for unknown sample '" + id + "'");
    AnnotationTask t;
    t.sample_id = id;
    t.text = data[*idx].text;
    t.current_label = data[*idx].label;
    if (auto it = record_of.find(id); it != record_of.end()) {
      t.suggested = top_suggestions(it->second->probs, cv.labels);
    }
    tasks.push_back(std::move(t));
  }
  return tasks;
}

struct Correction {
  std::string sample_id;
  LabelId new_label{};
  std::string annotator_id;
  std::int64_t timestamp = 0;

  bool operator==(const Correction&) const = default;
};

inline Json correction_to_json(const Correction& c) {
  Json j;
  j["id"] = c.sample_id;
  j["label"] = to_int(c.new_label);
  j["annotator"] = c.annotator_id;
  j["timestamp"] = c.timestamp;
  return j;
}

inline Correction correction_from_json(const Json& j, const std::string& at) {
  try {
    Correction c;
    c.sample_id = j.at("id").get<std::string>();
    c.new_label = detail::parse_label_field(j.at("label"), at);
    c.annotator_id = j.value("annotator", std::string());
    c.timestamp = j.value("timestamp", std::int64_t{0});
    return c;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, at + ": " + e.what());
  }
}

inline void write_corrections(const std::vector<Correction>& cs, std::ostream& out) {
  for (const Correction& c : cs) out << correction_to_json(c).dump() << '\n';
}

inline std::vector<Correction> read_corrections(std::istream& in, const std::string& source) {
  std::vector<Correction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    const std::string at = detail::where(source, lineno);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParse, at + ": " + e.what());
    }
    out.push_back(correction_from_json(j, at));
  }
  return out;
}

inline std::vector<Correction> load_corrections(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return read_corrections(in, path);
}

struct AnnotatorProfile {
  double accuracy = 0.92;
  std::uint64_t seed = 0;
  // Err among the task's suggestions instead of uniformly over all labels.
  bool confusable = false;
  std::string annotator_id = "simulated";

  void validate() const {
    if (!(accuracy > 0.0 && accuracy <= 1.0)) {
      throw Error(ErrorCode::kRange, "annotator accuracy must lie in (0,1]");
    }
  }
};

// Clean label per id: the FlipLog's old label for flipped samples, the
// current label otherwise.
inline LabelMap truth_from_flip_log(const Dataset& noisy, const FlipLog& log) {
  LabelMap truth;
  for (const Sample& s : noisy.samples()) truth[s.id] = s.label;
  for (const FlipEntry& e : log) {
    if (truth.count(e.sample_id)) truth[e.sample_id] = e.old_label;
  }
  return truth;
}

// Each answer is drawn from a generator keyed by (profile.seed, sample id),
// so a task's answer does not depend on which other tasks are present.
inline std::vector<Correction> simulate_annotator(const std::vector<AnnotationTask>& tasks,
                                                  const LabelMap& truth, const std::vector<LabelId>& labels,
                                                  const AnnotatorProfile& profile) {
  profile.validate();
  std::vector<Correction> out;
  out.reserve(tasks.size());
  for (const AnnotationTask& t : tasks) {
    auto it = truth.find(t.sample_id);
    if (it == truth.end()) {
      throw Error(ErrorCode::kOracleGap, "no ground truth for sample '" + t.sample_id + "'");
    }
    const LabelId gold = it->second;
    Rng rng(derive_seed(profile.seed, t.sample_id));
    LabelId answer = gold;
    if (!rng.bernoulli(profile.accuracy)) {
      std::vector<LabelId> wrong;
      if (profile.confusable) {
        for (const Suggestion& s : t.suggested) {
          if (s.label != gold) wrong.push_back(s.label);
        }
      }
      if (wrong.empty()) {
        for (LabelId l : labels) {
          if (l != gold) wrong.push_back(l);
        }
      }
      if (!wrong.empty()) answer = wrong[rng.below(wrong.size())];
    }
    out.push_back({t.sample_id, answer, profile.annotator_id, 0});
  }
  return out;
}

// Later corrections for the same id win. Corrections equal to the label in
// force at that point change nothing and are not logged.
inline CorrectionResult apply_corrections(const Dataset& data, const std::vector<Correction>& corrections) {
  CorrectionResult out;
  std::vector<Sample> samples = data.samples();
  for (const Correction& c : corrections) {
    const auto idx = data.find(c.sample_id);
    if (!idx) throw Error(ErrorCode::kReference, "correction for unknown sample '" + c.sample_id + "'");
    if (!data.has_label(c.new_label)) {
      throw Error(ErrorCode::kSchema, "correction uses unknown label " + std::to_string(to_int(c.new_label)));
    }
    Sample& s = samples[*idx];
    if (s.label == c.new_label) continue;
    out.log.push_back({s.id, s.label, c.new_label, Mechanism::kAnnotation, 1.0});
    s.label = c.new_label;
    s.origin = Origin::kCorrected;
  }
  out.data = data.with_samples(std::move(samples));
  return out;
}

}  // namespace curate
