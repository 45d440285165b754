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

// Out-of-fold scoring, entropy ranking of suspicious labels, and ensemble
// cross-validation label correction.

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "curate/corpus.hpp"
#include "curate/error.hpp"
#include "curate/model.hpp"
#include "curate/parallel.hpp"
#include "curate/rng.hpp"

namespace curate {

struct PredictionRecord {
  std::string sample_id;
  LabelId given{};
  int fold = 0;
  std::vector<double> probs;                   // seed average, dataset label order
  std::vector<std::vector<double>> seed_probs;  // one vector per seed
  std::vector<LabelId> seed_pred;
  std::vector<double> seed_conf;               // probability of seed_pred
};

struct CrossValResult {
  std::vector<LabelId> labels;           // column order of every probs vector
  std::vector<PredictionRecord> records;  // dataset order
  std::vector<int> fold_of;              // per sample
  std::vector<std::string> warnings;
};

// Stratified fold assignment: per label (ascending), members ordered by a
// seeded hash of their id are dealt round-robin, continuing the rotation
// across labels so fold sizes differ by at most one.
inline std::vector<int> stratified_folds(const Dataset& data, int k, std::uint64_t seed) {
  std::map<LabelId, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < data.size(); ++i) by_label[data[i].label].push_back(i);
  std::vector<int> fold(data.size(), 0);
  std::size_t next = 0;
  for (auto& [label, members] : by_label) {
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      const auto ra = keyed_rank(seed, data[a].id), rb = keyed_rank(seed, data[b].id);
      if (ra != rb) return ra < rb;
      return data[a].id < data[b].id;
    });
    for (std::size_t i : members) fold[i] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  }
  return fold;
}

// For every sample, one out-of-fold probability vector per seed. Folds come
// from seeds.front(); the model for (fold f, seed s) uses seed
// derive_seed(s, f). Jobs may run in parallel; results land in fixed slots.
inline CrossValResult crossval_probs(const Dataset& data, int k, const ModelConfig& config,
                                     const std::vector<std::uint64_t>& seeds) {
  if (k < 2) throw Error(ErrorCode::kRange, "need at least 2 folds");
  if (data.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::kRange, "fewer samples than folds");
  }
  if (seeds.empty()) throw Error(ErrorCode::kRange, "need at least one seed");

  CrossValResult out;
  out.labels = data.labels();
  for (const auto& [label, count] : data.label_histogram()) {
    if (count == 0 || count >= static_cast<std::size_t>(k)) continue;
    if (count == 1) {
      out.warnings.push_back("label " + std::to_string(to_int(label)) +
                             " has a single sample; its fold trains without that label");
    } else {
      out.warnings.push_back("label " + std::to_string(to_int(label)) + " has " +
                             std::to_string(count) + " samples (< " + std::to_string(k) +
                             " folds); spread so every fold trains on it");
    }
  }
  out.fold_of = stratified_folds(data, k, seeds.front());

  std::vector<std::vector<std::size_t>> test_idx(k);
  for (std::size_t i = 0; i < data.size(); ++i) test_idx[out.fold_of[i]].push_back(i);

  const std::size_t jobs = static_cast<std::size_t>(k) * seeds.size();
  // probs_of[job][j] belongs to sample test_idx[fold][j].
  std::vector<std::vector<std::vector<double>>> probs_of(jobs);
  parallel_for(jobs, [&](std::size_t job) {
    const int f = static_cast<int>(job / seeds.size());
    const std::size_t s = job % seeds.size();
    std::vector<Sample> train_part;
    train_part.reserve(data.size() - test_idx[f].size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (out.fold_of[i] != f) train_part.push_back(data[i]);
    }
    ModelConfig cfg = config;
    cfg.seed = derive_seed(seeds[s], static_cast<std::uint64_t>(f));
    const TrainResult tr = train(data.with_samples(std::move(train_part)), cfg);
    auto& slot = probs_of[job];
    for (std::size_t i : test_idx[f]) slot.push_back(predict_proba(tr.model, data[i].text));
  });

  out.records.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    out.records[i].sample_id = data[i].id;
    out.records[i].given = data[i].label;
    out.records[i].fold = out.fold_of[i];
  }
  for (int f = 0; f < k; ++f) {
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const auto& slot = probs_of[static_cast<std::size_t>(f) * seeds.size() + s];
      for (std::size_t j = 0; j < test_idx[f].size(); ++j) {
        PredictionRecord& r = out.records[test_idx[f][j]];
        const std::vector<double>& p = slot[j];
        const std::size_t best = argmax_first(p);
        r.seed_probs.push_back(p);
        r.seed_pred.push_back(out.labels[best]);
        r.seed_conf.push_back(p[best]);
      }
    }
  }
  for (PredictionRecord& r : out.records) {
    r.probs.assign(out.labels.size(), 0.0);
    for (const auto& p : r.seed_probs) {
      for (std::size_t c = 0; c < p.size(); ++c) r.probs[c] += p[c];
    }
    for (double& v : r.probs) v /= static_cast<double>(r.seed_probs.size());
  }
  return out;
}

// Shannon entropy in nats, 0 * ln 0 = 0. Rejects vectors more than 1e-6
// away from the probability simplex.
inline double entropy(const std::vector<double>& probs) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= -1e-6) || !std::isfinite(p)) {
      throw Error(ErrorCode::kValidation, "probability entry outside [0,1]");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    throw Error(ErrorCode::kValidation, "probabilities do not sum to 1");
  }
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

struct SuspicionScore {
  std::string sample_id;
  double entropy = 0.0;
  std::size_t rank = 0;  // 1 = most suspicious

  bool operator==(const SuspicionScore&) const = default;
};

// Descending entropy, ties by ascending id. Ranks are 1..N.
inline std::vector<SuspicionScore> rank_suspicious(const std::vector<PredictionRecord>& records) {
  std::vector<SuspicionScore> scores;
  scores.reserve(records.size());
  for (const PredictionRecord& r : records) scores.push_back({r.sample_id, entropy(r.probs), 0});
  std::sort(scores.begin(), scores.end(), [](const SuspicionScore& a, const SuspicionScore& b) {
    if (a.entropy != b.entropy) return a.entropy > b.entropy;
    return a.sample_id < b.sample_id;
  });
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i].rank = i + 1;
  return scores;
}

// Drops the n best-ranked (highest entropy) samples.
inline Dataset delete_top(const Dataset& data, const std::vector<SuspicionScore>& scores,
                          std::size_t n) {
  if (n > data.size()) throw Error(ErrorCode::kRange, "cannot delete more samples than exist");
  if (n > scores.size()) throw Error(ErrorCode::kRange, "fewer scores than samples to delete");
  std::unordered_set<std::string> drop;
  for (std::size_t i = 0; i < n; ++i) {
    if (!data.find(scores[i].sample_id)) {
      throw Error(ErrorCode::kReference, "score for unknown sample '" + scores[i].sample_id + "'");
    }
    drop.insert(scores[i].sample_id);
  }
  std::vector<Sample> kept;
  kept.reserve(data.size() - n);
  for (const Sample& s : data.samples()) {
    if (!drop.count(s.id)) kept.push_back(s);
  }
  return data.with_samples(std::move(kept));
}

struct CorrectionResult {
  Dataset data;
  CorrectionLog log;
};

// Relabels a sample to l iff every seed's out-of-fold argmax is l, l differs
// from the current label, and every seed's probability for l is >= min_conf.
inline CorrectionResult ensemble_correct_from(const Dataset& data,
                                              const std::vector<PredictionRecord>& records,
                                              double min_conf) {
  if (!(min_conf > 0.0 && min_conf <= 1.0)) {
    throw Error(ErrorCode::kRange, "min_conf must lie in (0,1]");
  }
  CorrectionResult out;
  std::vector<Sample> samples = data.samples();
  for (const PredictionRecord& r : records) {
    if (r.seed_pred.empty()) continue;
    const auto idx = data.find(r.sample_id);
    if (!idx) throw Error(ErrorCode::kReference, "record for unknown sample '" + r.sample_id + "'");
    const LabelId candidate = r.seed_pred.front();
    bool unanimous = true;
    double conf = 1.0;
    for (std::size_t s = 0; s < r.seed_pred.size(); ++s) {
      unanimous = unanimous && r.seed_pred[s] == candidate;
      conf = std::min(conf, r.seed_conf[s]);
    }
    Sample& sample = samples[*idx];
    if (!unanimous || candidate == sample.label || conf < min_conf) continue;
    out.log.push_back({sample.id, sample.label, candidate, Mechanism::kEnsemble, conf});
    sample.label = candidate;
    sample.origin = Origin::kCorrected;
  }
  out.data = data.with_samples(std::move(samples));
  return out;
}

inline CorrectionResult ensemble_correct(const Dataset& data, int k, const ModelConfig& config,
                                         const std::vector<std::uint64_t>& seeds,
                                         double min_conf = 0.9) {
  if (seeds.size() < 2) throw Error(ErrorCode::kRange, "ensemble correction needs >= 2 seeds");
  const CrossValResult cv = crossval_probs(data, k, config, seeds);
  return ensemble_correct_from(data, cv.records, min_conf);
}

inline void write_scores(const std::vector<SuspicionScore>& scores, std::ostream& out) {
  for (const SuspicionScore& s : scores) {
    Json j;
    j["id"] = s.sample_id;
    j["entropy"] = s.entropy;
    j["rank"] = s.rank;
    out << j.dump() << '\n';
  }
}

inline std::vector<SuspicionScore> read_scores(std::istream& in, const std::string& source) {
  std::vector<SuspicionScore> scores;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    try {
      Json j = Json::parse(line);
      scores.push_back({j.at("id").get<std::string>(), j.at("entropy").get<double>(),
                        j.at("rank").get<std::size_t>()});
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParse, detail::where(source, lineno) + ": " + e.what());
    }
  }
  std::sort(scores.begin(), scores.end(),
            [](const SuspicionScore& a, const SuspicionScore& b) { return a.rank < b.rank; });
  return scores;
}

}  // namespace curate
