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

// Macro-F1 and friends. Averages run over the declared label set; a class
// with neither gold nor predicted samples scores F1 = 0 and still counts.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "curate/corpus.hpp"
#include "curate/error.hpp"

namespace curate {

using ConfusionMatrix = std::vector<std::vector<std::int64_t>>;

namespace detail {

inline std::size_t position_in(const std::vector<LabelId>& labels, LabelId l) {
  auto it = std::lower_bound(labels.begin(), labels.end(), l);
  if (it == labels.end() || *it != l) {
    throw Error(ErrorCode::kSchema, "label " + std::to_string(to_int(l)) + " outside label set");
  }
  return static_cast<std::size_t>(it - labels.begin());
}

inline std::vector<LabelId> sorted_labels(std::vector<LabelId> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  return labels;
}

}  // namespace detail

// Rows are gold, columns predicted, both in ascending label order.
inline ConfusionMatrix confusion_matrix(const std::vector<LabelId>& golds,
                                        const std::vector<LabelId>& preds,
                                        const std::vector<LabelId>& label_set) {
  if (golds.size() != preds.size()) {
    throw Error(ErrorCode::kShape, "golds and preds differ in length");
  }
  const std::vector<LabelId> labels = detail::sorted_labels(label_set);
  ConfusionMatrix m(labels.size(), std::vector<std::int64_t>(labels.size(), 0));
  for (std::size_t i = 0; i < golds.size(); ++i) {
    ++m[detail::position_in(labels, golds[i])][detail::position_in(labels, preds[i])];
  }
  return m;
}

inline std::vector<double> per_class_f1(const ConfusionMatrix& m) {
  const std::size_t c = m.size();
  std::vector<double> f1(c, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    std::int64_t tp = m[k][k], gold = 0, pred = 0;
    for (std::size_t j = 0; j < c; ++j) {
      gold += m[k][j];
      pred += m[j][k];
    }
    // F1 = 2TP / (|gold| + |pred|); zero when the class is absent from both.
    if (gold + pred > 0) f1[k] = 2.0 * static_cast<double>(tp) / static_cast<double>(gold + pred);
  }
  return f1;
}

inline double accuracy(const ConfusionMatrix& m) {
  std::int64_t total = 0, hit = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) total += m[i][j];
    hit += m[i][i];
  }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double macro_f1(const std::vector<LabelId>& golds, const std::vector<LabelId>& preds,
                       const std::vector<LabelId>& label_set) {
  return mean(per_class_f1(confusion_matrix(golds, preds, label_set)));
}

struct ExperimentReport {
  double macro_f1 = 0.0;
  std::map<LabelId, double> per_class_f1;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::string config_fingerprint;
  std::vector<Json> transform_chain;
  std::uint64_t seed = 0;
  // Free-form extras (dataset sizes, dev score, revision, notes). Serialized
  // after the fixed fields in insertion order.
  Json extra = Json::object();

  Json to_json() const {
    Json j;
    j["macro_f1"] = macro_f1;
    Json pc = Json::object();
    for (const auto& [l, f] : per_class_f1) pc[std::to_string(to_int(l))] = f;
    j["per_class_f1"] = pc;
    j["accuracy"] = accuracy;
    j["confusion"] = confusion;
    j["config_fingerprint"] = config_fingerprint;
    j["transform_chain"] = transform_chain;
    j["seed"] = seed;
    for (const auto& [k, v] : extra.items()) j[k] = v;
    return j;
  }

  static ExperimentReport from_json(const Json& j) {
    ExperimentReport r;
    try {
      r.macro_f1 = j.at("macro_f1").get<double>();
      for (const auto& [k, v] : j.at("per_class_f1").items()) {
        r.per_class_f1[label_id(std::stoll(k))] = v.get<double>();
      }
      r.accuracy = j.at("accuracy").get<double>();
      r.confusion = j.at("confusion").get<ConfusionMatrix>();
      r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
      r.transform_chain = j.at("transform_chain").get<std::vector<Json>>();
      r.seed = j.at("seed").get<std::uint64_t>();
      for (const auto& [k, v] : j.items()) {
        if (k == "macro_f1" || k == "per_class_f1" || k == "accuracy" || k == "confusion" ||
            k == "config_fingerprint" || k == "transform_chain" || k == "seed") {
          continue;
        }
        r.extra[k] = v;
      }
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kParse, std::string("report: ") + e.what());
    }
    return r;
  }
};

// Report fields that depend only on (golds, preds, labels).
inline ExperimentReport evaluate_predictions(const std::vector<LabelId>& golds,
                                             const std::vector<LabelId>& preds,
                                             const std::vector<LabelId>& label_set) {
  const std::vector<LabelId> labels = detail::sorted_labels(label_set);
  ExperimentReport r;
  r.confusion = confusion_matrix(golds, preds, labels);
  const std::vector<double> f1 = per_class_f1(r.confusion);
  for (std::size_t k = 0; k < labels.size(); ++k) r.per_class_f1[labels[k]] = f1[k];
  r.macro_f1 = mean(f1);
  r.accuracy = accuracy(r.confusion);
  return r;
}

inline std::vector<LabelId> gold_labels(const Dataset& data) {
  std::vector<LabelId> g;
  g.reserve(data.size());
  for (const Sample& s : data.samples()) g.push_back(s.label);
  return g;
}

}  // namespace curate
