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

// Data model and line-format I/O for labeled text corpora.
//
// A dataset file holds one JSON object per line:
//   {"id":"s1","text":"...","label":3}
//   {"id":"s1#aug0","text":"...","label":3,"origin":"augmented","source_id":"s1"}
// `origin` is omitted for original samples. The CIC public layout
// ({"id":0,"label":"55","label_des":"...","sentence":"..."}) is read with
// DatasetFormat::kCic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "curate/error.hpp"
#include "curate/rng.hpp"
#include "json.hpp"

namespace curate {

using Json = nlohmann::ordered_json;

enum class LabelId : std::int32_t {};

constexpr std::int32_t to_int(LabelId l) { return static_cast<std::int32_t>(l); }
constexpr LabelId label_id(std::int64_t v) { return static_cast<LabelId>(v); }

enum class Origin { kOriginal, kInjectedNoise, kAugmented, kDefinition, kCorrected };

inline std::string_view origin_name(Origin o) {
  switch (o) {
    case Origin::kOriginal: return "original";
    case Origin::kInjectedNoise: return "injected-noise";
    case Origin::kAugmented: return "augmented";
    case Origin::kDefinition: return "definition";
    case Origin::kCorrected: return "corrected";
  }
  return "original";
}

inline std::optional<Origin> parse_origin(std::string_view s) {
  for (Origin o : {Origin::kOriginal, Origin::kInjectedNoise, Origin::kAugmented,
                   Origin::kDefinition, Origin::kCorrected}) {
    if (origin_name(o) == s) return o;
  }
  return std::nullopt;
}

enum class SplitTag { kTrain, kDev, kTestPublic, kMerged };

inline std::string_view split_name(SplitTag s) {
  switch (s) {
    case SplitTag::kTrain: return "train";
    case SplitTag::kDev: return "dev";
    case SplitTag::kTestPublic: return "test-public";
    case SplitTag::kMerged: return "merged";
  }
  return "train";
}

struct Sample {
  std::string id;
  std::string text;
  LabelId label{};
  Origin origin = Origin::kOriginal;
  std::optional<std::string> source_id;

  bool operator==(const Sample&) const = default;
};

struct LabelDefinition {
  LabelId label{};
  std::string name;
  std::string definition;

  bool operator==(const LabelDefinition&) const = default;
};

// An ordered, validated collection of samples over a declared label set.
// Treated as an immutable value: every transform returns a new Dataset.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::vector<Sample> samples, std::vector<LabelId> labels,
          SplitTag split = SplitTag::kTrain)
      : samples_(std::move(samples)), labels_(std::move(labels)), split_(split) {
    std::sort(labels_.begin(), labels_.end());
    labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
    index_.reserve(samples_.size());
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const Sample& s = samples_[i];
      if (s.text.empty()) {
        throw Error(ErrorCode::kSchema, "sample '" + s.id + "' has empty text");
      }
      if (!std::binary_search(labels_.begin(), labels_.end(), s.label)) {
        throw Error(ErrorCode::kSchema, "sample '" + s.id + "' has label " +
                                            std::to_string(to_int(s.label)) +
                                            " outside the label set");
      }
      if (s.origin == Origin::kAugmented && !s.source_id) {
        throw Error(ErrorCode::kSchema,
                    "augmented sample '" + s.id + "' has no source_id");
      }
      if (!index_.emplace(s.id, i).second) {
        throw Error(ErrorCode::kDuplicateId, "duplicate id '" + s.id + "'");
      }
    }
  }

  // Label set is the union of the observed labels and `extra_labels`.
  static Dataset from_samples(std::vector<Sample> samples, SplitTag split,
                              const std::vector<LabelId>& extra_labels = {}) {
    std::vector<LabelId> labels = extra_labels;
    for (const Sample& s : samples) labels.push_back(s.label);
    return Dataset(std::move(samples), std::move(labels), split);
  }

  const std::vector<Sample>& samples() const { return samples_; }
  const std::vector<LabelId>& labels() const { return labels_; }
  SplitTag split() const { return split_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

  std::optional<std::size_t> find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  bool has_label(LabelId l) const {
    return std::binary_search(labels_.begin(), labels_.end(), l);
  }

  // Position of `l` in labels(); probability vectors use this order.
  std::size_t label_position(LabelId l) const {
    auto it = std::lower_bound(labels_.begin(), labels_.end(), l);
    if (it == labels_.end() || *it != l) {
      throw Error(ErrorCode::kSchema,
                  "label " + std::to_string(to_int(l)) + " not in label set");
    }
    return static_cast<std::size_t>(it - labels_.begin());
  }

  Dataset with_split(SplitTag split) const {
    Dataset d = *this;
    d.split_ = split;
    return d;
  }

  Dataset with_samples(std::vector<Sample> samples) const {
    return Dataset(std::move(samples), labels_, split_);
  }

  std::map<LabelId, std::size_t> label_histogram() const {
    std::map<LabelId, std::size_t> h;
    for (LabelId l : labels_) h[l] = 0;
    for (const Sample& s : samples_) ++h[s.label];
    return h;
  }

  // Indices of samples ordered by id; seeded operations start from this.
  std::vector<std::size_t> id_order() const {
    std::vector<std::size_t> idx(samples_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return samples_[a].id < samples_[b].id;
    });
    return idx;
  }

 private:
  std::vector<Sample> samples_;
  std::vector<LabelId> labels_;
  SplitTag split_ = SplitTag::kTrain;
  std::unordered_map<std::string, std::size_t> index_;
};

inline bool operator==(const Dataset& a, const Dataset& b) {
  return a.samples() == b.samples() && a.labels() == b.labels() && a.split() == b.split();
}

inline bool same_samples(const Dataset& a, const Dataset& b) {
  return a.samples() == b.samples() && a.labels() == b.labels();
}

// ---------------------------------------------------------------------------
// Line format

enum class DatasetFormat { kNative, kCic };

struct LoadOptions {
  DatasetFormat format = DatasetFormat::kNative;
  std::vector<LabelId> extra_labels;
};

namespace detail {

inline std::string where(const std::string& source, std::size_t line) {
  return source + ":" + std::to_string(line);
}

inline LabelId parse_label_field(const Json& v, const std::string& at) {
  if (v.is_number_integer()) return label_id(v.get<std::int64_t>());
  if (v.is_string()) {
    const std::string& s = v.get_ref<const std::string&>();
    std::size_t used = 0;
    long long parsed = 0;
    try {
      parsed = std::stoll(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == s.size() && !s.empty()) return label_id(parsed);
  }
  throw Error(ErrorCode::kParse, at + ": label must be an integer");
}

inline bool is_blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

}  // namespace detail

inline Json sample_to_json(const Sample& s) {
  Json j;
  j["id"] = s.id;
  j["text"] = s.text;
  j["label"] = to_int(s.label);
  if (s.origin != Origin::kOriginal) j["origin"] = origin_name(s.origin);
  if (s.source_id) j["source_id"] = *s.source_id;
  return j;
}

inline Dataset read_dataset(std::istream& in, const std::string& source, SplitTag split,
                            const LoadOptions& options = {}) {
  std::vector<Sample> samples;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    const std::string at = detail::where(source, lineno);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::kParse, at + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::kParse, at + ": expected an object");
    Sample s;
    const bool cic = options.format == DatasetFormat::kCic;
    const char* text_key = cic ? "sentence" : "text";
    if (!j.contains(text_key) || !j[text_key].is_string()) {
      throw Error(ErrorCode::kParse, at + ": missing string field '" + text_key + "'");
    }
    s.text = j[text_key].get<std::string>();
    if (s.text.empty()) throw Error(ErrorCode::kParse, at + ": empty text");
    if (!j.contains("label")) throw Error(ErrorCode::kParse, at + ": missing 'label'");
    s.label = detail::parse_label_field(j["label"], at);
    if (j.contains("id")) {
      const Json& id = j["id"];
      if (id.is_string()) {
        s.id = id.get<std::string>();
      } else if (id.is_number_integer()) {
        s.id = std::to_string(id.get<std::int64_t>());
      } else {
        throw Error(ErrorCode::kParse, at + ": id must be a string or integer");
      }
    } else if (cic) {
      s.id = std::to_string(lineno - 1);
    } else {
      throw Error(ErrorCode::kParse, at + ": missing 'id'");
    }
    if (s.id.empty()) throw Error(ErrorCode::kParse, at + ": empty id");
    if (!cic && j.contains("origin")) {
      if (!j["origin"].is_string()) throw Error(ErrorCode::kParse, at + ": bad origin");
      auto o = parse_origin(j["origin"].get<std::string>());
      if (!o) throw Error(ErrorCode::kParse, at + ": unknown origin");
      s.origin = *o;
    }
    if (!cic && j.contains("source_id")) {
      if (!j["source_id"].is_string()) throw Error(ErrorCode::kParse, at + ": bad source_id");
      s.source_id = j["source_id"].get<std::string>();
    }
    if (s.origin == Origin::kAugmented && !s.source_id) {
      throw Error(ErrorCode::kParse, at + ": augmented sample without source_id");
    }
    if (auto [it, fresh] = seen.emplace(s.id, lineno); !fresh) {
      throw Error(ErrorCode::kDuplicateId, at + ": duplicate id '" + s.id +
                                               "' (first seen on line " +
                                               std::to_string(it->second) + ")");
    }
    samples.push_back(std::move(s));
  }
  return Dataset::from_samples(std::move(samples), split, options.extra_labels);
}

inline Dataset load_dataset(const std::string& path, SplitTag split,
                            const LoadOptions& options = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return read_dataset(in, path, split, options);
}

inline void write_dataset(const Dataset& data, std::ostream& out) {
  for (const Sample& s : data.samples()) out << sample_to_json(s).dump() << '\n';
}

inline void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  write_dataset(data, out);
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

inline std::string dataset_to_string(const Dataset& data) {
  std::ostringstream os;
  write_dataset(data, os);
  return os.str();
}

// ---------------------------------------------------------------------------
// Label definitions

inline std::vector<LabelDefinition> read_definitions(std::istream& in,
                                                     const std::string& source) {
  std::vector<LabelDefinition> defs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    const std::string at = detail::where(source, lineno);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::kParse, at + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("label") || !j.contains("definition") ||
        !j["definition"].is_string()) {
      throw Error(ErrorCode::kParse, at + ": expected label/name/definition fields");
    }
    LabelDefinition d;
    d.label = detail::parse_label_field(j["label"], at);
    if (j.contains("name") && j["name"].is_string()) d.name = j["name"].get<std::string>();
    d.definition = j["definition"].get<std::string>();
    if (d.definition.empty()) throw Error(ErrorCode::kParse, at + ": empty definition");
    for (const LabelDefinition& prev : defs) {
      if (prev.label == d.label) {
        throw Error(ErrorCode::kDuplicateId,
                    at + ": second definition for label " + std::to_string(to_int(d.label)));
      }
    }
    defs.push_back(std::move(d));
  }
  return defs;
}

inline std::vector<LabelDefinition> load_definitions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return read_definitions(in, path);
}

inline void save_definitions(const std::vector<LabelDefinition>& defs,
                             const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  for (const LabelDefinition& d : defs) {
    Json j;
    j["label"] = to_int(d.label);
    j["name"] = d.name;
    j["definition"] = d.definition;
    out << j.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

inline std::vector<LabelId> definition_labels(const std::vector<LabelDefinition>& defs) {
  std::vector<LabelId> out;
  for (const LabelDefinition& d : defs) out.push_back(d.label);
  return out;
}

// ---------------------------------------------------------------------------
// Merge and split

inline Dataset merge(const Dataset& train, const Dataset& dev) {
  if (train.labels() != dev.labels()) {
    throw Error(ErrorCode::kSchema, "cannot merge datasets with different label sets");
  }
  std::vector<Sample> out;
  out.reserve(train.size() + dev.size());
  for (const Sample& s : train.samples()) {
    Sample c = s;
    if (dev.find(s.id)) c.id = "train/" + s.id;
    out.push_back(std::move(c));
  }
  for (const Sample& s : dev.samples()) {
    Sample c = s;
    if (train.find(s.id)) c.id = "dev/" + s.id;
    out.push_back(std::move(c));
  }
  return Dataset(std::move(out), train.labels(), SplitTag::kMerged);
}

struct SplitSpec {
  double dev_fraction = 1.0 / 6.0;
  std::uint64_t seed = 0;
};

inline std::size_t dev_count_for(std::size_t n_c, double dev_fraction) {
  if (n_c <= 1) return 0;
  auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n_c) * dev_fraction));
  return std::clamp<std::size_t>(k, 1, n_c);
}

// Per label, members are ordered by a seeded hash of their id and the first
// dev_count_for(n_c) go to dev. Membership depends only on (ids, seed), so
// adding or removing unrelated samples perturbs the partition minimally.
inline std::pair<Dataset, Dataset> stratified_split(const Dataset& data, const SplitSpec& spec) {
  if (data.empty()) throw Error(ErrorCode::kRange, "cannot split an empty dataset");
  if (!(spec.dev_fraction > 0.0 && spec.dev_fraction < 1.0)) {
    throw Error(ErrorCode::kRange, "dev_fraction must lie in (0,1)");
  }
  std::map<LabelId, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < data.size(); ++i) by_label[data[i].label].push_back(i);

  std::vector<char> to_dev(data.size(), 0);
  for (auto& [label, members] : by_label) {
    std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
    keyed.reserve(members.size());
    for (std::size_t i : members) keyed.emplace_back(keyed_rank(spec.seed, data[i].id), i);
    std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return data[a.second].id < data[b.second].id;
    });
    const std::size_t k = dev_count_for(members.size(), spec.dev_fraction);
    for (std::size_t j = 0; j < k; ++j) to_dev[keyed[j].second] = 1;
  }
  std::vector<Sample> train, dev;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (to_dev[i] ? dev : train).push_back(data[i]);
  }
  return {Dataset(std::move(train), data.labels(), SplitTag::kTrain),
          Dataset(std::move(dev), data.labels(), SplitTag::kDev)};
}

// ---------------------------------------------------------------------------
// Correction log shared by the detectors, the forgetting corrector and the
// annotation merge-back.

enum class Mechanism { kEnsemble, kForgetting, kAnnotation };

inline std::string_view mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::kEnsemble: return "ensemble";
    case Mechanism::kForgetting: return "forgetting";
    case Mechanism::kAnnotation: return "annotation";
  }
  return "annotation";
}

struct CorrectionEntry {
  std::string sample_id;
  LabelId old_label{};
  LabelId new_label{};
  Mechanism mechanism = Mechanism::kAnnotation;
  double confidence = 1.0;

  bool operator==(const CorrectionEntry&) const = default;
};

using CorrectionLog = std::vector<CorrectionEntry>;

inline Json correction_entry_to_json(const CorrectionEntry& e) {
  Json j;
  j["id"] = e.sample_id;
  j["old_label"] = to_int(e.old_label);
  j["new_label"] = to_int(e.new_label);
  j["mechanism"] = mechanism_name(e.mechanism);
  j["confidence"] = e.confidence;
  return j;
}

inline void write_correction_log(const CorrectionLog& log, std::ostream& out) {
  for (const CorrectionEntry& e : log) out << correction_entry_to_json(e).dump() << '\n';
}

}  // namespace curate
