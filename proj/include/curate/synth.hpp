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

// Synthetic intent-classification corpora with controllable class overlap.
//
// Every label owns a small keyword vocabulary; labels are grouped into
// clusters that share a topic vocabulary, and all labels share filler words.
// Each token of a sample is a label keyword with probability `disjointness`,
// otherwise a cluster word or a filler word (even odds). disjointness = 1
// makes classes separable by construction; lower values create confusable
// neighbours inside a cluster, which is where hard-flip noise lands.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "curate/augment.hpp"
#include "curate/corpus.hpp"
#include "curate/error.hpp"
#include "curate/rng.hpp"

namespace curate {

struct SynthSpec {
  int num_labels = 20;
  int samples_per_label = 150;
  int dev_per_label = 30;
  int test_per_label = 50;
  double disjointness = 0.5;
  int group_size = 4;
  int keywords_per_label = 12;
  int min_tokens = 6;
  int max_tokens = 10;
  int filler_words = 60;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_labels < 2) throw Error(ErrorCode::kConfig, "num_labels must be >= 2");
    if (samples_per_label < 1) throw Error(ErrorCode::kConfig, "samples_per_label must be >= 1");
    if (dev_per_label < 0 || test_per_label < 0) {
      throw Error(ErrorCode::kConfig, "per-label counts must be >= 0");
    }
    if (!(disjointness >= 0.0 && disjointness <= 1.0)) {
      throw Error(ErrorCode::kConfig, "disjointness must lie in [0,1]");
    }
    // Definitions quote four keywords per label.
    if (group_size < 1 || keywords_per_label < 4) {
      throw Error(ErrorCode::kConfig, "group_size >= 1 and keywords_per_label >= 4 required");
    }
    if (min_tokens < 1 || max_tokens < min_tokens) {
      throw Error(ErrorCode::kConfig, "need 1 <= min_tokens <= max_tokens");
    }
  }
};

struct SynthCorpus {
  Dataset train;
  Dataset dev;
  Dataset test;
  std::vector<LabelDefinition> definitions;
  Lexicon lexicon;
  // id -> label for every generated sample; the oracle once noise is injected.
  std::vector<std::pair<std::string, LabelId>> clean_labels;
};

namespace detail {

class WordFactory {
 public:
  explicit WordFactory(Rng& rng) : rng_(rng) {}

  std::string next() {
    static constexpr std::string_view kOnsets = "bdfgklmnprstvz";
    static constexpr std::string_view kVowels = "aeiou";
    for (;;) {
      const std::size_t syllables = 2 + rng_.below(2);
      std::string w;
      for (std::size_t s = 0; s < syllables; ++s) {
        w.push_back(kOnsets[rng_.below(kOnsets.size())]);
        w.push_back(kVowels[rng_.below(kVowels.size())]);
      }
      if (used_.insert(w).second) return w;
    }
  }

  std::vector<std::string> batch(int n) {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(next());
    return out;
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

// Index in [0, n) with P(i) proportional to 1 / (i + 1).
inline std::size_t zipf_index(std::size_t n, Rng& rng) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += 1.0 / static_cast<double>(i + 1);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < n; ++i) {
    u -= 1.0 / static_cast<double>(i + 1);
    if (u < 0.0) return i;
  }
  return n - 1;
}

inline std::vector<std::string> ring_synonyms(const std::vector<std::string>& words, std::size_t i,
                                              std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t k = 1; k <= count && k < words.size(); ++k) {
    out.push_back(words[(i + k) % words.size()]);
  }
  return out;
}

}  // namespace detail

inline SynthCorpus synth_corpus(const SynthSpec& spec) {
  spec.validate();
  Rng vocab_rng(derive_seed(spec.seed, "vocabulary"));
  detail::WordFactory words(vocab_rng);
  const int groups = (spec.num_labels + spec.group_size - 1) / spec.group_size;
  std::vector<std::vector<std::string>> label_words, group_words;
  for (int l = 0; l < spec.num_labels; ++l) label_words.push_back(words.batch(spec.keywords_per_label));
  for (int g = 0; g < groups; ++g) group_words.push_back(words.batch(16));
  const std::vector<std::string> filler = words.batch(spec.filler_words);

  SynthCorpus corpus;
  for (int l = 0; l < spec.num_labels; ++l) {
    const auto& kw = label_words[l];
    for (std::size_t i = 0; i < kw.size(); ++i) corpus.lexicon[kw[i]] = detail::ring_synonyms(kw, i, 3);
  }
  for (const auto& gw : group_words) {
    for (std::size_t i = 0; i < gw.size(); ++i) corpus.lexicon[gw[i]] = detail::ring_synonyms(gw, i, 2);
  }
  for (std::size_t i = 0; i < filler.size(); ++i) {
    corpus.lexicon[filler[i]] = detail::ring_synonyms(filler, i, 2);
  }

  std::vector<LabelId> labels;
  for (int l = 0; l < spec.num_labels; ++l) {
    labels.push_back(label_id(l));
    const auto& kw = label_words[l];
    const auto& gw = group_words[l / spec.group_size];
    LabelDefinition d;
    d.label = label_id(l);
    d.name = "intent-" + std::to_string(l);
    d.definition = "asks about " + gw[0] + " " + kw[0] + " " + kw[1] + " " + kw[2] + " or " + kw[3];
    corpus.definitions.push_back(std::move(d));
  }

  auto draw_text = [&](int l, Rng& rng) {
    const auto& kw = label_words[l];
    const auto& gw = group_words[l / spec.group_size];
    const int len = spec.min_tokens +
                    static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.max_tokens - spec.min_tokens + 1)));
    std::string text;
    bool has_keyword = false;
    for (int t = 0; t < len; ++t) {
      const double u = rng.uniform();
      std::string w;
      if (u < spec.disjointness) {
        w = kw[detail::zipf_index(kw.size(), rng)];
        has_keyword = true;
      } else if (u < spec.disjointness + (1.0 - spec.disjointness) / 2.0) {
        w = gw[detail::zipf_index(gw.size(), rng)];
      } else {
        w = filler[rng.below(filler.size())];
      }
      if (!text.empty()) text.push_back(' ');
      text += w;
    }
    if (!has_keyword && spec.disjointness > 0.0) text += " " + kw[detail::zipf_index(kw.size(), rng)];
    return text;
  };

  // Texts are unique across all splits so the test set never leaks by text.
  std::set<std::string> seen_texts;
  auto make_split = [&](std::string_view prefix, int per_label, SplitTag tag) {
    Rng rng(derive_seed(spec.seed, prefix));
    std::vector<Sample> samples;
    int serial = 0;
    // Interleave labels so file order is not sorted by class.
    for (int i = 0; i < per_label; ++i) {
      for (int l = 0; l < spec.num_labels; ++l) {
        std::string text = draw_text(l, rng);
        for (int attempt = 0; !seen_texts.insert(text).second; ++attempt) {
          if (attempt == 1000) throw Error(ErrorCode::kConfig, "vocabulary too small for unique texts");
          text = draw_text(l, rng);
        }
        char id[32];
        std::snprintf(id, sizeof id, "%.*s%06d", static_cast<int>(prefix.size()), prefix.data(), serial++);
        samples.push_back({id, std::move(text), label_id(l), Origin::kOriginal, std::nullopt});
        corpus.clean_labels.emplace_back(id, label_id(l));
      }
    }
    return Dataset(std::move(samples), labels, tag);
  };
  corpus.train = make_split("tr", spec.samples_per_label, SplitTag::kTrain);
  corpus.dev = make_split("dv", spec.dev_per_label, SplitTag::kDev);
  corpus.test = make_split("te", spec.test_per_label, SplitTag::kTestPublic);
  return corpus;
}

// Ground truth: id -> clean label. File: one {"id":..,"label":..} per line.
using LabelMap = std::map<std::string, LabelId>;

inline void save_label_map(const std::vector<std::pair<std::string, LabelId>>& labels,
                           const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  for (const auto& [id, l] : labels) {
    Json j;
    j["id"] = id;
    j["label"] = to_int(l);
    out << j.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

inline LabelMap load_label_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  LabelMap map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::is_blank(line)) continue;
    const std::string at = detail::where(path, lineno);
    try {
      Json j = Json::parse(line);
      map[j.at("id").get<std::string>()] = detail::parse_label_field(j.at("label"), at);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kParse, at + ": " + e.what());
    }
  }
  return map;
}

inline LabelMap to_label_map(const std::vector<std::pair<std::string, LabelId>>& labels) {
  return LabelMap(labels.begin(), labels.end());
}

}  // namespace curate
