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

// EDA-style text augmentation (synonym replacement, random insertion, random
// deletion, optional random swap) and label-definition augmentation.
//
// Tokenization: text containing whitespace is split on whitespace and
// re-joined with single spaces. Unsegmented text (e.g. Chinese) is cut into
// maximal lexicon matches, falling back to single code points, and re-joined
// without separators.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "curate/corpus.hpp"
#include "curate/error.hpp"
#include "curate/rng.hpp"
#include "curate/utf8.hpp"

namespace curate {

// token -> synonyms. File format: one entry per line, the token followed by
// its synonyms, whitespace separated. Lines starting with '#' are comments.
using Lexicon = std::map<std::string, std::vector<std::string>>;

inline Lexicon read_lexicon(std::istream& in) {
  Lexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string head, syn;
    if (!(fields >> head)) continue;
    auto& syns = lex[head];
    while (fields >> syn) {
      if (syn != head && std::find(syns.begin(), syns.end(), syn) == syns.end()) {
        syns.push_back(syn);
      }
    }
  }
  return lex;
}

inline Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return read_lexicon(in);
}

inline void save_lexicon(const Lexicon& lex, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  for (const auto& [token, syns] : lex) {
    out << token;
    for (const std::string& s : syns) out << ' ' << s;
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

struct Tokens {
  std::vector<std::string> items;
  bool spaced = true;
};

inline Tokens tokenize(std::string_view text, const Lexicon& lexicon) {
  const std::vector<char32_t> cps = utf8::decode(text);
  Tokens t;
  t.spaced = std::any_of(cps.begin(), cps.end(), utf8::is_space);
  if (t.spaced) {
    std::string cur;
    for (char32_t cp : cps) {
      if (utf8::is_space(cp)) {
        if (!cur.empty()) t.items.push_back(std::move(cur));
        cur.clear();
      } else {
        utf8::append(cur, cp);
      }
    }
    if (!cur.empty()) t.items.push_back(std::move(cur));
    return t;
  }
  std::size_t longest = 1;
  for (const auto& [key, syns] : lexicon) {
    longest = std::max(longest, utf8::decode(key).size());
  }
  std::size_t i = 0;
  while (i < cps.size()) {
    std::size_t take = 1;
    for (std::size_t len = std::min(longest, cps.size() - i); len > 1; --len) {
      std::string probe = utf8::encode({cps.begin() + i, cps.begin() + i + len});
      if (lexicon.count(probe)) {
        take = len;
        break;
      }
    }
    t.items.push_back(utf8::encode({cps.begin() + i, cps.begin() + i + take}));
    i += take;
  }
  return t;
}

inline std::string detokenize(const Tokens& t) {
  std::string out;
  for (std::size_t i = 0; i < t.items.size(); ++i) {
    if (t.spaced && i) out.push_back(' ');
    out += t.items[i];
  }
  return out;
}

namespace detail {

inline const std::vector<std::string>* synonyms_of(const Lexicon& lex, const std::string& tok) {
  auto it = lex.find(tok);
  if (it == lex.end() || it->second.empty()) return nullptr;
  return &it->second;
}

inline std::vector<std::size_t> candidate_positions(const Tokens& t, const Lexicon& lex) {
  std::vector<std::size_t> pos;
  for (std::size_t i = 0; i < t.items.size(); ++i) {
    if (synonyms_of(lex, t.items[i])) pos.push_back(i);
  }
  return pos;
}

}  // namespace detail

// Replaces up to n distinct tokens that have lexicon entries.
inline std::string synonym_replace(std::string_view text, const Lexicon& lexicon, int n, Rng& rng) {
  Tokens t = tokenize(text, lexicon);
  const std::vector<std::size_t> cand = detail::candidate_positions(t, lexicon);
  if (n <= 0 || cand.empty()) return std::string(text);
  for (std::size_t k : rng.sample_indices(cand.size(), static_cast<std::size_t>(n))) {
    std::string& tok = t.items[cand[k]];
    const auto& syns = *detail::synonyms_of(lexicon, tok);
    tok = syns[rng.below(syns.size())];
  }
  return detokenize(t);
}

// Inserts a synonym of min(n, #candidates) distinct in-text tokens, each at a
// random position. Existing tokens keep their relative order.
inline std::string random_insert(std::string_view text, const Lexicon& lexicon, int n, Rng& rng) {
  Tokens t = tokenize(text, lexicon);
  const std::vector<std::size_t> cand = detail::candidate_positions(t, lexicon);
  if (n <= 0 || cand.empty()) return std::string(text);
  std::vector<std::string> inserts;
  for (std::size_t k : rng.sample_indices(cand.size(), static_cast<std::size_t>(n))) {
    const auto& syns = *detail::synonyms_of(lexicon, t.items[cand[k]]);
    inserts.push_back(syns[rng.below(syns.size())]);
  }
  for (std::string& word : inserts) {
    const std::size_t at = rng.below(t.items.size() + 1);
    t.items.insert(t.items.begin() + static_cast<std::ptrdiff_t>(at), std::move(word));
  }
  return detokenize(t);
}

// Drops each token with probability p but never returns an empty text: when
// every token would go, one seeded-random token survives.
inline std::string random_delete(std::string_view text, double p, Rng& rng,
                                 const Lexicon& lexicon = {}) {
  Tokens t = tokenize(text, lexicon);
  if (t.items.empty() || p <= 0.0) return std::string(text);
  Tokens kept{{}, t.spaced};
  for (const std::string& tok : t.items) {
    if (!rng.bernoulli(p)) kept.items.push_back(tok);
  }
  if (kept.items.empty()) kept.items.push_back(t.items[rng.below(t.items.size())]);
  return detokenize(kept);
}

// Swaps n random token pairs.
inline std::string random_swap(std::string_view text, int n, Rng& rng, const Lexicon& lexicon = {}) {
  Tokens t = tokenize(text, lexicon);
  if (t.items.size() < 2 || n <= 0) return std::string(text);
  for (int k = 0; k < n; ++k) {
    const std::size_t a = rng.below(t.items.size());
    const std::size_t b = rng.below(t.items.size());
    std::swap(t.items[a], t.items[b]);
  }
  return detokenize(t);
}

struct AugmentParams {
  int n_aug = 3;
  double p_syn = 0.1;
  int n_insert = 1;
  double p_delete = 0.1;
  bool enable_swap = false;  // off: only the three operations listed for EDA here
  int n_swap = 1;
  std::shared_ptr<const Lexicon> lexicon;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_aug < 0) throw Error(ErrorCode::kRange, "n_aug must be >= 0");
    if (!(p_syn >= 0.0 && p_syn <= 1.0)) throw Error(ErrorCode::kRange, "p_syn must lie in [0,1]");
    if (!(p_delete >= 0.0 && p_delete <= 1.0)) {
      throw Error(ErrorCode::kRange, "p_delete must lie in [0,1]");
    }
    if (n_insert < 0 || n_swap < 0) throw Error(ErrorCode::kRange, "counts must be >= 0");
  }

  const Lexicon& lex() const {
    static const Lexicon empty;
    return lexicon ? *lexicon : empty;
  }
};

// One uniformly chosen EDA operation applied to `text`.
inline std::string eda_once(std::string_view text, const AugmentParams& params, Rng& rng) {
  const int ops = params.enable_swap ? 4 : 3;
  const Lexicon& lex = params.lex();
  switch (rng.below(ops)) {
    case 0: {
      const std::size_t len = tokenize(text, lex).items.size();
      const int n = std::max(1, static_cast<int>(std::lround(params.p_syn * static_cast<double>(len))));
      return synonym_replace(text, lex, n, rng);
    }
    case 1: return random_insert(text, lex, params.n_insert, rng);
    case 2: return random_delete(text, params.p_delete, rng, lex);
    default: return random_swap(text, params.n_swap, rng, lex);
  }
}

// n_aug augmented copies of one sample. The generator is seeded from
// (params.seed, sample id), so results do not depend on processing order.
inline std::vector<Sample> eda_augment(const Sample& sample, const AugmentParams& params) {
  params.validate();
  std::vector<Sample> out;
  Rng rng(derive_seed(params.seed, sample.id));
  for (int k = 0; k < params.n_aug; ++k) {
    Sample s;
    s.id = sample.id + "#aug" + std::to_string(k);
    s.text = eda_once(sample.text, params, rng);
    s.label = sample.label;
    s.origin = Origin::kAugmented;
    s.source_id = sample.id;
    out.push_back(std::move(s));
  }
  return out;
}

// Original samples followed by their augmentations (in sample order).
inline Dataset eda_augment_dataset(const Dataset& data, const AugmentParams& params) {
  std::vector<Sample> out = data.samples();
  for (const Sample& s : data.samples()) {
    for (Sample& a : eda_augment(s, params)) out.push_back(std::move(a));
  }
  return data.with_samples(std::move(out));
}

// For each label, adds the raw definition as a sample (n >= 1) plus n - 1
// EDA variants of it; all carry origin=definition.
inline Dataset definition_augment(const Dataset& data, const std::vector<LabelDefinition>& defs,
                                  int n, const AugmentParams& params = {}) {
  if (n < 0) throw Error(ErrorCode::kRange, "definition augmentation count must be >= 0");
  if (n == 0) return data;
  std::map<LabelId, const LabelDefinition*> by_label;
  for (const LabelDefinition& d : defs) by_label[d.label] = &d;
  const auto hist = data.label_histogram();
  std::vector<Sample> out = data.samples();
  for (LabelId l : data.labels()) {
    auto it = by_label.find(l);
    if (it == by_label.end()) {
      if (hist.at(l) > 0) {
        throw Error(ErrorCode::kCoverage,
                    "no definition for label " + std::to_string(to_int(l)));
      }
      continue;
    }
    const std::string base = "def/" + std::to_string(to_int(l));
    Sample raw;
    raw.id = base + "/0";
    raw.text = it->second->definition;
    raw.label = l;
    raw.origin = Origin::kDefinition;
    out.push_back(raw);
    Rng rng(derive_seed(params.seed, base));
    for (int k = 1; k < n; ++k) {
      Sample v;
      v.id = base + "/" + std::to_string(k);
      v.text = eda_once(raw.text, params, rng);
      v.label = l;
      v.origin = Origin::kDefinition;
      v.source_id = raw.id;
      out.push_back(std::move(v));
    }
  }
  return data.with_samples(std::move(out));
}

}  // namespace curate
