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

#include "curate/augment.hpp"

#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "test_support.hpp"

namespace curate {
namespace {

Lexicon small_lexicon() {
  std::istringstream in(
      "# comment\n"
      "fast quick rapid fast\n"
      "big large\n"
      "天气 气候\n"
      "明天 翌日\n"
      "lonely\n");
  return read_lexicon(in);
}

std::multiset<std::string> words(const std::string& text) {
  std::istringstream in(text);
  std::multiset<std::string> out;
  std::string w;
  while (in >> w) out.insert(w);
  return out;
}

TEST(LexiconTest, ParsesAndDropsSelfSynonyms) {
  const Lexicon lex = small_lexicon();
  EXPECT_EQ(lex.at("fast"), (std::vector<std::string>{"quick", "rapid"}));
  EXPECT_TRUE(lex.at("lonely").empty());
  EXPECT_EQ(lex.count("#"), 0u);
  testing::TempDir tmp;
  save_lexicon(lex, tmp.file("lex.txt"));
  EXPECT_EQ(load_lexicon(tmp.file("lex.txt")), lex);
}

TEST(TokenizeTest, WhitespaceAndGreedyCjk) {
  const Lexicon lex = small_lexicon();
  EXPECT_EQ(tokenize("  a big  cat ", lex).items, (std::vector<std::string>{"a", "big", "cat"}));
  const Tokens t = tokenize("查询明天的天气", lex);
  EXPECT_FALSE(t.spaced);
  EXPECT_EQ(t.items, (std::vector<std::string>{"查", "询", "明天", "的", "天气"}));
  EXPECT_EQ(detokenize(t), "查询明天的天气");
  EXPECT_EQ(detokenize(tokenize("a b c", lex)), "a b c");
}

TEST(OperationsTest, SynonymReplaceOnlyTouchesLexiconTokens) {
  const Lexicon lex = small_lexicon();
  Rng rng(1);
  const std::string out = synonym_replace("a fast big cat", lex, 2, rng);
  const auto w = words(out);
  EXPECT_EQ(w.size(), 4u);
  EXPECT_TRUE(w.count("a") && w.count("cat"));
  EXPECT_TRUE(w.count("quick") || w.count("rapid"));
  EXPECT_TRUE(w.count("large"));
  EXPECT_EQ(synonym_replace("no entries here", lex, 3, rng), "no entries here");
  EXPECT_EQ(synonym_replace("查询明天的天气", lex, 5, rng), "查询翌日的气候");
}

TEST(OperationsTest, SingleForcedCandidateInUnsegmentedText) {
  const Lexicon lex{{"快递", {"物流"}}};
  Rng rng(9);
  EXPECT_EQ(synonym_replace("发什么快递", lex, 1, rng), "发什么物流");
  EXPECT_EQ(synonym_replace("发什么快递", lex, 0, rng), "发什么快递");
  EXPECT_EQ(synonym_replace("发什么快递", Lexicon{}, 1, rng), "发什么快递");
}

TEST(OperationsTest, RandomInsertAddsSynonyms) {
  const Lexicon lex = small_lexicon();
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto w = words(random_insert("the fast cat", lex, 1, rng));
    EXPECT_EQ(w.size(), 4u);
    EXPECT_TRUE(w.count("quick") || w.count("rapid"));
  }
  EXPECT_EQ(random_insert("x y", lex, 2, rng), "x y");
}

TEST(OperationsTest, RandomDeleteNeverEmpties) {
  Rng rng(3);
  EXPECT_EQ(words(random_delete("a b c d", 1.0, rng)).size(), 1u);
  EXPECT_EQ(random_delete("a b c d", 0.0, rng), "a b c d");
  for (int t = 0; t < 100; ++t) {
    const auto w = words(random_delete("a b c d e f", 0.5, rng));
    EXPECT_GE(w.size(), 1u);
    EXPECT_LE(w.size(), 6u);
  }
}

TEST(OperationsTest, RandomSwapPreservesMultiset) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    EXPECT_EQ(words(random_swap("a b c d e", 2, rng)), words("a b c d e"));
  }
  EXPECT_EQ(random_swap("x", 3, rng), "x");
  // Unspaced text is a character sequence, so swaps permute characters.
  std::string chars = random_swap("abcd", 2, rng);
  std::sort(chars.begin(), chars.end());
  EXPECT_EQ(chars, "abcd");
}

TEST(EdaTest, IdsOriginAndDeterminism) {
  AugmentParams p;
  p.n_aug = 4;
  p.lexicon = std::make_shared<const Lexicon>(small_lexicon());
  p.seed = 7;
  const Sample s{"s1", "the fast big dog runs", label_id(3), Origin::kOriginal, std::nullopt};
  const auto a = eda_augment(s, p);
  ASSERT_EQ(a.size(), 4u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].id, "s1#aug" + std::to_string(k));
    EXPECT_EQ(a[k].label, s.label);
    EXPECT_EQ(a[k].origin, Origin::kAugmented);
    EXPECT_EQ(a[k].source_id, "s1");
    EXPECT_FALSE(a[k].text.empty());
  }
  EXPECT_EQ(eda_augment(s, p), a);

  const Dataset d = testing::make_dataset({{"x", "fast cat", 0}, {"y", "big dog", 1}});
  const Dataset aug = eda_augment_dataset(d, p);
  EXPECT_EQ(aug.size(), d.size() * 5);
  EXPECT_EQ(aug[0], d[0]);
  EXPECT_EQ(aug[1], d[1]);
  p.n_aug = -1;
  EXPECT_THROW(eda_augment(s, p), Error);
}

TEST(DefinitionAugmentTest, AddsRawDefinitionAndVariants) {
  const Dataset d = testing::make_dataset({{"x", "fast cat", 0}, {"y", "big dog", 1}});
  const std::vector<LabelDefinition> defs{{label_id(0), "zero", "a fast thing"},
                                          {label_id(1), "one", "a big thing"}};
  EXPECT_EQ(definition_augment(d, defs, 0), d);
  const Dataset one = definition_augment(d, defs, 1);
  ASSERT_EQ(one.size(), 4u);
  EXPECT_EQ(one[2].text, "a fast thing");
  EXPECT_EQ(one[2].origin, Origin::kDefinition);
  EXPECT_EQ(one[3].label, label_id(1));

  AugmentParams p;
  p.lexicon = std::make_shared<const Lexicon>(small_lexicon());
  const Dataset many = definition_augment(d, defs, 5, p);
  EXPECT_EQ(many.size(), 2u + 2 * 5);
  std::size_t per_label[2] = {0, 0};
  for (const Sample& s : many.samples()) {
    if (s.origin == Origin::kDefinition) ++per_label[to_int(s.label)];
  }
  EXPECT_EQ(per_label[0], 5u);
  EXPECT_EQ(per_label[1], 5u);
  EXPECT_EQ(definition_augment(d, defs, 5, p), many);
}

TEST(DefinitionAugmentTest, MissingDefinitionForPopulatedLabelIsAnError) {
  const Dataset d = testing::make_dataset({{"x", "fast cat", 0}, {"y", "big dog", 1}}, {2});
  try {
    definition_augment(d, {{label_id(0), "zero", "z"}, {label_id(2), "two", "t"}}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCoverage);
  }
  // A declared label with no samples may lack a definition.
  EXPECT_NO_THROW(definition_augment(d, {{label_id(0), "zero", "z"}, {label_id(1), "one", "o"}}, 1));
  EXPECT_THROW(definition_augment(d, {}, -1), Error);
}

}  // namespace
}  // namespace curate
