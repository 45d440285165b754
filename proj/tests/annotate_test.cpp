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

#include "curate/annotate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "test_support.hpp"

namespace curate {
namespace {

std::vector<SuspicionScore> scores_for(const std::vector<std::string>& ids_by_rank) {
  std::vector<SuspicionScore> out;
  for (std::size_t i = 0; i < ids_by_rank.size(); ++i) {
    out.push_back({ids_by_rank[i], 1.0 - 0.1 * static_cast<double>(i), i + 1});
  }
  return out;
}

Dataset five() {
  return testing::make_dataset({{"a", "ta", 0}, {"b", "tb", 1}, {"c", "tc", 2}, {"d", "td", 0}, {"e", "te", 1}});
}

CrossValResult fake_cv(const Dataset& d) {
  CrossValResult cv;
  cv.labels = d.labels();
  for (const Sample& s : d.samples()) {
    PredictionRecord r;
    r.sample_id = s.id;
    r.given = s.label;
    r.probs = {0.2, 0.5, 0.3};
    cv.records.push_back(r);
  }
  return cv;
}

TEST(SuggestionTest, TopKByProbabilityThenLabel) {
  const std::vector<LabelId> labels{label_id(0), label_id(1), label_id(2), label_id(3)};
  const auto s = top_suggestions({0.1, 0.4, 0.1, 0.4}, labels, 3);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].label, label_id(1));
  EXPECT_EQ(s[1].label, label_id(3));
  EXPECT_EQ(s[2].label, label_id(0));
}

TEST(SelectTest, SelectiveTakesTheTopOfTheRanking) {
  const Dataset d = five();
  const auto scores = scores_for({"c", "a", "e", "b", "d"});
  const auto tasks = select_for_annotation(d, scores, fake_cv(d), 2, SelectionStrategy::kSelective, 0);
  ASSERT_EQ(tasks.size(), 2u);
  EXPECT_EQ(tasks[0].sample_id, "c");
  EXPECT_EQ(tasks[1].sample_id, "a");
  EXPECT_EQ(tasks[0].text, "tc");
  EXPECT_EQ(tasks[0].current_label, label_id(2));
  EXPECT_EQ(tasks[0].suggested.front().label, label_id(1));
  EXPECT_EQ(tasks[0].status, TaskStatus::kPending);
  const Json j = task_to_json(tasks[0]);
  EXPECT_EQ(j["id"], "c");
  EXPECT_EQ(j["suggested"][0]["label"], 1);
  EXPECT_EQ(j["status"], "pending");
}

TEST(SelectTest, RandomIsSeededAndCoversEverythingAtFullBudget) {
  const Dataset d = five();
  const auto scores = scores_for({"c", "a", "e", "b", "d"});
  const CrossValResult cv = fake_cv(d);
  const auto all = select_for_annotation(d, scores, cv, 5, SelectionStrategy::kRandom, 3);
  std::vector<std::string> ids;
  for (const auto& t : all) ids.push_back(t.sample_id);
  EXPECT_EQ(ids, (std::vector<std::string>{"c", "a", "e", "b", "d"}));

  const auto x = select_for_annotation(d, scores, cv, 2, SelectionStrategy::kRandom, 3);
  EXPECT_EQ(x, select_for_annotation(d, scores, cv, 2, SelectionStrategy::kRandom, 3));
  std::set<std::vector<std::string>> seen;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<std::string> pick;
    for (const auto& t : select_for_annotation(d, scores, cv, 2, SelectionStrategy::kRandom, seed)) {
      pick.push_back(t.sample_id);
    }
    seen.insert(pick);
  }
  EXPECT_GT(seen.size(), 3u);
  EXPECT_TRUE(select_for_annotation(d, scores, cv, 0, SelectionStrategy::kSelective, 0).empty());
  try {
    select_for_annotation(d, scores, cv, 6, SelectionStrategy::kSelective, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRange);
  }
}

std::vector<AnnotationTask> tasks_for(std::size_t n) {
  std::vector<AnnotationTask> tasks(n);
  for (std::size_t i = 0; i < n; ++i) tasks[i].sample_id = "s" + std::to_string(i);
  return tasks;
}

TEST(AnnotatorTest, PerfectAnnotatorReturnsTruth) {
  const auto tasks = tasks_for(50);
  LabelMap truth;
  for (std::size_t i = 0; i < 50; ++i) truth["s" + std::to_string(i)] = label_id(static_cast<int>(i % 4));
  const std::vector<LabelId> labels{label_id(0), label_id(1), label_id(2), label_id(3)};
  AnnotatorProfile p;
  p.accuracy = 1.0;
  for (const Correction& c : simulate_annotator(tasks, truth, labels, p)) {
    EXPECT_EQ(c.new_label, truth.at(c.sample_id));
    EXPECT_EQ(c.annotator_id, "simulated");
  }
}

TEST(AnnotatorTest, AccuracyWithinThreeSigma) {
  const std::size_t n = 2000;
  const auto tasks = tasks_for(n);
  LabelMap truth;
  for (const auto& t : tasks) truth[t.sample_id] = label_id(1);
  const std::vector<LabelId> labels{label_id(0), label_id(1), label_id(2)};
  AnnotatorProfile p;
  p.accuracy = 0.92;
  p.seed = 5;
  const auto answers = simulate_annotator(tasks, truth, labels, p);
  std::size_t right = 0;
  for (const Correction& c : answers) right += c.new_label == label_id(1);
  const double sigma = std::sqrt(n * 0.92 * 0.08);
  EXPECT_NEAR(static_cast<double>(right), 0.92 * n, 3 * sigma);

  // An answer depends only on (seed, id), not on the other tasks present.
  const std::vector<AnnotationTask> one{tasks[17]};
  EXPECT_EQ(simulate_annotator(one, truth, labels, p)[0], answers[17]);
}

TEST(AnnotatorTest, ConfusableErrorsComeFromSuggestions) {
  auto tasks = tasks_for(300);
  LabelMap truth;
  for (auto& t : tasks) {
    truth[t.sample_id] = label_id(0);
    t.suggested = {{label_id(0), 0.6}, {label_id(4), 0.3}};
  }
  std::vector<LabelId> labels;
  for (int l = 0; l < 8; ++l) labels.push_back(label_id(l));
  AnnotatorProfile p;
  p.accuracy = 0.5;
  p.confusable = true;
  for (const Correction& c : simulate_annotator(tasks, truth, labels, p)) {
    EXPECT_TRUE(c.new_label == label_id(0) || c.new_label == label_id(4));
  }
}

TEST(AnnotatorTest, MissingTruthAndBadAccuracy) {
  const auto tasks = tasks_for(2);
  LabelMap truth{{"s0", label_id(0)}};
  try {
    simulate_annotator(tasks, truth, {label_id(0), label_id(1)}, AnnotatorProfile{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOracleGap);
  }
  AnnotatorProfile bad;
  bad.accuracy = 0.0;
  EXPECT_THROW(simulate_annotator({}, truth, {}, bad), Error);
}

TEST(TruthTest, FromFlipLog) {
  const Dataset noisy = testing::make_dataset({{"a", "x", 1}, {"b", "y", 1}});
  const LabelMap truth = truth_from_flip_log(noisy, {{"a", label_id(0), label_id(1), FlipStrategy::kRandom}});
  EXPECT_EQ(truth.at("a"), label_id(0));
  EXPECT_EQ(truth.at("b"), label_id(1));
}

TEST(ApplyCorrectionsTest, OnlyChangedLabelsAreLogged) {
  std::vector<std::tuple<std::string, std::string, int>> rows;
  for (int i = 0; i < 2000; ++i) rows.emplace_back("s" + std::to_string(i), "t", i % 3);
  const Dataset d = testing::make_dataset(rows);
  std::vector<Correction> cs;
  // 2000 corrections, of which 1300 restate the current label.
  for (int i = 0; i < 2000; ++i) {
    const int current = i % 3;
    cs.push_back({"s" + std::to_string(i), label_id(i < 1300 ? current : (current + 1) % 3), "x", i});
  }
  const CorrectionResult r = apply_corrections(d, cs);
  EXPECT_EQ(r.log.size(), 700u);
  for (const CorrectionEntry& e : r.log) {
    EXPECT_EQ(e.mechanism, Mechanism::kAnnotation);
    EXPECT_NE(e.old_label, e.new_label);
  }
  EXPECT_EQ(r.data[1500].origin, Origin::kCorrected);
  EXPECT_EQ(r.data[5].origin, Origin::kOriginal);

  const CorrectionResult again = apply_corrections(r.data, cs);
  EXPECT_TRUE(again.log.empty());
  EXPECT_EQ(again.data, r.data);
}

TEST(ApplyCorrectionsTest, ErrorsAndLastWriteWins) {
  const Dataset d = testing::make_dataset({{"a", "x", 0}, {"b", "y", 1}});
  try {
    apply_corrections(d, {{"zz", label_id(0), "", 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kReference);
  }
  try {
    apply_corrections(d, {{"a", label_id(9), "", 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchema);
  }
  const CorrectionResult r = apply_corrections(d, {{"a", label_id(1), "", 0}, {"a", label_id(0), "", 1}});
  EXPECT_EQ(r.data[0].label, label_id(0));
  EXPECT_EQ(r.log.size(), 2u);
}

TEST(CorrectionFileTest, RoundTripAndFormat) {
  const std::vector<Correction> cs{{"a", label_id(2), "ann", 1700000000}, {"b", label_id(0), "", 0}};
  std::ostringstream out;
  write_corrections(cs, out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')),
            R"({"id":"a","label":2,"annotator":"ann","timestamp":1700000000})");
  std::istringstream in(out.str() + "\n");
  EXPECT_EQ(read_corrections(in, "c"), cs);
  std::istringstream bad("{\"label\":1}\n");
  EXPECT_THROW(read_corrections(bad, "c"), Error);
}

}  // namespace
}  // namespace curate
