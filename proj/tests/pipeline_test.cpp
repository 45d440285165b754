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

#include "curate/pipeline.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "curate/noise.hpp"
#include "test_support.hpp"

namespace curate {
namespace {

ExperimentInputs small_inputs(std::uint64_t seed = 1) {
  const SynthCorpus c = testing::small_corpus(seed, 5, 30);
  ExperimentInputs in;
  const NoiseResult noisy = inject_noise(c.train, {0.2, FlipStrategy::kRandom, seed, 5}, nullptr);
  in.train = noisy.data;
  in.dev = c.dev;
  in.test = c.test;
  in.definitions = c.definitions;
  in.lexicon = std::make_shared<const Lexicon>(c.lexicon);
  in.truth = to_label_map(c.clean_labels);
  return in;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.name = "base";
  cfg.model.hash_dim = 1 << 13;
  cfg.unfrozen = true;
  cfg.seeds = {0, 1};
  return cfg;
}

TEST(PipelineConfigTest, FrozenModelUnlessUnfrozen) {
  ExperimentConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.model.learning_rate = 0.5;
  try {
    cfg.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
  }
  cfg.unfrozen = true;
  EXPECT_NO_THROW(cfg.validate());
  cfg.model.seed = 12;  // seeds are not hyperparameters
  cfg.unfrozen = false;
  cfg.model.learning_rate = 0.2;
  EXPECT_NO_THROW(cfg.validate());
  cfg.transforms = {Json{{"type", "shuffle"}}};
  EXPECT_THROW(cfg.validate(), Error);
  cfg.transforms = {Json{{"n", 3}}};
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(PipelineConfigTest, FileRoundTripResolvesRelativePaths) {
  testing::TempDir tmp;
  ExperimentConfig cfg = small_config();
  cfg.data.train = "train.jsonl";
  cfg.data.dev = "dev.jsonl";
  cfg.data.test = "/abs/test.jsonl";
  cfg.transforms = {Json{{"type", "delete-top"}, {"n", 5}}};
  {
    std::ofstream out(tmp.file("exp.json"));
    out << cfg.to_json().dump(2);
  }
  const ExperimentConfig back = load_experiment_config(tmp.file("exp.json"));
  EXPECT_EQ(back.data.train, tmp.file("train.jsonl"));
  EXPECT_EQ(back.data.test, "/abs/test.jsonl");
  EXPECT_EQ(back.transforms, cfg.transforms);
  EXPECT_EQ(back.seeds, cfg.seeds);
  EXPECT_TRUE(back.model.same_hyperparameters(cfg.model));
  EXPECT_EQ(back.name, "base");

  Json missing = cfg.to_json();
  missing["data"].erase("test");
  EXPECT_THROW(ExperimentConfig::from_json(missing), Error);
}

TEST(FirewallTest, RejectsSharedIdsOrTexts) {
  ExperimentInputs in = small_inputs();
  EXPECT_NO_THROW(check_firewall(in));
  std::vector<Sample> test = in.test.samples();
  test[0].id = in.train[3].id;
  ExperimentInputs leak_id = in;
  leak_id.test = in.test.with_samples(test);
  try {
    check_firewall(leak_id);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFirewall);
  }
  test = in.test.samples();
  test[1].text = in.dev[0].text;
  ExperimentInputs leak_text = in;
  leak_text.test = in.test.with_samples(test);
  EXPECT_THROW(check_firewall(leak_text), Error);
  EXPECT_THROW(run_experiment(leak_text, small_config()), Error);
}

TEST(SeedTest, StageSeedsDiffer) {
  EXPECT_NE(stage_seed(0, 0), stage_seed(0, 1));
  EXPECT_NE(stage_seed(0, 0), stage_seed(1, 0));
  EXPECT_EQ(stage_seed(5, 2), stage_seed(5, 2));
  const auto s = seed_list(3, 4);
  EXPECT_EQ(s.size(), 4u);
  EXPECT_EQ(std::set<std::uint64_t>(s.begin(), s.end()).size(), 4u);
}

class PipelineRunTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { in_ = new ExperimentInputs(small_inputs()); }
  static void TearDownTestSuite() { delete in_; }
  static ExperimentInputs* in_;
};
ExperimentInputs* PipelineRunTest::in_ = nullptr;

TEST_F(PipelineRunTest, ChainRecordedAndRunIsByteIdentical) {
  ExperimentConfig cfg = small_config();
  cfg.transforms = {Json{{"type", "delete-top"}, {"n", 10}, {"folds", 3}},
                    Json{{"type", "definition-augment"}, {"n", 2}},
                    Json{{"type", "eda-augment"}, {"n_aug", 1}}};
  const auto a = run_experiment(*in_, cfg);
  const auto b = run_experiment(*in_, cfg);
  EXPECT_EQ(reports_to_json(a).dump(), reports_to_json(b).dump());
  ASSERT_EQ(a.size(), 2u);
  const std::size_t merged = in_->train.size() + in_->dev.size();
  for (const ExperimentReport& r : a) {
    EXPECT_EQ(r.transform_chain, cfg.transforms);
    EXPECT_EQ(r.config_fingerprint, config_fingerprint(cfg, *in_));
    EXPECT_EQ(r.extra["merged_size"], merged);
    EXPECT_EQ(r.extra["working_size"], (merged - 10 + 5 * 2) * 2);
    EXPECT_EQ(r.extra["transform_notes"].size(), 3u);
    EXPECT_EQ(r.extra["test_fingerprint"], dataset_fingerprint(in_->test));
    EXPECT_GT(r.macro_f1, 0.0);
  }
  EXPECT_EQ(a[0].seed, 0u);
  EXPECT_EQ(a[1].seed, 1u);
  testing::TempDir tmp;
  {
    std::ofstream out(tmp.file("r.json"));
    out << reports_to_json(a).dump();
  }
  EXPECT_EQ(reports_to_json(load_reports(tmp.file("r.json"))).dump(), reports_to_json(a).dump());
}

TEST_F(PipelineRunTest, FingerprintIgnoresNameButNotTransforms) {
  ExperimentConfig a = small_config(), b = small_config();
  b.name = "renamed";
  EXPECT_EQ(config_fingerprint(a, *in_), config_fingerprint(b, *in_));
  b.transforms = {Json{{"type", "delete-top"}}};
  EXPECT_NE(config_fingerprint(a, *in_), config_fingerprint(b, *in_));
}

TEST_F(PipelineRunTest, FailingStageIsNamed) {
  ExperimentConfig cfg = small_config();
  cfg.seeds = {0};
  cfg.transforms = {Json{{"type", "eda-augment"}, {"n_aug", 0}}, Json{{"type", "delete-top"}, {"n", 100000}}};
  try {
    run_experiment(*in_, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRange);
    EXPECT_NE(std::string(e.what()).find("stage 2 (delete-top)"), std::string::npos) << e.what();
  }
  ExperimentInputs no_truth = *in_;
  no_truth.truth.reset();
  cfg.transforms = {Json{{"type", "annotate-simulated"}, {"budget", 5}}};
  try {
    run_experiment(no_truth, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOracleGap);
  }
}

TEST_F(PipelineRunTest, SimulatedAnnotationUsesTheTruth) {
  TransformContext ctx;
  ctx.truth = &*in_->truth;
  ctx.model = small_config().model;
  const Dataset merged = merge(in_->train, in_->dev);
  const TransformOutcome o = apply_transform(
      merged, Json{{"type", "annotate-simulated"}, {"budget", 20}, {"accuracy", 1.0}, {"folds", 3}}, ctx);
  EXPECT_EQ(o.notes["annotated"], 20);
  std::size_t fixed = 0;
  for (std::size_t i = 0; i < merged.size(); ++i) {
    if (o.data[i].label != merged[i].label) {
      EXPECT_EQ(o.data[i].label, in_->truth->at(merged[i].id));
      ++fixed;
    }
  }
  EXPECT_EQ(o.notes["changed"], fixed);
}

ExperimentReport fake_report(const std::string& name, double f1, const std::string& test_fp = "t") {
  ExperimentReport r;
  r.macro_f1 = f1;
  r.extra["name"] = name;
  r.extra["test_fingerprint"] = test_fp;
  return r;
}

TEST(CompareTest, MeansDeviationsAndDeltas) {
  const std::vector<std::vector<ExperimentReport>> runs{
      {fake_report("base", 0.5), fake_report("base", 0.7)},
      {fake_report("x", 0.8), fake_report("x", 0.8), fake_report("x", 0.9)},
  };
  const ComparisonTable t = compare(runs);
  EXPECT_EQ(t.baseline, "base");
  EXPECT_NEAR(t.rows[0].mean, 0.6, 1e-12);
  EXPECT_NEAR(t.rows[0].sd, std::sqrt(0.02), 1e-12);
  EXPECT_EQ(t.rows[0].delta, 0.0);
  EXPECT_NEAR(t.rows[1].mean, 2.5 / 3, 1e-12);
  EXPECT_NEAR(t.rows[1].delta, 2.5 / 3 - 0.6, 1e-12);
  EXPECT_NE(t.to_text().find("base"), std::string::npos);
  EXPECT_EQ(t.to_json()["rows"].size(), 2u);

  const ComparisonTable other = compare(runs, "x");
  EXPECT_EQ(other.rows[1].delta, 0.0);
  EXPECT_THROW(compare(runs, "nope"), Error);
  EXPECT_EQ(compare({{fake_report("solo", 0.4)}}).rows[0].sd, 0.0);
}

TEST(CompareTest, RefusesDifferentTestSets) {
  try {
    compare({{fake_report("a", 0.5)}, {fake_report("b", 0.6, "other")}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kComparability);
  }
  ExperimentReport bare;
  EXPECT_THROW(compare({{bare}}), Error);
  EXPECT_THROW(compare({}), Error);
}

TEST(GridTest, AllSubsetsOrderedBySize) {
  ExperimentConfig base = small_config();
  const std::vector<NamedTransform> s{{"del", Json{{"type", "delete-top"}}},
                                      {"ens", Json{{"type", "ensemble-correct"}}},
                                      {"defs", Json{{"type", "definition-augment"}}}};
  const auto grid = make_combination_grid(base, s);
  ASSERT_EQ(grid.size(), 8u);
  EXPECT_EQ(grid[0].name, "base");
  EXPECT_TRUE(grid[0].transforms.empty());
  EXPECT_EQ(grid[1].name, "del");
  EXPECT_EQ(grid[3].name, "defs");
  EXPECT_EQ(grid[4].name, "del+ens");
  EXPECT_EQ(grid[7].name, "del+ens+defs");
  EXPECT_EQ(grid[7].transforms.size(), 3u);
  EXPECT_EQ(grid[7].transforms[2]["type"], "definition-augment");
}

}  // namespace
}  // namespace curate
