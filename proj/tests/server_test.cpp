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

#include "curate/server.hpp"

#include <gtest/gtest.h>

#include <thread>

#include "curate/noise.hpp"
#include "test_support.hpp"

namespace curate {
namespace {

struct Fixture {
  ExperimentInputs inputs;
  LabelMap truth;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    const SynthCorpus c = testing::small_corpus(21, 5, 30);
    Fixture f;
    f.inputs.train = inject_noise(c.train, {0.3, FlipStrategy::kRandom, 2, 5}, nullptr).data;
    f.inputs.dev = c.dev;
    f.inputs.test = c.test;
    f.inputs.definitions = c.definitions;
    f.truth = to_label_map(c.clean_labels);
    return f;
  }();
  return f;
}

ModelConfig small_model() {
  ModelConfig m;
  m.hash_dim = 1 << 13;
  return m;
}

SessionOptions options(std::string dir = {}) {
  SessionOptions o;
  o.inputs = fixture().inputs;
  o.model = small_model();
  o.folds = 3;
  o.seed = 0;
  o.session_dir = std::move(dir);
  return o;
}

// A session served on an ephemeral port for the lifetime of the object.
class Served {
 public:
  explicit Served(SessionOptions o) : session_(std::move(o)), server_(session_) {
    port_ = server_.bind("127.0.0.1", 0);
    server_.start();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(120, 0);
    return c;
  }
  Session& session() { return session_; }

 private:
  Session session_;
  ApiServer server_;
  int port_ = 0;
};

Json body_of(const httplib::Result& r) {
  EXPECT_TRUE(r);
  return Json::parse(r->body);
}

std::string post_json(const Json& j) { return j.dump(); }

class ServerTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { served_ = new Served(options()); }
  static void TearDownTestSuite() { delete served_; }
  static Served* served_;
};
Served* ServerTest::served_ = nullptr;

TEST_F(ServerTest, TasksFollowTheRanking) {
  auto c = served_->client();
  const Json j = body_of(c.Get("/api/tasks?budget=10&strategy=selective"));
  ASSERT_EQ(j["tasks"].size(), 10u);
  const auto& scores = served_->session().scores();
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(j["tasks"][i]["id"], scores[i].sample_id);
    EXPECT_LE(j["tasks"][i]["suggested"].size(), 5u);
  }
  EXPECT_TRUE(body_of(c.Get("/api/tasks?budget=0"))["tasks"].empty());
  const auto a = c.Get("/api/tasks?budget=7&strategy=random");
  const auto b = c.Get("/api/tasks?budget=7&strategy=random");
  EXPECT_EQ(a->body, b->body);
  EXPECT_EQ(a->get_header_value("Access-Control-Allow-Origin"), "*");
}

TEST_F(ServerTest, TaskErrors) {
  auto c = served_->client();
  const std::size_t n = served_->session().data().size();
  auto over = c.Get(("/api/tasks?budget=" + std::to_string(n + 1)).c_str());
  EXPECT_EQ(over->status, 400);
  EXPECT_EQ(body_of(over)["code"], "range");
  EXPECT_EQ(c.Get("/api/tasks?budget=-3")->status, 400);
  EXPECT_EQ(c.Get("/api/tasks?budget=2&strategy=vibes")->status, 400);
  EXPECT_EQ(c.Options("/api/tasks")->status, 204);
}

TEST_F(ServerTest, ReadOnlyViews) {
  auto c = served_->client();
  const Json defs = body_of(c.Get("/api/labels/definitions"));
  const Json summary = body_of(c.Get("/api/dataset/summary"));
  EXPECT_EQ(defs.size(), summary["labels"].size());
  EXPECT_EQ(summary["size"], served_->session().data().size());
  std::size_t total = 0;
  for (const auto& [k, v] : summary["histogram"].items()) total += v.get<std::size_t>();
  EXPECT_EQ(total, summary["size"]);
  const Json report = body_of(c.Get("/api/report"));
  EXPECT_LE(report["revision"].get<std::uint64_t>(), summary["revision"].get<std::uint64_t>());
}

TEST(ServerStateTest, LabelsRevisionsAndRetrainCache) {
  Served s(options());
  auto c = s.client();
  const Json baseline = body_of(c.Get("/api/report"));
  // Zero corrections: retrain reproduces the startup report.
  EXPECT_EQ(body_of(c.Post("/api/retrain", "", "application/json")), baseline);

  const Sample first = s.session().data()[0];
  const int other = (to_int(first.label) + 1) % 5;
  const auto r1 = c.Post("/api/labels", post_json({{"id", first.id}, {"label", other}}), "application/json");
  ASSERT_EQ(r1->status, 200);
  EXPECT_EQ(body_of(r1)["changed"], true);
  EXPECT_EQ(body_of(r1)["revision"], 1);
  const auto r2 = c.Post("/api/labels", post_json({{"id", first.id}, {"label", other}}), "application/json");
  EXPECT_EQ(body_of(r2)["changed"], false);
  EXPECT_EQ(body_of(r2)["revision"], 1);
  EXPECT_EQ(s.session().log().size(), 1u);

  EXPECT_EQ(c.Post("/api/labels", post_json({{"id", "missing"}, {"label", 0}}), "application/json")->status, 404);
  EXPECT_EQ(c.Post("/api/labels", post_json({{"id", first.id}, {"label", 99}}), "application/json")->status, 422);
  EXPECT_EQ(c.Post("/api/labels", "{not json", "application/json")->status, 400);
  EXPECT_EQ(s.session().revision(), 1u);

  // The task for a touched sample is marked done.
  bool seen = false;
  const std::size_t n = s.session().data().size();
  const Json all = body_of(c.Get(("/api/tasks?budget=" + std::to_string(n)).c_str()));
  for (const auto& t : all["tasks"]) {
    if (t["id"] == first.id) {
      EXPECT_EQ(t["status"], "done");
      seen = true;
    }
  }
  EXPECT_TRUE(seen);

  const auto a = c.Post("/api/retrain", "", "application/json");
  const auto b = c.Post("/api/retrain", "", "application/json");
  EXPECT_EQ(a->body, b->body);
  EXPECT_EQ(body_of(a)["revision"], 1);
  EXPECT_EQ(body_of(c.Get("/api/report")), body_of(a));
}

TEST(ServerStateTest, ReportIsMissingUntilFirstRetrain) {
  SessionOptions o = options();
  o.baseline_on_start = false;
  Served s(std::move(o));
  auto c = s.client();
  EXPECT_EQ(c.Get("/api/report")->status, 404);
  EXPECT_TRUE(body_of(c.Get("/api/dataset/summary"))["report_revision"].is_null());
  EXPECT_EQ(c.Post("/api/retrain", "", "application/json")->status, 200);
  EXPECT_EQ(c.Get("/api/report")->status, 200);
}

TEST(ServerStateTest, ConcurrentPostsAreLinearized) {
  SessionOptions o = options();
  o.baseline_on_start = false;
  Served s(std::move(o));
  const Dataset data = s.session().data();
  // Eight threads post the same correction, so exactly one of them changes
  // anything; eight more post distinct corrections.
  std::vector<std::string> bodies;
  for (int t = 0; t < 16; ++t) {
    const Sample& d = t < 8 ? data[1] : data[10 + t];
    bodies.push_back(Json{{"id", d.id}, {"label", (to_int(d.label) + 1) % 5}}.dump());
  }
  std::vector<std::thread> threads;
  std::atomic<int> changed{0};
  for (int t = 0; t < 16; ++t) {
    threads.emplace_back([&, t] {
      auto c = s.client();
      const auto r = c.Post("/api/labels", bodies[t], "application/json");
      if (r && r->status == 200 && Json::parse(r->body)["changed"] == true) ++changed;
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(changed.load(), 9);
  EXPECT_EQ(s.session().revision(), 9u);
  EXPECT_EQ(s.session().log().size(), 9u);
}

TEST(ServerPersistenceTest, JournalReplaysOnRestart) {
  testing::TempDir tmp;
  const std::string dir = tmp.file("session");
  std::vector<std::pair<std::string, int>> posted;
  Dataset after;
  {
    SessionOptions o = options(dir);
    o.baseline_on_start = false;
    o.snapshot_every = 2;
    Session s(std::move(o));
    for (std::size_t i = 0; i < 3; ++i) {
      const Sample x = s.data()[i];
      s.post_label({x.id, label_id((to_int(x.label) + 2) % 5), "t", 1});
    }
    EXPECT_TRUE(std::filesystem::exists(dir + "/dataset.jsonl"));
    s.retrain();
    EXPECT_TRUE(std::filesystem::exists(dir + "/report.json"));
    after = s.data();
  }
  SessionOptions o = options(dir);
  o.baseline_on_start = false;
  Session again(std::move(o));
  EXPECT_EQ(again.data(), after);
  EXPECT_EQ(again.revision(), 3u);
  EXPECT_EQ(load_corrections(dir + "/corrections.jsonl").size(), 3u);
  EXPECT_EQ(load_dataset(dir + "/dataset.jsonl", SplitTag::kMerged).size(), after.size());
}

TEST(ServerHeadlessTest, ReproducesTheSimulatedAnnotationRun) {
  const Fixture& f = fixture();
  const std::size_t budget = 40;

  ExperimentConfig cfg;
  cfg.model = small_model();
  cfg.unfrozen = true;
  cfg.seeds = {0};
  cfg.transforms = {Json{{"type", "annotate-simulated"}, {"budget", budget}, {"folds", 3}}};
  ExperimentInputs in = f.inputs;
  in.truth = f.truth;
  const ExperimentReport expected = run_experiment(in, cfg).front();

  Served s(options());
  auto c = s.client();
  const double baseline = body_of(c.Get("/api/report"))["macro_f1"].get<double>();
  const Json tasks = body_of(c.Get(("/api/tasks?budget=" + std::to_string(budget) + "&strategy=selective").c_str()));
  std::vector<AnnotationTask> ts;
  for (const Json& t : tasks["tasks"]) ts.push_back({t["id"].get<std::string>(), "", {}, {}, TaskStatus::kPending});
  AnnotatorProfile prof;
  prof.seed = derive_seed(stage_seed(0, 0), "annotator");
  for (const Correction& a : simulate_annotator(ts, f.truth, s.session().data().labels(), prof)) {
    ASSERT_EQ(c.Post("/api/labels", correction_to_json(a).dump(), "application/json")->status, 200);
  }
  const Json report = body_of(c.Post("/api/retrain", "", "application/json"));
  EXPECT_DOUBLE_EQ(report["macro_f1"].get<double>(), expected.macro_f1);
  EXPECT_GE(report["macro_f1"].get<double>() + 1e-12, baseline);
}

TEST(HttpStatusTest, Mapping) {
  EXPECT_EQ(http_status_for(ErrorCode::kReference), 404);
  EXPECT_EQ(http_status_for(ErrorCode::kSchema), 422);
  EXPECT_EQ(http_status_for(ErrorCode::kRange), 400);
  EXPECT_EQ(http_status_for(ErrorCode::kDegenerate), 500);
}

}  // namespace
}  // namespace curate
