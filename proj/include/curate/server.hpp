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

// Annotation session and its HTTP API.
//
//   GET  /api/tasks?budget=N&strategy=selective|random[&seed=S]
//   POST /api/labels               {"id": "...", "label": 7, "annotator": "..."}
//   POST /api/retrain
//   GET  /api/report
//   GET  /api/labels/definitions
//   GET  /api/dataset/summary
//
// Session is single-threaded. ApiServer gives it one writer thread and
// funnels every request through a command queue, so concurrent requests
// are applied in some sequential order.

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include "curate/annotate.hpp"
#include "curate/corpus.hpp"
#include "curate/detect.hpp"
#include "curate/error.hpp"
#include "curate/pipeline.hpp"
#include "httplib.h"

namespace curate {

struct SessionOptions {
  ExperimentInputs inputs;
  ModelConfig model;
  double dev_fraction = 1.0 / 6.0;
  int folds = 5;
  std::uint64_t seed = 0;
  std::string session_dir;  // empty: nothing is persisted
  std::size_t snapshot_every = 25;
  bool baseline_on_start = true;  // train the baseline report in the constructor
};

class Session {
 public:
  struct Ack {
    bool changed = false;
    std::uint64_t revision = 0;
  };

  // Merges train+dev, replays corrections.jsonl from the session directory
  // if present, scores the working set and (by default) trains the baseline
  // report.
  explicit Session(SessionOptions opts) : opts_(std::move(opts)) {
    check_firewall(opts_.inputs);
    data_ = merge(opts_.inputs.train, opts_.inputs.dev);
    if (!opts_.session_dir.empty()) {
      std::filesystem::create_directories(opts_.session_dir);
      const std::string journal = journal_path();
      if (std::filesystem::exists(journal)) {
        for (const Correction& c : load_corrections(journal)) apply(c, /*persist=*/false);
      }
    }
    rescore();
    if (opts_.baseline_on_start) retrain();
  }

  std::uint64_t revision() const { return revision_; }
  const Dataset& data() const { return data_; }
  const CorrectionLog& log() const { return log_; }
  const std::vector<SuspicionScore>& scores() const { return scores_; }
  const std::optional<ExperimentReport>& report() const { return report_; }

  // Seed used for scoring and, by default, for random task selection. It
  // matches the first transform of a pipeline run with the same seed.
  std::uint64_t selection_seed() const { return stage_seed(opts_.seed, 0); }

  std::vector<AnnotationTask> tasks(std::size_t budget, SelectionStrategy strategy,
                                    std::optional<std::uint64_t> seed = std::nullopt) const {
    std::vector<AnnotationTask> out =
        select_for_annotation(data_, scores_, cv_, budget, strategy, seed.value_or(selection_seed()));
    for (AnnotationTask& t : out) {
      if (touched_.count(t.sample_id)) t.status = TaskStatus::kDone;
    }
    return out;
  }

  Ack post_label(const Correction& c) { return apply(c, /*persist=*/true); }

  // Cached per revision; a fresh report also refreshes the scores.
  const ExperimentReport& retrain() {
    if (report_ && report_revision_ == revision_) return *report_;
    ExperimentReport r;
    try {
      if (scores_revision_ != revision_) rescore();
      r = train_and_evaluate(data_, opts_.inputs.test, opts_.model, opts_.dev_fraction, opts_.seed);
    } catch (const Error& e) {
      throw Error(e.code(), "retrain: " + e.message());
    }
    r.config_fingerprint = hex_digest(opts_.model.to_json().dump());
    r.transform_chain = {Json{{"type", "annotation-session"}, {"corrections", log_.size()}}};
    r.extra["revision"] = revision_;
    r.extra["test_fingerprint"] = dataset_fingerprint(opts_.inputs.test);
    report_ = std::move(r);
    report_revision_ = revision_;
    if (!opts_.session_dir.empty()) {
      write_snapshot();
      write_file(opts_.session_dir + "/report.json", report_->to_json().dump(2) + "\n");
    }
    return *report_;
  }

  Json definitions() const {
    Json arr = Json::array();
    for (const LabelDefinition& d : opts_.inputs.definitions) {
      arr.push_back({{"label", to_int(d.label)}, {"name", d.name}, {"definition", d.definition}});
    }
    return arr;
  }

  Json summary() const {
    Json j;
    j["revision"] = revision_;
    j["size"] = data_.size();
    Json labels = Json::array();
    for (LabelId l : data_.labels()) labels.push_back(to_int(l));
    j["labels"] = labels;
    Json hist = Json::object();
    for (const auto& [l, n] : data_.label_histogram()) hist[std::to_string(to_int(l))] = n;
    j["histogram"] = hist;
    j["corrections"] = log_.size();
    j["report_revision"] = report_ ? Json(report_revision_) : Json(nullptr);
    return j;
  }

 private:
  std::string journal_path() const { return opts_.session_dir + "/corrections.jsonl"; }

  static void write_file(const std::string& path, const std::string& body) {
    const std::string tmp = path + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::kIo, "cannot write '" + tmp + "'");
      out << body;
      if (!out.flush()) throw Error(ErrorCode::kIo, "write failed for '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
  }

  void write_snapshot() { write_file(opts_.session_dir + "/dataset.jsonl", dataset_to_string(data_)); }

  Ack apply(const Correction& c, bool persist) {
    CorrectionResult r = apply_corrections(data_, {c});
    if (r.log.empty()) return {false, revision_};
    if (persist && !opts_.session_dir.empty()) {
      std::ofstream out(journal_path(), std::ios::binary | std::ios::app);
      out << correction_to_json(c).dump() << '\n';
      if (!out.flush()) throw Error(ErrorCode::kIo, "cannot append to '" + journal_path() + "'");
    }
    data_ = std::move(r.data);
    log_.insert(log_.end(), r.log.begin(), r.log.end());
    touched_.insert(c.sample_id);
    ++revision_;
    if (persist && !opts_.session_dir.empty() && opts_.snapshot_every &&
        revision_ % opts_.snapshot_every == 0) {
      write_snapshot();
    }
    return {true, revision_};
  }

  void rescore() {
    ModelConfig mcfg = opts_.model;
    mcfg.seed = selection_seed();
    cv_ = crossval_probs(data_, opts_.folds, mcfg, seed_list(selection_seed(), 1));
    scores_ = rank_suspicious(cv_.records);
    scores_revision_ = revision_;
  }

  SessionOptions opts_;
  Dataset data_;
  CorrectionLog log_;
  std::unordered_set<std::string> touched_;
  CrossValResult cv_;
  std::vector<SuspicionScore> scores_;
  std::uint64_t scores_revision_ = 0;
  std::optional<ExperimentReport> report_;
  std::uint64_t report_revision_ = 0;
  std::uint64_t revision_ = 0;
};

// Runs submitted jobs one at a time on a dedicated thread.
class CommandQueue {
 public:
  CommandQueue() : worker_([this] { loop(); }) {}
  ~CommandQueue() {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
    worker_.join();
  }
  CommandQueue(const CommandQueue&) = delete;
  CommandQueue& operator=(const CommandQueue&) = delete;

  template <typename Fn>
  auto run(Fn fn) -> decltype(fn()) {
    auto task = std::make_shared<std::packaged_task<decltype(fn())()>>(std::move(fn));
    auto result = task->get_future();
    {
      std::lock_guard lock(mu_);
      jobs_.emplace_back([task] { (*task)(); });
    }
    cv_.notify_one();
    return result.get();
  }

 private:
  void loop() {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [this] { return closed_ || !jobs_.empty(); });
        if (jobs_.empty()) return;
        job = std::move(jobs_.front());
        jobs_.pop_front();
      }
      job();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> jobs_;
  bool closed_ = false;
  std::thread worker_;
};

inline int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kReference: return 404;
    case ErrorCode::kSchema: return 422;
    case ErrorCode::kRange:
    case ErrorCode::kParse:
    case ErrorCode::kValidation:
    case ErrorCode::kConfig: return 400;
    default: return 500;
  }
}

class ApiServer {
 public:
  // `session` must outlive the server and must not be touched elsewhere
  // while the server runs.
  explicit ApiServer(Session& session, std::string cors_origin = "*", std::string static_dir = {})
      : session_(session), cors_origin_(std::move(cors_origin)) {
    http_.set_default_headers({{"Access-Control-Allow-Origin", cors_origin_},
                               {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                               {"Access-Control-Allow-Headers", "Content-Type"}});
    if (!static_dir.empty()) http_.set_mount_point("/", static_dir);
    routes();
  }

  ~ApiServer() { stop(); }

  // Returns the bound port; port 0 picks a free one.
  int bind(const std::string& host, int port) {
    const int bound = port == 0 ? http_.bind_to_any_port(host) : (http_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
    return bound;
  }

  // Blocks until stop().
  void serve() { http_.listen_after_bind(); }

  void start() {
    thread_ = std::thread([this] { serve(); });
    http_.wait_until_ready();
  }

  void stop() {
    http_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  static void send_json(httplib::Response& res, const Json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <typename Fn>
  void guarded(httplib::Response& res, Fn fn) {
    try {
      fn();
    } catch (const Error& e) {
      send_json(res, {{"error", e.message()}, {"code", error_code_name(e.code())}}, http_status_for(e.code()));
    } catch (const Json::exception& e) {
      send_json(res, {{"error", std::string("bad request body: ") + e.what()}, {"code", "parse"}}, 400);
    } catch (const std::exception& e) {
      send_json(res, {{"error", e.what()}, {"code", "internal"}}, 500);
    }
  }

  void routes() {
    http_.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    http_.Get("/api/tasks", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::size_t budget = 10;
        if (req.has_param("budget")) {
          const std::string b = req.get_param_value("budget");
          if (b.empty() || b.find_first_not_of("0123456789") != std::string::npos) {
            throw Error(ErrorCode::kRange, "budget must be a non-negative integer");
          }
          budget = std::stoull(b);
        }
        const SelectionStrategy strategy = parse_selection_strategy(
            req.has_param("strategy") ? req.get_param_value("strategy") : std::string("selective"));
        std::optional<std::uint64_t> seed;
        if (req.has_param("seed")) seed = std::stoull(req.get_param_value("seed"));
        const Json body = queue_.run([&] {
          Json j;
          j["revision"] = session_.revision();
          Json arr = Json::array();
          for (const AnnotationTask& t : session_.tasks(budget, strategy, seed)) arr.push_back(task_to_json(t));
          j["tasks"] = std::move(arr);
          return j;
        });
        send_json(res, body);
      });
    });

    http_.Post("/api/labels", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const Json in = Json::parse(req.body);
        Correction c = correction_from_json(in, "request");
        if (c.annotator_id.empty()) c.annotator_id = "ui";
        if (c.timestamp == 0) {
          c.timestamp = std::chrono::duration_cast<std::chrono::seconds>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count();
        }
        const Session::Ack ack = queue_.run([&] { return session_.post_label(c); });
        send_json(res, {{"ok", true}, {"changed", ack.changed}, {"revision", ack.revision}});
      });
    });

    http_.Post("/api/retrain", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        const Json body = queue_.run([&] { return session_.retrain().to_json(); });
        send_json(res, body);
      });
    });

    http_.Get("/api/report", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        const std::optional<Json> body = queue_.run([&]() -> std::optional<Json> {
          if (!session_.report()) return std::nullopt;
          return session_.report()->to_json();
        });
        if (!body) {
          send_json(res, {{"error", "no report yet"}, {"code", "reference"}}, 404);
        } else {
          send_json(res, *body);
        }
      });
    });

    http_.Get("/api/labels/definitions", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, queue_.run([&] { return session_.definitions(); })); });
    });

    http_.Get("/api/dataset/summary", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] { send_json(res, queue_.run([&] { return session_.summary(); })); });
    });
  }

  Session& session_;
  std::string cors_origin_;
  httplib::Server http_;
  CommandQueue queue_;
  std::thread thread_;
};

}  // namespace curate
