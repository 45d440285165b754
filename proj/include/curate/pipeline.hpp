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

// Experiment runner: merge train+dev, apply a transform chain, re-split,
// train the frozen model, score the fixed test set. Plus multi-config
// comparison.
//
// Config file (JSON); relative paths resolve against the config's directory:
//   {"name": "delete100",
//    "data": {"train": "train.jsonl", "dev": "dev.jsonl", "test": "test.jsonl",
//             "definitions": "definitions.jsonl", "lexicon": "lexicon.txt",
//             "truth": "clean_labels.jsonl", "format": "native"},
//    "transforms": [{"type": "delete-top", "n": 100}],
//    "split": {"dev_fraction": 0.1667},
//    "model": {...}, "unfrozen": false, "seeds": [0, 1, 2, 3, 4]}

#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "curate/annotate.hpp"
#include "curate/augment.hpp"
#include "curate/corpus.hpp"
#include "curate/detect.hpp"
#include "curate/dynamics.hpp"
#include "curate/error.hpp"
#include "curate/metrics.hpp"
#include "curate/model.hpp"
#include "curate/parallel.hpp"
#include "curate/rng.hpp"
#include "curate/synth.hpp"

namespace curate {

inline const std::vector<std::string>& transform_types() {
  static const std::vector<std::string> kTypes = {"delete-top",   "ensemble-correct",   "bootstrap-correct",
                                                  "eda-augment",  "definition-augment", "annotate-simulated"};
  return kTypes;
}

struct DataPaths {
  std::string train, dev, test, definitions, lexicon, truth;
  DatasetFormat format = DatasetFormat::kNative;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DataPaths data;
  std::vector<Json> transforms;
  double dev_fraction = 1.0 / 6.0;
  ModelConfig model;
  bool unfrozen = false;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

  void validate() const {
    if (seeds.empty()) throw Error(ErrorCode::kConfig, "at least one seed required");
    if (!unfrozen && !model.same_hyperparameters(ModelConfig{})) {
      throw Error(ErrorCode::kConfig, "model config differs from the frozen default; set \"unfrozen\": true to override");
    }
    model.validate();
    if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) {
      throw Error(ErrorCode::kConfig, "split.dev_fraction must lie in (0,1)");
    }
    for (std::size_t i = 0; i < transforms.size(); ++i) {
      const Json& t = transforms[i];
      if (!t.is_object() || !t.contains("type") || !t["type"].is_string()) {
        throw Error(ErrorCode::kConfig, "transform #" + std::to_string(i + 1) + " needs a string \"type\"");
      }
      const auto& types = transform_types();
      if (std::find(types.begin(), types.end(), t["type"].get<std::string>()) == types.end()) {
        throw Error(ErrorCode::kConfig, "unknown transform type '" + t["type"].get<std::string>() + "'");
      }
    }
  }

  Json to_json() const {
    Json j;
    j["name"] = name;
    Json d;
    d["train"] = data.train;
    d["dev"] = data.dev;
    d["test"] = data.test;
    if (!data.definitions.empty()) d["definitions"] = data.definitions;
    if (!data.lexicon.empty()) d["lexicon"] = data.lexicon;
    if (!data.truth.empty()) d["truth"] = data.truth;
    d["format"] = data.format == DatasetFormat::kCic ? "cic" : "native";
    j["data"] = d;
    j["transforms"] = transforms;
    j["split"] = {{"dev_fraction", dev_fraction}};
    Json m = model.to_json();
    m.erase("seed");
    j["model"] = m;
    j["unfrozen"] = unfrozen;
    j["seeds"] = seeds;
    return j;
  }

  // Relative data paths are resolved against base_dir.
  static ExperimentConfig from_json(const Json& j, const std::filesystem::path& base_dir = {}) {
    ExperimentConfig c;
    try {
      c.name = j.value("name", c.name);
      const Json& d = j.at("data");
      auto path = [&](const char* key) -> std::string {
        if (!d.contains(key)) return {};
        std::filesystem::path p = d.at(key).get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        return p.string();
      };
      c.data.train = path("train");
      c.data.dev = path("dev");
      c.data.test = path("test");
      c.data.definitions = path("definitions");
      c.data.lexicon = path("lexicon");
      c.data.truth = path("truth");
      const std::string fmt = d.value("format", std::string("native"));
      if (fmt != "native" && fmt != "cic") throw Error(ErrorCode::kConfig, "data.format must be native or cic");
      c.data.format = fmt == "cic" ? DatasetFormat::kCic : DatasetFormat::kNative;
      if (j.contains("transforms")) c.transforms = j.at("transforms").get<std::vector<Json>>();
      if (j.contains("split")) c.dev_fraction = j.at("split").value("dev_fraction", c.dev_fraction);
      if (j.contains("model")) c.model = ModelConfig::from_json(j.at("model"));
      c.unfrozen = j.value("unfrozen", false);
      if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kConfig, std::string("experiment config: ") + e.what());
    }
    if (c.data.train.empty() || c.data.dev.empty() || c.data.test.empty()) {
      throw Error(ErrorCode::kConfig, "experiment config needs data.train, data.dev and data.test");
    }
    c.validate();
    return c;
  }
};

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
  return ExperimentConfig::from_json(j, std::filesystem::path(path).parent_path());
}

struct ExperimentInputs {
  Dataset train;
  Dataset dev;
  Dataset test;
  std::vector<LabelDefinition> definitions;
  std::shared_ptr<const Lexicon> lexicon;
  std::optional<LabelMap> truth;
};

inline ExperimentInputs load_inputs(const DataPaths& paths) {
  ExperimentInputs in;
  LoadOptions opts;
  opts.format = paths.format;
  if (!paths.definitions.empty()) {
    in.definitions = load_definitions(paths.definitions);
    opts.extra_labels = definition_labels(in.definitions);
  }
  in.train = load_dataset(paths.train, SplitTag::kTrain, opts);
  in.dev = load_dataset(paths.dev, SplitTag::kDev, opts);
  in.test = load_dataset(paths.test, SplitTag::kTestPublic, opts);
  if (!paths.lexicon.empty()) in.lexicon = std::make_shared<const Lexicon>(load_lexicon(paths.lexicon));
  if (!paths.truth.empty()) in.truth = load_label_map(paths.truth);
  return in;
}

// 16 hex digits of FNV-1a over the bytes.
inline std::string hex_digest(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

inline std::string dataset_fingerprint(const Dataset& data) { return hex_digest(dataset_to_string(data)); }

// Canonical form: sorted keys, no name, no paths; the input data enter
// through their content digests instead.
inline std::string config_fingerprint(const ExperimentConfig& cfg, const ExperimentInputs& in) {
  nlohmann::json canon = nlohmann::json::parse(cfg.to_json().dump());
  canon.erase("name");
  canon.erase("data");
  canon["inputs"] = {{"train", dataset_fingerprint(in.train)},
                     {"dev", dataset_fingerprint(in.dev)},
                     {"test", dataset_fingerprint(in.test)}};
  return hex_digest(canon.dump());
}

// Test ids and texts must not occur in train or dev.
inline void check_firewall(const ExperimentInputs& in) {
  std::unordered_set<std::string> ids, texts;
  for (const Dataset* d : {&in.train, &in.dev}) {
    for (const Sample& s : d->samples()) {
      ids.insert(s.id);
      texts.insert(s.text);
    }
  }
  for (const Sample& s : in.test.samples()) {
    if (ids.count(s.id)) throw Error(ErrorCode::kFirewall, "test id '" + s.id + "' also occurs in train/dev");
    if (texts.count(s.text)) {
      throw Error(ErrorCode::kFirewall, "text of test sample '" + s.id + "' also occurs in train/dev");
    }
  }
}

// Seed handed to transform number `stage` (0-based) of a run.
inline std::uint64_t stage_seed(std::uint64_t run_seed, std::size_t stage) {
  return derive_seed(derive_seed(run_seed, "stage"), static_cast<std::uint64_t>(stage));
}

inline std::vector<std::uint64_t> seed_list(std::uint64_t base, int count) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < count; ++i) out.push_back(derive_seed(base, static_cast<std::uint64_t>(i)));
  return out;
}

// What a transform sees: the working set plus side inputs. The test set is
// deliberately absent.
struct TransformContext {
  const std::vector<LabelDefinition>* definitions = nullptr;
  std::shared_ptr<const Lexicon> lexicon;
  const LabelMap* truth = nullptr;
  ModelConfig model;
  double dev_fraction = 1.0 / 6.0;
  std::uint64_t seed = 0;
};

struct TransformOutcome {
  Dataset data;
  Json notes = Json::object();
};

inline AugmentParams augment_params_from(const Json& t, const TransformContext& ctx) {
  AugmentParams p;
  p.n_aug = t.value("n_aug", p.n_aug);
  p.p_syn = t.value("p_syn", p.p_syn);
  p.n_insert = t.value("n_insert", p.n_insert);
  p.p_delete = t.value("p_delete", p.p_delete);
  p.enable_swap = t.value("swap", p.enable_swap);
  p.n_swap = t.value("n_swap", p.n_swap);
  p.lexicon = ctx.lexicon;
  p.seed = ctx.seed;
  p.validate();
  return p;
}

inline TransformOutcome apply_transform(const Dataset& data, const Json& t, const TransformContext& ctx) {
  const std::string type = t.at("type").get<std::string>();
  TransformOutcome out;
  ModelConfig mcfg = ctx.model;
  mcfg.seed = ctx.seed;

  if (type == "delete-top") {
    const int n = t.value("n", 100);
    if (n < 0) throw Error(ErrorCode::kRange, "n must be >= 0");
    const CrossValResult cv = crossval_probs(data, t.value("folds", 5), mcfg, seed_list(ctx.seed, t.value("seeds", 1)));
    out.data = delete_top(data, rank_suspicious(cv.records), static_cast<std::size_t>(n));
    out.notes["deleted"] = n;
  } else if (type == "ensemble-correct") {
    const CorrectionResult r = ensemble_correct(data, t.value("folds", 5), mcfg, seed_list(ctx.seed, t.value("seeds", 3)),
                                                t.value("min_conf", 0.9));
    out.data = r.data;
    out.notes["corrected"] = r.log.size();
  } else if (type == "bootstrap-correct") {
    BootstrapConfig b;
    const Json threshold = t.value("threshold", Json(b.forget_threshold));
    b.forget_threshold = threshold.is_null() ? kNoThreshold : threshold.get<int>();
    b.max_iters = t.value("iters", b.max_iters);
    b.policy = parse_bootstrap_policy(t.value("policy", std::string("correct")));
    b.stop_on_no_gain = t.value("stop_on_no_gain", false);
    b.dev_fraction = t.value("dev_fraction", ctx.dev_fraction);
    b.seed = ctx.seed;
    const BootstrapResult r = bootstrap_correct(data, mcfg, b);
    out.data = r.data;
    out.notes["corrected"] = r.log.size();
    out.notes["deleted"] = r.deleted.size();
    out.notes["iterations"] = r.reports.size();
  } else if (type == "eda-augment") {
    const AugmentParams p = augment_params_from(t, ctx);
    out.data = eda_augment_dataset(data, p);
    out.notes["added"] = out.data.size() - data.size();
  } else if (type == "definition-augment") {
    if (!ctx.definitions || ctx.definitions->empty()) {
      throw Error(ErrorCode::kConfig, "definition-augment needs data.definitions");
    }
    AugmentParams p = augment_params_from(t, ctx);
    out.data = definition_augment(data, *ctx.definitions, t.value("n", 1), p);
    out.notes["added"] = out.data.size() - data.size();
  } else if (type == "annotate-simulated") {
    if (!ctx.truth) throw Error(ErrorCode::kOracleGap, "annotate-simulated needs data.truth");
    const CrossValResult cv = crossval_probs(data, t.value("folds", 5), mcfg, seed_list(ctx.seed, t.value("seeds", 1)));
    const auto scores = rank_suspicious(cv.records);
    const auto strategy = parse_selection_strategy(t.value("strategy", std::string("selective")));
    const auto tasks = select_for_annotation(data, scores, cv, t.value("budget", std::size_t{0}), strategy, ctx.seed);
    AnnotatorProfile prof;
    prof.accuracy = t.value("accuracy", prof.accuracy);
    prof.confusable = t.value("confusable", false);
    prof.seed = derive_seed(ctx.seed, "annotator");
    const CorrectionResult r = apply_corrections(data, simulate_annotator(tasks, *ctx.truth, data.labels(), prof));
    out.data = r.data;
    out.notes["annotated"] = tasks.size();
    out.notes["changed"] = r.log.size();
  } else {
    throw Error(ErrorCode::kConfig, "unknown transform type '" + type + "'");
  }
  return out;
}

// Train on a stratified re-split of `working` and score the test set.
inline ExperimentReport train_and_evaluate(const Dataset& working, const Dataset& test, const ModelConfig& model,
                                           double dev_fraction, std::uint64_t seed) {
  auto [train_part, dev_part] = stratified_split(working, {dev_fraction, seed});
  ModelConfig mcfg = model;
  mcfg.seed = seed;
  const TrainResult tr = train(train_part, mcfg);
  ExperimentReport r = evaluate_predictions(gold_labels(test), predict(tr.model, test), test.labels());
  r.seed = seed;
  const ExperimentReport dev_r =
      dev_part.size() ? evaluate_predictions(gold_labels(dev_part), predict(tr.model, dev_part), working.labels())
                      : ExperimentReport{};
  r.extra["working_size"] = working.size();
  r.extra["train_size"] = train_part.size();
  r.extra["dev_size"] = dev_part.size();
  r.extra["dev_macro_f1"] = dev_r.macro_f1;
  return r;
}

// One seed of an experiment. Callers are expected to have run
// check_firewall; run_experiment does.
inline ExperimentReport run_once(const ExperimentInputs& in, const ExperimentConfig& cfg, std::uint64_t seed,
                                 const std::string& fingerprint) {
  Dataset data = merge(in.train, in.dev);
  const std::size_t merged_size = data.size();
  TransformContext ctx;
  ctx.definitions = &in.definitions;
  ctx.lexicon = in.lexicon;
  ctx.truth = in.truth ? &*in.truth : nullptr;
  ctx.model = cfg.model;
  ctx.dev_fraction = cfg.dev_fraction;
  Json notes = Json::array();
  for (std::size_t i = 0; i < cfg.transforms.size(); ++i) {
    const std::string type = cfg.transforms[i].at("type").get<std::string>();
    ctx.seed = stage_seed(seed, i);
    try {
      TransformOutcome o = apply_transform(data, cfg.transforms[i], ctx);
      data = std::move(o.data);
      notes.push_back(std::move(o.notes));
    } catch (const Error& e) {
      throw Error(e.code(), "stage " + std::to_string(i + 1) + " (" + type + "): " + e.message());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kConfig, "stage " + std::to_string(i + 1) + " (" + type + "): " + e.what());
    }
  }
  ExperimentReport r = train_and_evaluate(data, in.test, cfg.model, cfg.dev_fraction, seed);
  r.config_fingerprint = fingerprint;
  r.transform_chain = cfg.transforms;
  Json extra;
  extra["name"] = cfg.name;
  extra["merged_size"] = merged_size;
  for (const auto& [k, v] : r.extra.items()) extra[k] = v;
  extra["split_seed"] = seed;
  extra["transform_notes"] = std::move(notes);
  extra["test_fingerprint"] = dataset_fingerprint(in.test);
  r.extra = std::move(extra);
  return r;
}

// One report per seed, in seed order. Seeds run in parallel.
inline std::vector<ExperimentReport> run_experiment(const ExperimentInputs& in, const ExperimentConfig& cfg) {
  cfg.validate();
  check_firewall(in);
  const std::string fp = config_fingerprint(cfg, in);
  std::vector<ExperimentReport> reports(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), [&](std::size_t i) { reports[i] = run_once(in, cfg, cfg.seeds[i], fp); });
  return reports;
}

inline std::vector<ExperimentReport> run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(load_inputs(cfg.data), cfg);
}

inline Json reports_to_json(const std::vector<ExperimentReport>& reports) {
  Json arr = Json::array();
  for (const ExperimentReport& r : reports) arr.push_back(r.to_json());
  return arr;
}

inline std::vector<ExperimentReport> reports_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::kParse, "report file must hold a JSON array");
  std::vector<ExperimentReport> out;
  for (const Json& r : j) out.push_back(ExperimentReport::from_json(r));
  return out;
}

inline std::vector<ExperimentReport> load_reports(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  try {
    return reports_from_json(Json::parse(in));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
}

struct ComparisonRow {
  std::string name;
  std::string fingerprint;
  std::size_t runs = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single run
  double delta = 0.0;  // mean minus the baseline row's mean
};

struct ComparisonTable {
  std::string baseline;
  std::vector<ComparisonRow> rows;

  Json to_json() const {
    Json j;
    j["baseline"] = baseline;
    Json rs = Json::array();
    for (const ComparisonRow& r : rows) {
      rs.push_back({{"name", r.name}, {"config_fingerprint", r.fingerprint}, {"runs", r.runs},
                    {"mean_macro_f1", r.mean}, {"sd_macro_f1", r.sd}, {"delta", r.delta}});
    }
    j["rows"] = std::move(rs);
    return j;
  }

  std::string to_text() const {
    std::size_t width = 8;
    for (const ComparisonRow& r : rows) width = std::max(width, r.name.size());
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s  %4s  %8s  %8s  %8s\n", static_cast<int>(width), "config", "runs", "mean",
                  "sd", "delta");
    out += buf;
    for (const ComparisonRow& r : rows) {
      std::snprintf(buf, sizeof buf, "%-*s  %4zu  %8.4f  %8.4f  %+8.4f\n", static_cast<int>(width), r.name.c_str(),
                    r.runs, r.mean, r.sd, r.delta);
      out += buf;
    }
    return out;
  }
};

// `configs` holds one report list per configuration; row names come from
// the reports' "name" field. The baseline defaults to the first row.
inline ComparisonTable compare(const std::vector<std::vector<ExperimentReport>>& configs,
                               const std::string& baseline = {}) {
  if (configs.empty()) throw Error(ErrorCode::kRange, "nothing to compare");
  std::optional<std::string> test_fp;
  ComparisonTable table;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    const auto& reports = configs[c];
    if (reports.empty()) throw Error(ErrorCode::kRange, "configuration " + std::to_string(c + 1) + " has no reports");
    ComparisonRow row;
    row.name = reports.front().extra.value("name", "config-" + std::to_string(c + 1));
    row.fingerprint = reports.front().config_fingerprint;
    row.runs = reports.size();
    for (const ExperimentReport& r : reports) {
      if (!r.extra.contains("test_fingerprint")) {
        throw Error(ErrorCode::kComparability, "report of '" + row.name + "' carries no test fingerprint");
      }
      const std::string fp = r.extra["test_fingerprint"].get<std::string>();
      if (!test_fp) test_fp = fp;
      if (fp != *test_fp) {
        throw Error(ErrorCode::kComparability, "'" + row.name + "' was scored on a different test set");
      }
      row.mean += r.macro_f1;
    }
    row.mean /= static_cast<double>(row.runs);
    if (row.runs > 1) {
      double ss = 0.0;
      for (const ExperimentReport& r : reports) ss += (r.macro_f1 - row.mean) * (r.macro_f1 - row.mean);
      row.sd = std::sqrt(ss / static_cast<double>(row.runs - 1));
    }
    table.rows.push_back(std::move(row));
  }
  table.baseline = baseline.empty() ? table.rows.front().name : baseline;
  const auto base = std::find_if(table.rows.begin(), table.rows.end(),
                                 [&](const ComparisonRow& r) { return r.name == table.baseline; });
  if (base == table.rows.end()) throw Error(ErrorCode::kReference, "no configuration named '" + table.baseline + "'");
  const double base_mean = base->mean;
  for (ComparisonRow& r : table.rows) r.delta = r.mean - base_mean;
  return table;
}

struct NamedTransform {
  std::string name;
  Json transform;
};

// All 2^k subsets of `strategies`, by subset size and then by position;
// each chain keeps the listed order. The empty subset keeps base.name.
inline std::vector<ExperimentConfig> make_combination_grid(const ExperimentConfig& base,
                                                           const std::vector<NamedTransform>& strategies) {
  const std::size_t k = strategies.size();
  if (k > 16) throw Error(ErrorCode::kRange, "too many strategies for a full grid");
  std::vector<unsigned> masks;
  for (unsigned m = 0; m < (1u << k); ++m) masks.push_back(m);
  std::stable_sort(masks.begin(), masks.end(),
                   [](unsigned a, unsigned b) { return std::popcount(a) < std::popcount(b); });
  std::vector<ExperimentConfig> out;
  for (unsigned m : masks) {
    ExperimentConfig c = base;
    std::string name;
    for (std::size_t i = 0; i < k; ++i) {
      if (!(m & (1u << i))) continue;
      c.transforms.push_back(strategies[i].transform);
      name += (name.empty() ? "" : "+") + strategies[i].name;
    }
    if (!name.empty()) c.name = name;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace curate
