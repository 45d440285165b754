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

// Command-line front end. run_cli is the whole program; tools/curate.cpp
// only forwards argv.
//
// Exit codes: 0 success, 1 operational error, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "curate/annotate.hpp"
#include "curate/augment.hpp"
#include "curate/corpus.hpp"
#include "curate/detect.hpp"
#include "curate/dynamics.hpp"
#include "curate/error.hpp"
#include "curate/metrics.hpp"
#include "curate/model.hpp"
#include "curate/noise.hpp"
#include "curate/pipeline.hpp"
#include "curate/server.hpp"
#include "curate/synth.hpp"

namespace curate {

inline constexpr const char* kSeedEnv = "CURATE_SEED";

namespace cli {

// Writes to `path`, or to `out` when path is empty or "-".
inline void emit(const std::string& path, const std::string& body, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << body;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  f << body;
  if (!f.flush()) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct DataArgs {
  std::string path;
  std::string definitions;
  bool cic = false;

  Dataset load(SplitTag tag = SplitTag::kTrain) const {
    LoadOptions opts;
    opts.format = cic ? DatasetFormat::kCic : DatasetFormat::kNative;
    if (!definitions.empty()) opts.extra_labels = definition_labels(load_definitions(definitions));
    return load_dataset(path, tag, opts);
  }
};

inline void add_data(CLI::App* cmd, DataArgs& d, bool with_defs = true) {
  cmd->add_option("--data", d.path, "Dataset file (one JSON object per line)")->required()->check(CLI::ExistingFile);
  cmd->add_flag("--cic", d.cic, "Read the CIC public layout (sentence/label/id)");
  if (with_defs) {
    cmd->add_option("--label-defs", d.definitions, "Definitions file; extends the declared label set")
        ->check(CLI::ExistingFile);
  }
}

inline void add_seed(CLI::App* cmd, std::uint64_t& seed) {
  cmd->add_option("--seed", seed, "Random seed")->envname(kSeedEnv)->capture_default_str();
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw Error(ErrorCode::kConfig, "--seeds expects a comma-separated list of integers");
    }
    out.push_back(std::stoull(item));
  }
  if (out.empty()) throw Error(ErrorCode::kConfig, "--seeds is empty");
  return out;
}

inline std::string log_lines(const CorrectionLog& log) {
  std::ostringstream ss;
  write_correction_log(log, ss);
  return ss.str();
}

inline std::string report_text(const ExperimentReport& r) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "macro_f1  %.6f\naccuracy  %.6f\n", r.macro_f1, r.accuracy);
  out += buf;
  for (const auto& [l, f] : r.per_class_f1) {
    std::snprintf(buf, sizeof buf, "  label %4d  f1 %.6f\n", to_int(l), f);
    out += buf;
  }
  return out;
}

}  // namespace cli

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dataset curation for text classification: noise injection, detection, correction, "
               "augmentation and annotation."};
  app.name("curate");
  app.require_subcommand(1);
  app.fallthrough(false);

  std::uint64_t seed = 0;
  bool pretty = false;
  std::function<void()> action;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with ground truth");
  SynthSpec sspec;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--labels", sspec.num_labels, "Number of labels")->capture_default_str();
  synth->add_option("--per-label", sspec.samples_per_label, "Train samples per label")->capture_default_str();
  synth->add_option("--dev-per-label", sspec.dev_per_label, "Dev samples per label")->capture_default_str();
  synth->add_option("--test-per-label", sspec.test_per_label, "Test samples per label")->capture_default_str();
  synth->add_option("--disjointness", sspec.disjointness, "Share of label-specific tokens, in [0,1]")
      ->capture_default_str();
  cli::add_seed(synth, seed);
  synth->callback([&] {
    action = [&] {
      sspec.seed = seed;
      const SynthCorpus c = synth_corpus(sspec);
      std::filesystem::create_directories(synth_out);
      const std::string d = synth_out + "/";
      save_dataset(c.train, d + "train.jsonl");
      save_dataset(c.dev, d + "dev.jsonl");
      save_dataset(c.test, d + "test.jsonl");
      save_definitions(c.definitions, d + "definitions.jsonl");
      save_lexicon(c.lexicon, d + "lexicon.txt");
      save_label_map(c.clean_labels, d + "clean_labels.jsonl");
      err << "wrote " << c.train.size() << "/" << c.dev.size() << "/" << c.test.size()
          << " train/dev/test samples to " << synth_out << "\n";
    };
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "Train the frozen classifier");
  cli::DataArgs train_data;
  std::string model_out, trace_out;
  cli::add_data(train_cmd, train_data);
  train_cmd->add_option("--model-out", model_out, "Model file to write")->required();
  train_cmd->add_option("--trace-out", trace_out, "Write per-epoch predictions and losses (JSON)");
  cli::add_seed(train_cmd, seed);
  train_cmd->callback([&] {
    action = [&] {
      ModelConfig cfg;
      cfg.seed = seed;
      const TrainResult tr = train(train_data.load(), cfg);
      save_model(tr.model, model_out);
      if (!trace_out.empty()) {
        Json j;
        j["epoch_loss"] = tr.trace.epoch_loss;
        Json rows = Json::array();
        for (std::size_t i = 0; i < tr.trace.ids.size(); ++i) {
          std::vector<int> preds;
          for (LabelId l : tr.trace.predicted[i]) preds.push_back(to_int(l));
          rows.push_back({{"id", tr.trace.ids[i]}, {"given", to_int(tr.trace.given[i])}, {"predicted", preds}});
        }
        j["samples"] = std::move(rows);
        cli::emit(trace_out, j.dump() + "\n", out);
      }
    };
  });

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a model on a labeled dataset");
  cli::DataArgs eval_data;
  std::string model_in, eval_out;
  cli::add_data(eval_cmd, eval_data);
  eval_cmd->add_option("--model", model_in, "Model file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--out", eval_out, "Report file (default stdout)");
  eval_cmd->add_flag("--pretty", pretty, "Human-readable table");
  eval_cmd->callback([&] {
    action = [&] {
      const TrainedModel m = load_model(model_in);
      LoadOptions opts;
      opts.format = eval_data.cic ? DatasetFormat::kCic : DatasetFormat::kNative;
      opts.extra_labels = m.labels();
      if (!eval_data.definitions.empty()) {
        for (LabelId l : definition_labels(load_definitions(eval_data.definitions))) opts.extra_labels.push_back(l);
      }
      const Dataset d = load_dataset(eval_data.path, SplitTag::kTestPublic, opts);
      std::vector<LabelId> labels = d.labels();
      const ExperimentReport r = evaluate_predictions(gold_labels(d), predict(m, d), labels);
      cli::emit(eval_out, pretty ? cli::report_text(r) : r.to_json().dump() + "\n", out);
    };
  });

  // inject-noise
  auto* noise_cmd = app.add_subcommand("inject-noise", "Flip a fixed share of labels");
  cli::DataArgs noise_data;
  NoiseSpec nspec;
  std::string noise_strategy = "mixed", noise_model, noise_out, noise_log;
  cli::add_data(noise_cmd, noise_data);
  noise_cmd->add_option("--rate", nspec.rate, "Share of samples to flip")->capture_default_str();
  noise_cmd->add_option("--strategy", noise_strategy, "random_flip, hard_flip or mixed")->capture_default_str();
  noise_cmd->add_option("--top-k", nspec.top_k, "Hard-flip candidate count")->capture_default_str();
  noise_cmd->add_option("--model", noise_model,
                        "Model for hard flips (default: one trained on --data with --seed)")
      ->check(CLI::ExistingFile);
  noise_cmd->add_option("--out", noise_out, "Noisy dataset (default stdout)");
  noise_cmd->add_option("--log", noise_log, "Flip log file");
  cli::add_seed(noise_cmd, seed);
  noise_cmd->callback([&] {
    action = [&] {
      nspec.strategy = parse_flip_strategy(noise_strategy);
      nspec.seed = seed;
      const Dataset d = noise_data.load();
      std::optional<TrainedModel> m;
      if (nspec.strategy != FlipStrategy::kRandom) {
        if (!noise_model.empty()) {
          m = load_model(noise_model);
        } else {
          ModelConfig cfg;
          cfg.seed = seed;
          m = train(d, cfg).model;
        }
      }
      const NoiseResult r = inject_noise(d, nspec, m ? &*m : nullptr);
      for (const std::string& w : r.warnings) err << "warning: " << w << "\n";
      cli::emit(noise_out, dataset_to_string(r.data), out);
      if (!noise_log.empty()) save_flip_log(r.log, noise_log);
    };
  });

  // score
  auto* score_cmd = app.add_subcommand("score", "Out-of-fold entropy score per sample");
  cli::DataArgs score_data;
  int folds = 5;
  std::string seeds_arg, score_out;
  cli::add_data(score_cmd, score_data);
  score_cmd->add_option("--folds", folds, "Cross-validation folds")->capture_default_str();
  score_cmd->add_option("--seeds", seeds_arg, "Comma-separated seeds to average (default: --seed)");
  score_cmd->add_option("--out", score_out, "Scores file (default stdout)");
  cli::add_seed(score_cmd, seed);
  score_cmd->callback([&] {
    action = [&] {
      ModelConfig cfg;
      cfg.seed = seed;
      const auto seeds = seeds_arg.empty() ? std::vector<std::uint64_t>{seed} : cli::parse_seed_list(seeds_arg);
      const CrossValResult cv = crossval_probs(score_data.load(), folds, cfg, seeds);
      for (const std::string& w : cv.warnings) err << "warning: " << w << "\n";
      std::ostringstream ss;
      write_scores(rank_suspicious(cv.records), ss);
      cli::emit(score_out, ss.str(), out);
    };
  });

  // delete
  auto* delete_cmd = app.add_subcommand("delete", "Drop the highest-entropy samples");
  cli::DataArgs delete_data;
  std::size_t delete_num = 100;
  std::string scores_in, delete_out;
  cli::add_data(delete_cmd, delete_data);
  delete_cmd->add_option("--delete-num", delete_num, "Samples to drop")->capture_default_str();
  delete_cmd->add_option("--scores", scores_in, "Scores from `score` (computed when absent)")->check(CLI::ExistingFile);
  delete_cmd->add_option("--folds", folds, "Cross-validation folds when scoring")->capture_default_str();
  delete_cmd->add_option("--out", delete_out, "Output dataset (default stdout)");
  cli::add_seed(delete_cmd, seed);
  delete_cmd->callback([&] {
    action = [&] {
      const Dataset d = delete_data.load();
      std::vector<SuspicionScore> scores;
      if (!scores_in.empty()) {
        std::ifstream in(scores_in, std::ios::binary);
        scores = read_scores(in, scores_in);
      } else {
        ModelConfig cfg;
        cfg.seed = seed;
        scores = rank_suspicious(crossval_probs(d, folds, cfg, {seed}).records);
      }
      cli::emit(delete_out, dataset_to_string(delete_top(d, scores, delete_num)), out);
    };
  });

  // correct-ensemble
  auto* ens_cmd = app.add_subcommand("correct-ensemble", "Relabel on unanimous confident out-of-fold votes");
  cli::DataArgs ens_data;
  double min_conf = 0.9;
  std::string ens_out, ens_log;
  cli::add_data(ens_cmd, ens_data);
  ens_cmd->add_option("--folds", folds, "Cross-validation folds")->capture_default_str();
  ens_cmd->add_option("--seeds", seeds_arg, "Comma-separated seeds (default: 3 derived from --seed)");
  ens_cmd->add_option("--min-conf", min_conf, "Minimum per-seed confidence")->capture_default_str();
  ens_cmd->add_option("--out", ens_out, "Output dataset (default stdout)");
  ens_cmd->add_option("--log", ens_log, "Correction log file");
  cli::add_seed(ens_cmd, seed);
  ens_cmd->callback([&] {
    action = [&] {
      ModelConfig cfg;
      cfg.seed = seed;
      const auto seeds = seeds_arg.empty() ? seed_list(seed, 3) : cli::parse_seed_list(seeds_arg);
      const CorrectionResult r = ensemble_correct(ens_data.load(), folds, cfg, seeds, min_conf);
      cli::emit(ens_out, dataset_to_string(r.data), out);
      if (!ens_log.empty()) cli::emit(ens_log, cli::log_lines(r.log), out);
    };
  });

  // correct-forgetting
  auto* fg_cmd = app.add_subcommand("correct-forgetting", "Bootstrapped correction from forgetting events");
  cli::DataArgs fg_data;
  BootstrapConfig bcfg;
  std::string policy = "correct", fg_out, fg_log, fg_reports;
  cli::add_data(fg_cmd, fg_data);
  fg_cmd->add_option("--threshold", bcfg.forget_threshold, "Forget count that flags a sample")->capture_default_str();
  fg_cmd->add_option("--iters", bcfg.max_iters, "Maximum iterations")->capture_default_str();
  fg_cmd->add_option("--policy", policy, "correct, delete or hybrid")->capture_default_str();
  fg_cmd->add_flag("--stop-on-no-gain", bcfg.stop_on_no_gain, "Stop when held-out dev macro-F1 stops improving");
  fg_cmd->add_option("--out", fg_out, "Output dataset (default stdout)");
  fg_cmd->add_option("--log", fg_log, "Correction log file");
  fg_cmd->add_option("--reports", fg_reports, "Per-iteration reports and forgetting histograms (JSON)");
  cli::add_seed(fg_cmd, seed);
  fg_cmd->callback([&] {
    action = [&] {
      bcfg.policy = parse_bootstrap_policy(policy);
      bcfg.seed = seed;
      ModelConfig cfg;
      cfg.seed = seed;
      const BootstrapResult r = bootstrap_correct(fg_data.load(), cfg, bcfg);
      cli::emit(fg_out, dataset_to_string(r.data), out);
      if (!fg_log.empty()) cli::emit(fg_log, cli::log_lines(r.log), out);
      if (!fg_reports.empty()) {
        Json j;
        j["iterations"] = reports_to_json(r.reports);
        Json hs = Json::array();
        for (const auto& h : r.histograms) {
          Json row = Json::array();
          for (const auto& [count, n] : h) row.push_back({{"forget_count", count}, {"samples", n}});
          hs.push_back(std::move(row));
        }
        j["histograms"] = std::move(hs);
        j["deleted"] = r.deleted;
        j["converged"] = r.converged;
        cli::emit(fg_reports, j.dump() + "\n", out);
      }
    };
  });

  // augment
  auto* aug_cmd = app.add_subcommand("augment", "EDA augmentation");
  cli::DataArgs aug_data;
  AugmentParams aparams;
  std::string lexicon_path, aug_out;
  cli::add_data(aug_cmd, aug_data);
  aug_cmd->add_option("--lexicon", lexicon_path, "Synonym lexicon")->check(CLI::ExistingFile);
  aug_cmd->add_option("--n-aug", aparams.n_aug, "Augmented copies per sample")->capture_default_str();
  aug_cmd->add_option("--p-syn", aparams.p_syn, "Share of tokens replaced by synonyms")->capture_default_str();
  aug_cmd->add_option("--p-delete", aparams.p_delete, "Deletion probability per token")->capture_default_str();
  aug_cmd->add_flag("--swap", aparams.enable_swap, "Also use random swap");
  aug_cmd->add_option("--out", aug_out, "Output dataset (default stdout)");
  cli::add_seed(aug_cmd, seed);
  aug_cmd->callback([&] {
    action = [&] {
      aparams.seed = seed;
      if (!lexicon_path.empty()) aparams.lexicon = std::make_shared<const Lexicon>(load_lexicon(lexicon_path));
      cli::emit(aug_out, dataset_to_string(eda_augment_dataset(aug_data.load(), aparams)), out);
    };
  });

  // augment-defs
  auto* defs_cmd = app.add_subcommand("augment-defs", "Add label definitions as training samples");
  cli::DataArgs defs_data;
  std::string defs_path, defs_out;
  int def_aug_num = 1;
  cli::add_data(defs_cmd, defs_data, false);
  defs_cmd->add_option("--label-defs", defs_path, "Definitions file")->required()->check(CLI::ExistingFile);
  defs_cmd->add_option("--def-aug-num", def_aug_num, "Samples per label (raw definition plus variants)")
      ->capture_default_str();
  defs_cmd->add_option("--lexicon", lexicon_path, "Synonym lexicon for the variants")->check(CLI::ExistingFile);
  defs_cmd->add_option("--out", defs_out, "Output dataset (default stdout)");
  cli::add_seed(defs_cmd, seed);
  defs_cmd->callback([&] {
    action = [&] {
      defs_data.definitions = defs_path;
      AugmentParams p;
      p.seed = seed;
      if (!lexicon_path.empty()) p.lexicon = std::make_shared<const Lexicon>(load_lexicon(lexicon_path));
      const Dataset d = definition_augment(defs_data.load(), load_definitions(defs_path), def_aug_num, p);
      cli::emit(defs_out, dataset_to_string(d), out);
    };
  });

  // annotate-sim
  auto* ann_cmd = app.add_subcommand("annotate-sim", "Simulated annotation of selected samples");
  cli::DataArgs ann_data;
  std::size_t budget = 0;
  std::string strategy = "selective", truth_path, flip_log_path, ann_out, ann_corrections, ann_log;
  AnnotatorProfile profile;
  cli::add_data(ann_cmd, ann_data);
  ann_cmd->add_option("--budget", budget, "Samples to annotate")->required();
  ann_cmd->add_option("--strategy", strategy, "selective or random")->capture_default_str();
  ann_cmd->add_option("--truth", truth_path, "Clean labels (id/label lines)")->check(CLI::ExistingFile);
  ann_cmd->add_option("--flip-log", flip_log_path, "Flip log; unflipped samples keep their label as truth")
      ->check(CLI::ExistingFile);
  ann_cmd->add_option("--accuracy", profile.accuracy, "Annotator accuracy")->capture_default_str();
  ann_cmd->add_flag("--confusable", profile.confusable, "Err among the suggested labels");
  ann_cmd->add_option("--folds", folds, "Cross-validation folds for scoring")->capture_default_str();
  ann_cmd->add_option("--out", ann_out, "Corrected dataset (default stdout)");
  ann_cmd->add_option("--corrections", ann_corrections, "Corrections file");
  ann_cmd->add_option("--log", ann_log, "Correction log file");
  cli::add_seed(ann_cmd, seed);
  ann_cmd->callback([&] {
    action = [&] {
      if (truth_path.empty() == flip_log_path.empty()) {
        throw Error(ErrorCode::kOracleGap, "give exactly one of --truth or --flip-log");
      }
      const Dataset d = ann_data.load();
      const LabelMap truth =
          truth_path.empty() ? truth_from_flip_log(d, load_flip_log(flip_log_path)) : load_label_map(truth_path);
      ModelConfig cfg;
      cfg.seed = seed;
      const CrossValResult cv = crossval_probs(d, folds, cfg, {seed});
      const auto tasks =
          select_for_annotation(d, rank_suspicious(cv.records), cv, budget, parse_selection_strategy(strategy), seed);
      profile.seed = derive_seed(seed, "annotator");
      const auto corrections = simulate_annotator(tasks, truth, d.labels(), profile);
      const CorrectionResult r = apply_corrections(d, corrections);
      cli::emit(ann_out, dataset_to_string(r.data), out);
      if (!ann_corrections.empty()) {
        std::ostringstream ss;
        write_corrections(corrections, ss);
        cli::emit(ann_corrections, ss.str(), out);
      }
      if (!ann_log.empty()) cli::emit(ann_log, cli::log_lines(r.log), out);
    };
  });

  // pipeline run | compare
  auto* pipe = app.add_subcommand("pipeline", "Run or compare experiments");
  pipe->require_subcommand(1);
  auto* pipe_run = pipe->add_subcommand("run", "Run an experiment config");
  std::string config_path, run_out;
  std::vector<std::uint64_t> seed_override;
  pipe_run->add_option("config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  pipe_run->add_option("--out", run_out, "Report file (default stdout)");
  pipe_run->add_option("--seed", seed_override, "Replace the config's seed list");
  pipe_run->add_flag("--pretty", pretty, "Human-readable summary");
  pipe_run->callback([&] {
    action = [&] {
      ExperimentConfig cfg = load_experiment_config(config_path);
      if (!seed_override.empty()) cfg.seeds = seed_override;
      const auto reports = run_experiment(cfg);
      cli::emit(run_out, pretty ? compare({reports}).to_text() : reports_to_json(reports).dump(2) + "\n", out);
    };
  });
  auto* pipe_cmp = pipe->add_subcommand("compare", "Tabulate report files against a baseline");
  std::vector<std::string> report_paths;
  std::string baseline, cmp_out;
  pipe_cmp->add_option("reports", report_paths, "Report files from `pipeline run`")->required()->check(CLI::ExistingFile);
  pipe_cmp->add_option("--baseline", baseline, "Baseline configuration name (default: first)");
  pipe_cmp->add_option("--out", cmp_out, "Output file (default stdout)");
  pipe_cmp->add_flag("--pretty", pretty, "Human-readable table");
  pipe_cmp->callback([&] {
    action = [&] {
      std::vector<std::vector<ExperimentReport>> configs;
      for (const std::string& p : report_paths) configs.push_back(load_reports(p));
      const ComparisonTable t = compare(configs, baseline);
      cli::emit(cmp_out, pretty ? t.to_text() : t.to_json().dump(2) + "\n", out);
    };
  });

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the annotation HTTP API");
  std::string host = "127.0.0.1", session_dir, static_dir, cors = "*";
  std::string train_path, dev_path, test_path, sdefs_path;
  int port = 8080;
  bool serve_cic = false;
  serve_cmd->add_option("--data", train_path, "Training set")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--dev", dev_path, "Dev set")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--test", test_path, "Public test set")->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--label-defs", sdefs_path, "Definitions file")->check(CLI::ExistingFile);
  serve_cmd->add_flag("--cic", serve_cic, "Read the CIC public layout");
  serve_cmd->add_option("--host", host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();
  serve_cmd->add_option("--session-dir", session_dir, "Directory for the correction journal and snapshots");
  serve_cmd->add_option("--static-dir", static_dir, "Serve UI assets from this directory")->check(CLI::ExistingDirectory);
  serve_cmd->add_option("--cors-origin", cors, "Allowed browser origin")->capture_default_str();
  serve_cmd->add_option("--folds", folds, "Cross-validation folds for scoring")->capture_default_str();
  cli::add_seed(serve_cmd, seed);
  serve_cmd->callback([&] {
    action = [&] {
      SessionOptions opts;
      opts.inputs = load_inputs({train_path, dev_path, test_path, sdefs_path, "", "",
                                 serve_cic ? DatasetFormat::kCic : DatasetFormat::kNative});
      opts.seed = seed;
      opts.folds = folds;
      opts.session_dir = session_dir;
      err << "scoring " << opts.inputs.train.size() + opts.inputs.dev.size() << " samples...\n";
      Session session(std::move(opts));
      ApiServer server(session, cors, static_dir);
      const int bound = server.bind(host, port);
      err << "listening on http://" << host << ":" << bound << "\n";
      server.serve();
    };
  });

  if (args.size() <= 1) {
    err << app.help();
    return 2;
  }
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  std::string stage;
  for (const CLI::App* sub = &app; !sub->get_subcommands().empty();) {
    sub = sub->get_subcommands().front();
    stage += (stage.empty() ? "" : " ") + sub->get_name();
  }
  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    err << "curate " << stage << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "curate " << stage << ": " << e.what() << "\n";
  }
  return 1;
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return run_cli(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace curate
