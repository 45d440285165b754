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

// The frozen evaluation classifier: hashed character n-gram features fed to a
// multinomial logistic regression trained by mini-batch SGD. Training records
// every sample's predicted label at the end of each epoch (EpochTrace) for the
// forgetting statistics.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "curate/corpus.hpp"
#include "curate/error.hpp"
#include "curate/rng.hpp"
#include "curate/utf8.hpp"

namespace curate {

struct ModelConfig {
  std::vector<int> ngram_orders{1, 2, 3};
  std::uint32_t hash_dim = 1u << 18;
  int epochs = 15;
  int batch_size = 64;
  double learning_rate = 0.2;
  double l2 = 1e-6;
  std::uint64_t seed = 0;
  int max_chars = 64;

  bool operator==(const ModelConfig&) const = default;

  void validate() const {
    if (epochs < 1) throw Error(ErrorCode::kConfig, "epochs must be >= 1");
    if (batch_size < 1) throw Error(ErrorCode::kConfig, "batch_size must be >= 1");
    if (hash_dim < (1u << 10) || !std::has_single_bit(hash_dim)) {
      throw Error(ErrorCode::kConfig, "hash_dim must be a power of two >= 1024");
    }
    if (ngram_orders.empty()) throw Error(ErrorCode::kConfig, "ngram_orders is empty");
    for (int n : ngram_orders) {
      if (n < 1) throw Error(ErrorCode::kConfig, "ngram order must be >= 1");
    }
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::kConfig, "learning_rate must be > 0");
    if (l2 < 0.0) throw Error(ErrorCode::kConfig, "l2 must be >= 0");
    if (max_chars < 1) throw Error(ErrorCode::kConfig, "max_chars must be >= 1");
  }

  // Equality of everything except the seed, which experiments vary.
  bool same_hyperparameters(const ModelConfig& o) const {
    ModelConfig a = *this;
    a.seed = o.seed;
    return a == o;
  }

  Json to_json() const {
    Json j;
    j["ngram_orders"] = ngram_orders;
    j["hash_dim"] = hash_dim;
    j["epochs"] = epochs;
    j["batch_size"] = batch_size;
    j["learning_rate"] = learning_rate;
    j["l2"] = l2;
    j["seed"] = seed;
    j["max_chars"] = max_chars;
    return j;
  }

  static ModelConfig from_json(const Json& j) {
    ModelConfig c;
    try {
      if (j.contains("ngram_orders")) c.ngram_orders = j["ngram_orders"].get<std::vector<int>>();
      if (j.contains("hash_dim")) c.hash_dim = j["hash_dim"].get<std::uint32_t>();
      if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
      if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
      if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
      if (j.contains("l2")) c.l2 = j["l2"].get<double>();
      if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
      if (j.contains("max_chars")) c.max_chars = j["max_chars"].get<int>();
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kConfig, std::string("model config: ") + e.what());
    }
    return c;
  }
};

// Sorted bucket indices with their values.
struct SparseVector {
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  std::size_t nnz() const { return index.size(); }
  bool operator==(const SparseVector&) const = default;
};

// Raw n-gram counts, text truncated to max_chars code points first.
inline SparseVector featurize_counts(std::string_view text, const ModelConfig& config) {
  std::vector<char32_t> cps = utf8::decode(text);
  if (cps.size() > static_cast<std::size_t>(config.max_chars)) cps.resize(config.max_chars);
  const std::uint32_t mask = config.hash_dim - 1;
  std::vector<std::uint32_t> buckets;
  for (int order : config.ngram_orders) {
    const auto n = static_cast<std::size_t>(order);
    if (cps.size() < n) continue;
    for (std::size_t i = 0; i + n <= cps.size(); ++i) {
      std::uint64_t h = fnv1a(std::string_view(reinterpret_cast<const char*>(&order), sizeof(order)));
      h = fnv1a(std::string_view(reinterpret_cast<const char*>(&cps[i]), n * sizeof(char32_t)), h);
      buckets.push_back(static_cast<std::uint32_t>(mix64(h)) & mask);
    }
  }
  std::sort(buckets.begin(), buckets.end());
  SparseVector v;
  for (std::size_t i = 0; i < buckets.size();) {
    std::size_t j = i;
    while (j < buckets.size() && buckets[j] == buckets[i]) ++j;
    v.index.push_back(buckets[i]);
    v.value.push_back(static_cast<double>(j - i));
    i = j;
  }
  return v;
}

// L2-normalized n-gram counts; empty text gives the zero vector.
inline SparseVector featurize(std::string_view text, const ModelConfig& config) {
  SparseVector v = featurize_counts(text, config);
  double norm = 0.0;
  for (double x : v.value) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v.value) x /= norm;
  }
  return v;
}

// Weights of a linear softmax layer, stored feature-major
// (stored[j * classes + c]) and scaled by `scale` so L2 shrinkage is O(1).
struct SoftmaxParams {
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::vector<double> stored;
  std::vector<double> bias;
  double scale = 1.0;

  SoftmaxParams() = default;
  SoftmaxParams(std::size_t num_classes, std::size_t feature_dim)
      : classes(num_classes), dim(feature_dim), stored(num_classes * feature_dim, 0.0),
        bias(num_classes, 0.0) {}

  double weight(std::size_t c, std::size_t j) const { return scale * stored[j * classes + c]; }
  void set_weight(std::size_t c, std::size_t j, double w) { stored[j * classes + c] = w / scale; }

  void fold_scale() {
    if (scale == 1.0) return;
    for (double& w : stored) w *= scale;
    scale = 1.0;
  }

  std::vector<double> logits(const SparseVector& x) const {
    std::vector<double> z(bias);
    std::vector<double> acc(classes, 0.0);
    for (std::size_t k = 0; k < x.nnz(); ++k) {
      const double* row = &stored[static_cast<std::size_t>(x.index[k]) * classes];
      const double v = x.value[k];
      for (std::size_t c = 0; c < classes; ++c) acc[c] += row[c] * v;
    }
    for (std::size_t c = 0; c < classes; ++c) z[c] += scale * acc[c];
    return z;
  }

  std::vector<double> probs(const SparseVector& x) const {
    std::vector<double> z = logits(x);
    const double m = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double& v : z) {
      v = std::exp(v - m);
      total += v;
    }
    for (double& v : z) v /= total;
    return z;
  }
};

// Mini-batch objective:  sum_i CE(x_i, y_i) + (B * l2 / 2) * ||W||^2,
// with B the batch size. Bias is not regularized.
inline double batch_objective(const SoftmaxParams& params, std::span<const SparseVector> xs,
                              std::span<const std::size_t> targets, double l2) {
  double loss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::vector<double> p = params.probs(xs[i]);
    loss -= std::log(std::max(p[targets[i]], 1e-300));
  }
  double sq = 0.0;
  for (double w : params.stored) sq += w * w;
  loss += 0.5 * static_cast<double>(xs.size()) * l2 * params.scale * params.scale * sq;
  return loss;
}

struct DenseGradient {
  std::vector<double> weights;  // feature-major, like SoftmaxParams::stored
  std::vector<double> bias;
};

// Analytic gradient of batch_objective.
inline DenseGradient batch_gradient(const SoftmaxParams& params, std::span<const SparseVector> xs,
                                    std::span<const std::size_t> targets, double l2) {
  DenseGradient g{std::vector<double>(params.stored.size(), 0.0),
                  std::vector<double>(params.classes, 0.0)};
  const double decay = static_cast<double>(xs.size()) * l2 * params.scale;
  for (std::size_t k = 0; k < params.stored.size(); ++k) g.weights[k] = decay * params.stored[k];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<double> delta = params.probs(xs[i]);
    delta[targets[i]] -= 1.0;
    for (std::size_t c = 0; c < params.classes; ++c) g.bias[c] += delta[c];
    for (std::size_t k = 0; k < xs[i].nnz(); ++k) {
      const std::size_t base = static_cast<std::size_t>(xs[i].index[k]) * params.classes;
      for (std::size_t c = 0; c < params.classes; ++c) {
        g.weights[base + c] += delta[c] * xs[i].value[k];
      }
    }
  }
  return g;
}

// One SGD step W <- W - lr * grad(batch_objective). Probabilities for the
// whole batch are taken before any update; the data part of the gradient is
// applied sparsely and the L2 part through `scale`.
inline void sgd_step(SoftmaxParams& params, std::span<const SparseVector* const> xs,
                     std::span<const std::size_t> targets, double lr, double l2) {
  std::vector<std::vector<double>> deltas;
  deltas.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    std::vector<double> d = params.probs(*xs[i]);
    d[targets[i]] -= 1.0;
    deltas.push_back(std::move(d));
  }
  const double shrink = 1.0 - lr * static_cast<double>(xs.size()) * l2;
  params.scale *= shrink;
  if (params.scale < 1e-9) params.fold_scale();
  const double step = lr / params.scale;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::vector<double>& d = deltas[i];
    for (std::size_t c = 0; c < params.classes; ++c) params.bias[c] -= lr * d[c];
    for (std::size_t k = 0; k < xs[i]->nnz(); ++k) {
      double* row = &params.stored[static_cast<std::size_t>(xs[i]->index[k]) * params.classes];
      const double v = step * xs[i]->value[k];
      for (std::size_t c = 0; c < params.classes; ++c) row[c] -= v * d[c];
    }
  }
}

class TrainedModel {
 public:
  TrainedModel() = default;
  TrainedModel(ModelConfig config, std::vector<LabelId> labels, SoftmaxParams params)
      : config_(std::move(config)), labels_(std::move(labels)), params_(std::move(params)) {
    params_.fold_scale();
  }

  // All-zero weights; predicts the uniform distribution.
  static TrainedModel zeros(const ModelConfig& config, std::vector<LabelId> labels) {
    SoftmaxParams p(labels.size(), config.hash_dim);
    return TrainedModel(config, std::move(labels), std::move(p));
  }

  const ModelConfig& config() const { return config_; }
  const std::vector<LabelId>& labels() const { return labels_; }
  const SoftmaxParams& params() const { return params_; }
  std::size_t num_labels() const { return labels_.size(); }

  std::size_t row_of(LabelId l) const {
    auto it = std::lower_bound(labels_.begin(), labels_.end(), l);
    if (it == labels_.end() || *it != l) {
      throw Error(ErrorCode::kSchema, "label " + std::to_string(to_int(l)) + " unknown to model");
    }
    return static_cast<std::size_t>(it - labels_.begin());
  }

  bool finite() const {
    for (double w : params_.stored) if (!std::isfinite(w)) return false;
    for (double b : params_.bias) if (!std::isfinite(b)) return false;
    return true;
  }

  bool operator==(const TrainedModel& o) const {
    return config_ == o.config_ && labels_ == o.labels_ && params_.stored == o.params_.stored &&
           params_.bias == o.params_.bias && params_.scale == o.params_.scale;
  }

 private:
  ModelConfig config_;
  std::vector<LabelId> labels_;
  SoftmaxParams params_;
};

// Softmax distribution over model.labels() (ascending LabelId order).
inline std::vector<double> predict_proba(const TrainedModel& model, std::string_view text) {
  return model.params().probs(featurize(text, model.config()));
}

inline std::size_t argmax_first(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

inline LabelId predict_one(const TrainedModel& model, std::string_view text) {
  return model.labels()[argmax_first(predict_proba(model, text))];
}

// Argmax per sample; ties go to the smallest LabelId.
inline std::vector<LabelId> predict(const TrainedModel& model, const Dataset& data) {
  std::vector<LabelId> out;
  out.reserve(data.size());
  for (const Sample& s : data.samples()) out.push_back(predict_one(model, s.text));
  return out;
}

// Per training sample (dataset order), the predicted label after each epoch.
struct EpochTrace {
  std::vector<std::string> ids;
  std::vector<LabelId> given;                     // training label per sample
  std::vector<std::vector<LabelId>> predicted;   // [sample][epoch]
  std::vector<double> epoch_loss;                // mean cross-entropy per epoch

  std::size_t epochs() const { return epoch_loss.size(); }

  std::vector<bool> correctness(std::size_t i) const {
    std::vector<bool> bits;
    bits.reserve(predicted[i].size());
    for (LabelId p : predicted[i]) bits.push_back(p == given[i]);
    return bits;
  }
};

struct TrainResult {
  TrainedModel model;
  EpochTrace trace;
};

// Learning rate for a 1-based epoch: lr / sqrt(epoch).
inline double epoch_learning_rate(const ModelConfig& config, int epoch) {
  return config.learning_rate / std::sqrt(static_cast<double>(epoch));
}

inline TrainResult train(const Dataset& data, const ModelConfig& config) {
  config.validate();
  if (data.empty()) throw Error(ErrorCode::kDegenerate, "cannot train on an empty dataset");
  {
    std::vector<LabelId> seen;
    for (const Sample& s : data.samples()) seen.push_back(s.label);
    std::sort(seen.begin(), seen.end());
    if (std::unique(seen.begin(), seen.end()) - seen.begin() < 2) {
      throw Error(ErrorCode::kDegenerate, "training data has fewer than 2 distinct labels");
    }
  }
  const std::vector<LabelId>& labels = data.labels();
  const std::size_t n = data.size();

  std::vector<SparseVector> features;
  std::vector<std::size_t> targets;
  features.reserve(n);
  targets.reserve(n);
  for (const Sample& s : data.samples()) {
    features.push_back(featurize(s.text, config));
    targets.push_back(data.label_position(s.label));
  }

  // Visiting order is a seeded function of the ids, never of file order.
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed(n);

  SoftmaxParams params(labels.size(), config.hash_dim);
  EpochTrace trace;
  trace.ids.reserve(n);
  for (const Sample& s : data.samples()) {
    trace.ids.push_back(s.id);
    trace.given.push_back(s.label);
  }
  trace.predicted.assign(n, {});

  const auto batch = static_cast<std::size_t>(config.batch_size);
  std::vector<const SparseVector*> bx;
  std::vector<std::size_t> by;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const std::uint64_t epoch_seed = derive_seed(config.seed, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = 0; i < n; ++i) keyed[i] = {keyed_rank(epoch_seed, data[i].id), i};
    std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return data[a.second].id < data[b.second].id;
    });
    const double lr = epoch_learning_rate(config, epoch);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      bx.clear();
      by.clear();
      for (std::size_t k = start; k < end; ++k) {
        bx.push_back(&features[keyed[k].second]);
        by.push_back(targets[keyed[k].second]);
      }
      sgd_step(params, bx, by, lr, config.l2);
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> p = params.probs(features[i]);
      loss -= std::log(std::max(p[targets[i]], 1e-300));
      trace.predicted[i].push_back(labels[argmax_first(p)]);
    }
    trace.epoch_loss.push_back(loss / static_cast<double>(n));
  }
  return {TrainedModel(config, labels, std::move(params)), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Model file: "CURATE-MODEL 1\n", one JSON header line, then bias and weights
// as little-endian IEEE-754 doubles (bias[C], then weights feature-major).

namespace detail {

inline void write_doubles(std::ostream& out, const std::vector<double>& v) {
  for (double d : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    unsigned char buf[8];
    for (int k = 0; k < 8; ++k) buf[k] = static_cast<unsigned char>(bits >> (8 * k));
    out.write(reinterpret_cast<const char*>(buf), 8);
  }
}

inline void read_doubles(std::istream& in, std::vector<double>& v, const std::string& path) {
  for (double& d : v) {
    unsigned char buf[8];
    if (!in.read(reinterpret_cast<char*>(buf), 8)) {
      throw Error(ErrorCode::kParse, "truncated model file '" + path + "'");
    }
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(buf[k]) << (8 * k);
    std::memcpy(&d, &bits, sizeof d);
  }
}

}  // namespace detail

inline constexpr std::string_view kModelMagic = "CURATE-MODEL 1";

inline void save_model(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path + "'");
  Json header;
  header["config"] = model.config().to_json();
  std::vector<std::int32_t> labels;
  for (LabelId l : model.labels()) labels.push_back(to_int(l));
  header["labels"] = labels;
  out << kModelMagic << '\n' << header.dump() << '\n';
  SoftmaxParams p = model.params();
  p.fold_scale();
  detail::write_doubles(out, p.bias);
  detail::write_doubles(out, p.stored);
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path + "'");
}

inline TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::string magic, header_line;
  std::getline(in, magic);
  if (magic != kModelMagic) throw Error(ErrorCode::kParse, "'" + path + "' is not a model file");
  std::getline(in, header_line);
  Json header;
  try {
    header = Json::parse(header_line);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParse, "model header in '" + path + "': " + e.what());
  }
  ModelConfig config = ModelConfig::from_json(header.at("config"));
  std::vector<LabelId> labels;
  for (auto v : header.at("labels").get<std::vector<std::int32_t>>()) labels.push_back(label_id(v));
  SoftmaxParams p(labels.size(), config.hash_dim);
  detail::read_doubles(in, p.bias, path);
  detail::read_doubles(in, p.stored, path);
  return TrainedModel(std::move(config), std::move(labels), std::move(p));
}

}  // namespace curate
