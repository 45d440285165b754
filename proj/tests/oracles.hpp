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

// Reference implementations written independently of the library, used as
// ground truth by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace curate::oracle {

// Per-class precision/recall by direct counting over the samples, then
// F1 = 2PR/(P+R), with 0/0 read as 0 at every step.
inline double macro_f1(const std::vector<int>& golds, const std::vector<int>& preds, int num_classes) {
  double total = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
      const bool g = golds[i] == c, p = preds[i] == c;
      if (g && p) tp += 1;
      if (!g && p) fp += 1;
      if (g && !p) fn += 1;
    }
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    total += precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  }
  return total / num_classes;
}

// Shannon entropy by summing log terms from the largest probability down.
inline double entropy(std::vector<double> p) {
  std::sort(p.begin(), p.end(), std::greater<>());
  double h = 0.0;
  for (double v : p) {
    if (v > 0) h += v * std::log(1.0 / v);
  }
  return h;
}

// Correct->incorrect transitions, counted by scanning for the first
// correct epoch and then walking forward.
inline int forget_count(const std::vector<bool>& bits) {
  std::size_t first = 0;
  while (first < bits.size() && !bits[first]) ++first;
  int count = 0;
  bool prev = true;
  for (std::size_t e = first + 1; e < bits.size(); ++e) {
    if (prev && !bits[e]) ++count;
    prev = bits[e];
  }
  return count;
}

// Probability that a random positive outscores a random negative, ties 1/2,
// by exhaustive pair comparison.
inline double roc_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      pairs += 1;
      if (scores[i] > scores[j]) wins += 1;
      if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return pairs > 0 ? wins / pairs : 0.5;
}

// Central difference of f at x along coordinate k.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f,
                                  std::vector<double> x, std::size_t k, double h = 1e-5) {
  const double x0 = x[k];
  x[k] = x0 + h;
  const double up = f(x);
  x[k] = x0 - h;
  const double down = f(x);
  return (up - down) / (2 * h);
}

}  // namespace curate::oracle
