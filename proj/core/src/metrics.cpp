// Copyright 2026 The DQRM Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dqrm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dqrm/error.hpp"

namespace dqrm {

namespace {

void check_pairs(std::span<const double> scores, std::span<const float> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "scores and labels differ in length");
  }
  if (scores.empty()) throw Error(ErrorCode::kEmptyTensor, "no predictions");
}

}  // namespace

double accuracy(std::span<const double> scores, std::span<const float> labels,
                double threshold) {
  check_pairs(scores, labels);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (pred == (labels[i] >= 0.5f)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

double roc_auc(std::span<const double> scores, std::span<const float> labels) {
  check_pairs(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j+1 share their mean.
    const double rank = 0.5 * static_cast<double>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] >= 0.5f) {
        pos_rank_sum += rank;
        ++pos;
      }
    }
    i = j + 1;
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorCode::kUndefinedAuc, "undefined AUC");
  const double p = static_cast<double>(pos);
  const double u = pos_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(neg));
}

double bce(double p, float label, double eps) {
  const double q = std::clamp(p, eps, 1.0 - eps);
  return label >= 0.5f ? -std::log(q) : -std::log(1.0 - q);
}

void EvalAccumulator::add(std::span<const double> scores, std::span<const float> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "scores and labels differ in length");
  }
  scores_.insert(scores_.end(), scores.begin(), scores.end());
  labels_.insert(labels_.end(), labels.begin(), labels.end());
}

void EvalAccumulator::add_loss(double sum, std::size_t count) {
  loss_sum_ += sum;
  loss_count_ += count;
}

void EvalAccumulator::merge(const EvalAccumulator& other) {
  add(other.scores_, other.labels_);
  add_loss(other.loss_sum_, other.loss_count_);
}

double EvalAccumulator::accuracy() const { return dqrm::accuracy(scores_, labels_); }

double EvalAccumulator::auc() const { return roc_auc(scores_, labels_); }

double EvalAccumulator::mean_loss() const {
  if (loss_count_ == 0) throw Error(ErrorCode::kEmptyTensor, "no loss recorded");
  return loss_sum_ / static_cast<double>(loss_count_);
}

}  // namespace dqrm
