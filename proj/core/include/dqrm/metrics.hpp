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

#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dqrm {

// Mean of [(score >= threshold) == label]. Errors: kShapeMismatch,
// kEmptyTensor.
double accuracy(std::span<const double> scores, std::span<const float> labels,
                double threshold = 0.5);

// Probability that a random positive outranks a random negative, ties
// counting one half. Sort-and-rank with average ranks for ties.
// Errors: Error(kUndefinedAuc, "undefined AUC") if only one class is present.
double roc_auc(std::span<const double> scores, std::span<const float> labels);

// Binary cross-entropy of one probability, clamped to [eps, 1 - eps].
double bce(double p, float label, double eps = 1e-7);

class EvalAccumulator {
 public:
  void add(std::span<const double> scores, std::span<const float> labels);
  void add_loss(double sum, std::size_t count);
  void merge(const EvalAccumulator& other);

  std::size_t size() const { return scores_.size(); }
  std::span<const double> scores() const { return scores_; }
  std::span<const float> labels() const { return labels_; }

  double accuracy() const;
  double auc() const;
  double mean_loss() const;

 private:
  std::vector<double> scores_;
  std::vector<float> labels_;
  double loss_sum_ = 0.0;
  std::size_t loss_count_ = 0;
};

}  // namespace dqrm
