// Copyright 2026 The spkmia Authors.
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

// Attack-quality metrics (accuracy, ROC, AUROC, TPR at FPR) and SRS-quality
// metrics (EER, overfitting gap).

#ifndef SPKMIA_METRICS_H_
#define SPKMIA_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "spkmia/srs.h"
#include "spkmia/types.h"

namespace spkmia {

// P(member > non-member) + 0.5 P(tie), via mid-ranks.
double Auroc(std::span<const double> members, std::span<const double> non_members);

struct RocPoint {
  double threshold;  // predict member iff score >= threshold
  double fpr;
  double tpr;
};

// Starts at (0, 0) with threshold +inf, ends at (1, 1).
struct RocCurve {
  std::vector<RocPoint> points;
};

RocCurve ComputeRoc(std::span<const double> members, std::span<const double> non_members);
double TrapezoidArea(const RocCurve& curve);
// Largest TPR over operating points with FPR <= x.
double TprAtFpr(const RocCurve& curve, double x);

// Fraction of decisions equal to labels. When `warning` is given it receives
// a message if the labels are not balanced, otherwise it is cleared.
double Accuracy(std::span<const int> decisions, std::span<const int> labels,
                std::string* warning = nullptr);
double BalancedAccuracy(std::span<const int> decisions, std::span<const int> labels);

struct EerReport {
  double eer = 0.0;
  double threshold = 0.0;
};

// Equal error rate of the ROC convex hull: the point where the hull meets
// FAR = FRR.
EerReport ComputeEer(std::span<const double> genuine, std::span<const double> imposter);

struct Trial {
  std::size_t enroll = 0;  // index into a voice list
  std::size_t test = 0;
  bool same = false;
};

// `count` trials, half same-speaker and half different-speaker.
std::vector<Trial> SampleTrials(std::span<const Voice> voices, std::size_t count,
                                std::uint64_t seed);

struct OverfitReport {
  double train_eer = 0.0;
  double test_eer = 0.0;
  double gap = 0.0;
};

OverfitReport OverfitGap(const EmbeddingModel& model, std::span<const Voice> train_voices,
                         std::span<const Trial> train_trials,
                         std::span<const Voice> test_voices,
                         std::span<const Trial> test_trials);

struct MetricRow {
  std::string metric;
  double value = 0.0;
  std::size_t n_members = 0;
  std::size_t n_non_members = 0;
  std::string config_hash;
};

std::string MetricsCsv(std::span<const MetricRow> rows);
std::string RocCsv(const RocCurve& curve);

}  // namespace spkmia

#endif  // SPKMIA_METRICS_H_
