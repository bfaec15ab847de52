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

// Threshold and classifier attack models, the mixing-ratio training set,
// voice-number-dependent model banks and the T-test bound on N.

#ifndef SPKMIA_ATTACK_H_
#define SPKMIA_ATTACK_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "spkmia/features.h"
#include "spkmia/types.h"

namespace spkmia {

struct ThresholdModel {
  std::string feature;
  std::size_t feature_index = 0;
  double tau = 0.0;
  double train_accuracy = 0.0;

  int Decide(double value) const { return value > tau ? 1 : 0; }

  nlohmann::ordered_json ToJson() const;
  static ThresholdModel FromJson(const nlohmann::json& j);
};

// Members are predicted when value > tau. Candidates are midpoints between
// adjacent distinct values plus -inf and +inf; ties go to the smallest tau.
ThresholdModel FitThreshold(std::span<const double> members, std::span<const double> non_members);
ThresholdModel FitThreshold(std::span<const FeatureVector> members,
                            std::span<const FeatureVector> non_members,
                            const std::string& feature);

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 1000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int hidden = 64;
  int repeats = 10;
  std::uint64_t seed = 0;

  void Validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct LabeledRow {
  std::string speaker_id;
  std::vector<double> features;
  int label = 0;        // 1 member, 0 non-member
  int source_r = -1;    // 1 or 0 for member rows, -1 for non-member rows
  double weight = 1.0;
  std::size_t n = 0;
};

struct MixingDataset {
  std::vector<LabeledRow> rows;

  std::size_t dim() const { return rows.empty() ? 0 : rows.front().features.size(); }
  std::size_t count(int label) const;
  double total_weight(int label) const;
};

enum class MixingMode { kMix, kOnlyR1, kOnlyR0 };

// Member rows come from `r1` (all voices used in training) and `r0` (none
// used); every speaker of r1 must appear in r0 and vice versa. Non-member
// rows are weighted so both classes carry equal total weight (2.0 when the
// two shadow parts have the same size).
MixingDataset BuildMixingDataset(std::span<const FeatureVector> r1,
                                 std::span<const FeatureVector> r0,
                                 std::span<const FeatureVector> non_members,
                                 MixingMode mode = MixingMode::kMix);

// Concatenates datasets, keeping each row's weight.
MixingDataset MergeDatasets(std::span<const MixingDataset> parts);

class ClassifierModel {
 public:
  ClassifierModel() = default;
  ClassifierModel(std::size_t inputs, std::size_t hidden);

  std::size_t inputs() const { return static_cast<std::size_t>(w1_.cols()); }
  std::size_t hidden() const { return static_cast<std::size_t>(w1_.rows()); }

  // Probability of membership, in (0, 1).
  double Predict(std::span<const double> features) const;
  int Decide(std::span<const double> features) const { return Predict(features) > 0.5 ? 1 : 0; }
  // One probability per row of raw features.
  std::vector<double> PredictBatch(const Eigen::MatrixXd& x) const;

  // w1 (row-major), b1, w2, b2.
  std::vector<double> Parameters() const;
  void SetParameters(std::span<const double> params);
  std::size_t num_parameters() const;

  void SetStandardization(std::vector<double> mean, std::vector<double> stddev);
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return std_; }

  Eigen::MatrixXd Standardize(const Eigen::MatrixXd& x) const;

  nlohmann::ordered_json ToJson() const;
  static ClassifierModel FromJson(const nlohmann::json& j);

  bool operator==(const ClassifierModel& o) const;

 private:
  friend double WeightedLoss(const ClassifierModel&, const Eigen::MatrixXd&,
                             std::span<const int>, std::span<const double>,
                             std::vector<double>*);
  friend ClassifierModel TrainClassifier(const MixingDataset&, const TrainConfig&, std::uint64_t);

  std::vector<double> mean_;
  std::vector<double> std_;
  Eigen::MatrixXd w1_;  // hidden x inputs
  Eigen::VectorXd b1_;
  Eigen::RowVectorXd w2_;
  double b2_ = 0.0;
};

// Weighted binary cross-entropy normalized by the weight sum, over rows of
// `x` (raw features, standardized with the model's parameters). Fills the
// gradient with respect to Parameters() when `grad` is given.
double WeightedLoss(const ClassifierModel& model, const Eigen::MatrixXd& x,
                    std::span<const int> labels, std::span<const double> weights,
                    std::vector<double>* grad);

// Full-batch Adam; standardization from the dataset rows.
ClassifierModel TrainClassifier(const MixingDataset& data, const TrainConfig& config,
                                std::uint64_t seed);
// `repeats` models with seeds config.seed, config.seed + 1, ...
std::vector<ClassifierModel> TrainEnsemble(const MixingDataset& data, const TrainConfig& config);

Eigen::MatrixXd RowsToMatrix(std::span<const LabeledRow> rows);

struct ModelBank {
  std::size_t bound = 2;
  std::map<std::size_t, ClassifierModel> models;  // keyed by voice count

  std::size_t ModelCountFor(std::size_t n) const;
  const ClassifierModel& ModelFor(std::size_t n) const;
};

// The `keep` voices with the smallest voice_id, in ascending voice_id.
std::vector<Voice> KeepSmallestIds(std::span<const Voice> voices, std::size_t keep);

struct BankDecision {
  std::size_t model_n = 0;
  std::size_t discarded = 0;
  double probability = 0.0;
  int decision = 0;
};

using FeatureFn = std::function<FeatureVector(std::span<const Voice>)>;

BankDecision BankInfer(const ModelBank& bank, std::span<const Voice> voices,
                       const FeatureFn& features);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

// Two-sided Welch test. Needs two values per side.
WelchResult WelchTTest(std::span<const double> a, std::span<const double> b);

struct BoundOptions {
  std::size_t step = 5;
  double alpha = 0.05;
  std::size_t start_n = 1;
  std::size_t max_n = 64;
};

// Feature values of the speakers of dataset `d` holding at least n + s
// voices, evaluated with n and with n + s voices each.
struct BoundSamples {
  std::vector<double> at_n;
  std::vector<double> at_n_plus_s;
};
using BoundSampler =
    std::function<BoundSamples(std::size_t feature, std::size_t dataset, std::size_t n, std::size_t s)>;

struct BoundTrace {
  std::size_t feature = 0;
  std::size_t dataset = 0;
  std::vector<double> p_values;  // p at start_n, start_n + 1, ...
  std::size_t accepted_n = 0;    // 0 if the pair ran out of speakers
};

struct BoundResult {
  std::size_t bound = 0;
  std::vector<BoundTrace> traces;
};

BoundResult BoundVoiceCount(std::size_t num_features, std::size_t num_datasets,
                            const BoundSampler& sampler, const BoundOptions& options);

}  // namespace spkmia

#endif  // SPKMIA_ATTACK_H_
