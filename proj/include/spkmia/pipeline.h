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

// End-to-end audit: partition, shadow and target SRS, feature extraction
// under Setting-1 or Setting-2, attack training, inference and reporting.

#ifndef SPKMIA_PIPELINE_H_
#define SPKMIA_PIPELINE_H_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spkmia/attack.h"
#include "spkmia/chunking.h"
#include "spkmia/config.h"
#include "spkmia/dataset.h"
#include "spkmia/features.h"
#include "spkmia/metrics.h"
#include "spkmia/partition.h"
#include "spkmia/srs.h"

namespace spkmia {

// How a speaker's inference units are drawn from its voices.
struct UnitSpec {
  std::size_t n_units = 0;        // 0: every unit of the chosen source voices
  std::size_t source_voices = 0;  // 0: the whole pool
  bool chunking = false;
  ChunkConfig chunk;
};

// Draws ceil(n * r) units from pool `a` and the rest from pool `b`. Source
// voices are sampled per pool, sorted by voice_id, optionally chunked, and
// units are taken round-robin (first chunk of every source, then the second,
// ...). With r strictly inside (0, 1) and source_voices 0 the source count
// per pool is min(|a|, |b|). Throws kNotEnoughVoices if a pool cannot supply
// its share.
std::vector<Voice> SelectUnits(std::span<const Voice> a, std::span<const Voice> b, double r,
                               const UnitSpec& spec, std::uint64_t seed);

// Runs `fn(i)` for i in [0, n) on up to `workers` threads; rethrows the first
// failure.
void ParallelFor(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

enum class Side { kShadow, kTarget };
std::string_view SideName(Side side);

struct ShadowRows {
  std::vector<FeatureVector> r1;
  std::vector<FeatureVector> r0;
  std::vector<FeatureVector> non_members;

  std::vector<FeatureVector> All() const;
};

struct TargetRows {
  double r = 0.0;
  std::vector<FeatureVector> members;
  std::vector<FeatureVector> non_members;
};

// Scores of one attack model; a row is called a member when score > cut.
struct ScoredRun {
  std::vector<double> members;
  std::vector<double> non_members;
  double cut = 0.5;
};

struct EvalResult {
  double auroc = 0.0;
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double tpr_at_1pct = 0.0;
  double tpr_at_01pct = 0.0;
  std::size_t n_members = 0;
  std::size_t n_non_members = 0;
  RocCurve roc;  // of the run-averaged scores
  std::string warning;
};

// Metrics averaged over runs.
EvalResult Evaluate(std::span<const ScoredRun> runs);

std::vector<double> ScoreRows(const ClassifierModel& model, std::span<const FeatureVector> rows);
Eigen::MatrixXd FeatureMatrix(std::span<const FeatureVector> rows);

struct AttackModels {
  std::vector<ClassifierModel> ensemble;
  std::optional<ThresholdModel> threshold;
  std::vector<ModelBank> banks;  // one per repeat when VND is on

  std::vector<ScoredRun> Score(std::span<const FeatureVector> members,
                               std::span<const FeatureVector> non_members) const;
};

struct RatioResult {
  double r = 0.0;
  EvalResult eval;
};

struct ImportanceRow {
  std::string feature;
  double delta = 0.0;  // mean AUROC drop under permutation
};

struct AuditReport {
  std::string config_hash;
  std::vector<RatioResult> ratios;
  std::optional<std::size_t> bound;
  std::optional<OverfitReport> overfit;
  QueryCounts shadow_counts;
  QueryCounts target_counts;
  std::size_t shadow_rows = 0;
  std::vector<ImportanceRow> importance;
  std::vector<std::string> warnings;
};

nlohmann::ordered_json AuditReportToJson(const AuditReport& report, const AuditConfig& config);
std::string SummaryText(const AuditReport& report, const AuditConfig& config);
// "values vs gamma" table over several results.json documents.
std::string GammaTable(std::span<const nlohmann::json> results);

class Audit {
 public:
  explicit Audit(AuditConfig config, std::shared_ptr<const Dataset> dataset = nullptr,
                 std::optional<PartitionAssignment> partition = std::nullopt);

  const AuditConfig& config() const { return config_; }
  const std::string& hash() const { return hash_; }
  std::filesystem::path output_dir() const { return config_.output_dir; }
  std::filesystem::path CachePath(const std::string& stem) const;

  const Dataset& dataset();
  const PartitionAssignment& partition();
  std::vector<std::string> Speakers(PartitionLabel label);
  // Every voice of the speaker, or one role of a training speaker.
  std::vector<Voice> VoicesOf(const std::string& speaker);
  std::vector<Voice> VoicesOf(const std::string& speaker, VoiceRole role);

  std::shared_ptr<const EmbeddingModel> Srs(Side side);
  const ImposterBank& Imposters();
  // Setting-2 source voices are capped so every row of an audit draws from
  // the same number of voices: min(|train|, |held-out|) over member speakers.
  UnitSpec DefaultUnits();
  std::size_t SourceCap();

  Embedding Embed(Side side, const Voice& voice);
  FeatureVector Features(Side side, std::span<const Voice> units);

  // Training speakers of the side with units drawn at mixing ratio r.
  std::vector<FeatureVector> MemberRows(Side side, double r, const UnitSpec& units);
  std::vector<FeatureVector> NonMemberRows(Side side, const UnitSpec& units);

  ShadowRows Shadow();
  ShadowRows Shadow(const UnitSpec& units);
  // Member and non-member counts are equalized by dropping the largest ids.
  TargetRows Target(double r);
  TargetRows Target(double r, const UnitSpec& units);

  AttackModels TrainAttack();
  MixingDataset TrainingSet(const ShadowRows& rows) const;
  BoundResult Bound();
  ModelBank TrainBank(std::size_t bound, std::uint64_t seed);
  // Target rows re-extracted after discarding down to the bank's bound.
  std::vector<ScoredRun> ScoreWithBanks(const AttackModels& models, double r);
  std::optional<OverfitReport> Overfit();
  std::vector<ImportanceRow> PermutationImportance(const AttackModels& models,
                                                   const TargetRows& rows);

  QueryCounts counts(Side side) const;

  AuditReport Run();
  void WriteReport(const AuditReport& report);

 private:
  struct SideState {
    std::shared_ptr<const EmbeddingModel> model;
    std::optional<EmbeddedBank> bank;
    std::mutex mu;
    std::map<std::string, Embedding> cache;
    std::atomic<std::uint64_t> enroll{0};
    std::atomic<std::uint64_t> recognize{0};
    std::atomic<std::uint64_t> embed{0};
  };

  void Split();
  SideState& state(Side side) { return side == Side::kShadow ? shadow_ : target_; }
  std::uint64_t UnitSeed(Side side, std::string_view purpose, const std::string& speaker,
                         double r) const;
  std::vector<Voice> MemberUnits(Side side, const std::string& speaker, double r,
                                 const UnitSpec& units);
  std::vector<Voice> NonMemberUnits(Side side, const std::string& speaker,
                                    const UnitSpec& units);
  std::vector<std::string> Members(Side side);
  std::vector<std::string> NonMembers(Side side);
  void Prewarm(Side side);
  std::vector<FeatureVector> Rows(Side side, const std::vector<std::string>& speakers,
                                  std::string_view purpose,
                                  const std::function<std::vector<Voice>(const std::string&)>& units,
                                  std::optional<int> label, std::optional<double> r,
                                  bool chunked);
  const EmbeddedBank& Bank(Side side);
  std::size_t workers(Side side);

  AuditConfig config_;
  std::string hash_;
  std::shared_ptr<const Dataset> dataset_;
  std::optional<PartitionAssignment> partition_;
  std::map<std::string, VoiceSplit> splits_;
  std::optional<ImposterBank> imposters_;
  std::optional<ShadowRows> shadow_rows_;
  std::map<double, TargetRows> target_rows_;
  std::optional<AttackModels> models_;
  std::optional<BoundResult> bound_;
  std::map<std::size_t, ShadowRows> bank_rows_;
  SideState shadow_;
  SideState target_;
  std::map<std::pair<std::string, std::size_t>, std::vector<double>> bound_features_;
};

// Call inside a catch block: rethrows the active exception as an Error with
// a "stage <name>:" prefix, keeping its code (kStageFailure for non-Errors).
[[noreturn]] void RethrowStaged(std::string_view stage);

}  // namespace spkmia

#endif  // SPKMIA_PIPELINE_H_
