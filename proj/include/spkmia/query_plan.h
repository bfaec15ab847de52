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

// Black-box probing plans with enrollment voice concatenation, group
// enrollment and template sharing, plus closed-form query counts.

#ifndef SPKMIA_QUERY_PLAN_H_
#define SPKMIA_QUERY_PLAN_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spkmia/features.h"
#include "spkmia/srs.h"
#include "spkmia/types.h"

namespace spkmia {

enum class FeatureGroup {
  kCentroid,          // F_c
  kPairwise,          // F_p and refinements
  kCentroidCentroid,  // F_cc
  kCentroidVoice,     // F_cv and refinements
  kVoiceCentroid,     // F_vc and refinements
  kVoiceVoice,        // F_vv and refinements
};

inline constexpr FeatureGroup kAllFeatureGroups[] = {
    FeatureGroup::kCentroid,       FeatureGroup::kPairwise,
    FeatureGroup::kCentroidCentroid, FeatureGroup::kCentroidVoice,
    FeatureGroup::kVoiceCentroid,  FeatureGroup::kVoiceVoice};

std::string_view FeatureGroupName(FeatureGroup g);
FeatureGroup ParseFeatureGroup(std::string_view name);

class FeatureGroupSet {
 public:
  FeatureGroupSet() = default;
  FeatureGroupSet(std::initializer_list<FeatureGroup> groups);
  static FeatureGroupSet All();

  void Insert(FeatureGroup g) { bits_ |= Bit(g); }
  bool Contains(FeatureGroup g) const { return (bits_ & Bit(g)) != 0; }
  std::size_t size() const;
  bool empty() const { return bits_ == 0; }
  std::vector<FeatureGroup> List() const;
  std::uint32_t bits() const { return bits_; }

 private:
  static std::uint32_t Bit(FeatureGroup g) { return 1u << static_cast<int>(g); }
  std::uint32_t bits_ = 0;
};

struct Technique {
  bool concat = false;
  bool group = false;
  bool share = false;
};

std::string TechniqueName(const Technique& t);

struct PlanCounts {
  std::uint64_t enrollment = 0;
  std::uint64_t recognition = 0;

  std::uint64_t total() const { return enrollment + recognition; }
  bool operator==(const PlanCounts&) const = default;
};

// Concatenation in the given order; throws kInvalidArgument on mixed rates.
Voice ConcatVoices(std::span<const Voice> voices, const std::string& voice_id = "");
// Concatenation in ascending voice_id.
Voice ConcatSorted(std::span<const Voice> voices, const std::string& voice_id = "");

// Closed-form counts. `k` holds K_j per imposter. Group needs
// identification mode; white-box mode is rejected.
PlanCounts PredictCounts(FeatureGroup group, std::size_t n, std::span<const std::size_t> k,
                         const Technique& technique, SrsAccessMode mode);
PlanCounts PredictCounts(const FeatureGroupSet& groups, std::size_t n,
                         std::span<const std::size_t> k, const Technique& technique,
                         SrsAccessMode mode);

std::uint64_t WhiteBoxCount(std::size_t n, std::size_t q);

enum class TemplateKind { kTargetCentroid, kTargetSingle, kImposter };
enum class ProbeKind { kTargetVoice, kImposterVoice, kImposterConcat };

struct PlannedTemplate {
  TemplateKind kind;
  std::size_t index = 0;  // voice i or imposter j; unused for the centroid
  int scope = 0;
  std::size_t enroll_voices = 0;
};

struct PlannedRecognition {
  ProbeKind kind;
  std::size_t index = 0;  // target voice i, imposter voice k or imposter j
  std::vector<std::size_t> templates;
};

enum class TableSlot { kFc, kPair, kCc, kCv, kVc, kVv };

// One score the features need: recognition `recognition`, entry `position`
// goes to table slot (row, col).
struct PlannedScore {
  FeatureGroup group;
  TableSlot slot;
  std::size_t row = 0;
  std::size_t col = 0;
  std::size_t recognition = 0;
  std::size_t position = 0;
};

struct QueryPlan {
  FeatureGroupSet groups;
  Technique technique;
  SrsAccessMode mode = SrsAccessMode::kBlackBoxIdentification;
  std::size_t n = 0;
  std::vector<std::size_t> k;
  bool voice_centroid_symmetric = false;
  std::vector<PlannedTemplate> templates;        // all enrolled before any recognition
  std::vector<PlannedRecognition> recognitions;  // in execution order
  std::vector<PlannedScore> scores;

  PlanCounts counts() const;
};

QueryPlan BuildQueryPlan(const FeatureGroupSet& groups, std::size_t n,
                         std::span<const std::size_t> k, const Technique& technique,
                         SrsAccessMode mode);

// Runs the plan; table entries of groups outside the plan keep their
// defaults. If the SRS rejects a call the error is rethrown with its code and
// the partial ledger appended to the message.
SimilarityTable ExecutePlan(const QueryPlan& plan, SrsSession& session,
                            std::span<const Voice> target, const ImposterBank& bank);

// Black-box features: all groups, executed on `session`.
FeatureVector BlackBoxFeatures(SrsSession& session, std::span<const Voice> target,
                               const ImposterBank& bank, const Technique& technique);

// CSV with header group,technique,N,M,Q,enrollment,recognition,total.
struct QueryCountRow {
  std::string group;
  Technique technique;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t q = 0;
  PlanCounts counts;
};

std::vector<QueryCountRow> TableOneRows(std::size_t n, std::span<const std::size_t> k);
std::string QueryCountsCsv(std::span<const QueryCountRow> rows);

}  // namespace spkmia

#endif  // SPKMIA_QUERY_PLAN_H_
