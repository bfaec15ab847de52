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

// Intra/inter similarity features over a target speaker's voices.
//
// Feature names read "<block>/<set>/<stat>", e.g. "intra/p~.std/max" or
// "inter/v~v.max/avg". Sets with a "~" are refined sets: a statistic per
// row (or column) of a similarity matrix.

#ifndef SPKMIA_FEATURES_H_
#define SPKMIA_FEATURES_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "spkmia/srs.h"
#include "spkmia/types.h"

namespace spkmia {

inline constexpr std::size_t kNumIntraFeatures = 21;
inline constexpr std::size_t kNumInterFeatures = 82;
inline constexpr std::size_t kNumFeatures = kNumIntraFeatures + kNumInterFeatures;

enum class StatKind { kAvg, kNegStd, kMax, kMin };

inline constexpr StatKind kAllStats[] = {StatKind::kAvg, StatKind::kNegStd, StatKind::kMax,
                                         StatKind::kMin};

std::string_view StatName(StatKind kind);

// Throws kEmptyInput on an empty set.
double Stat(std::span<const double> values, StatKind kind);

struct SimilaritySet {
  std::string tag;
  std::vector<double> values;
};

// voices[j] are the K_j voices of imposter j.
struct ImposterBank {
  std::vector<std::string> speaker_ids;
  std::vector<std::vector<Voice>> voices;

  std::size_t num_imposters() const { return voices.size(); }
  std::size_t num_voices() const;
  std::vector<std::size_t> voices_per_imposter() const;
  void Validate() const;
};

// Raw scores from which every feature is derived. Matrices are row-major.
struct SimilarityTable {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t q = 0;
  std::vector<std::size_t> imposter_of;  // q entries
  std::vector<double> fc;    // n: target voice i vs target centroid
  std::vector<double> pair;  // n x n, symmetric; diagonal unused
  std::vector<double> cc;    // m: imposter j centroid vs target centroid
  std::vector<double> cv;    // q: imposter voice k vs target centroid
  std::vector<double> vc;    // n x m: target voice i vs imposter j centroid
  std::vector<double> vv;    // n x q: target voice i vs imposter voice k

  static SimilarityTable Empty(std::size_t n, std::span<const std::size_t> voices_per_imposter);
};

// Embeddings of an imposter bank, computed once per SRS.
struct EmbeddedBank {
  std::vector<Embedding> voices;     // q, imposter-major
  std::vector<Embedding> centroids;  // m
  std::vector<std::size_t> imposter_of;
};

EmbeddedBank EmbedImposters(SrsSession& session, const ImposterBank& bank);

// Needs a white-box session; meters n embed queries.
SimilarityTable WhiteBoxTable(SrsSession& session, std::span<const Voice> voices,
                              const EmbeddedBank& bank);
SimilarityTable WhiteBoxTable(std::span<const Embedding> voices, const EmbeddedBank& bank);

// omega<test | enroll>. Black-box sessions take exactly one test voice.
double Omega(SrsSession& session, std::span<const Voice> test, std::span<const Voice> enroll);

// The 6 intra sets, in canonical order. Needs n >= 2.
std::vector<SimilaritySet> IntraSets(const SimilarityTable& table);
// The 24 inter sets (negated similarities), in canonical order.
std::vector<SimilaritySet> InterSets(const SimilarityTable& table);

const std::vector<std::string>& FeatureNames();
// Index of a canonical name; throws kInvalidArgument if unknown.
std::size_t FeatureIndex(std::string_view name);
// Hex SHA-256 of the newline-joined canonical names.
const std::string& FeatureOrderHash();

struct FeatureVector {
  std::string speaker_id;
  std::optional<int> label;  // 1 member, 0 non-member
  std::optional<double> r;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t q = 0;
  bool chunked = false;
  std::vector<double> values;
};

FeatureVector ComputeFeatures(const SimilarityTable& table);

nlohmann::ordered_json FeatureVectorToJson(const FeatureVector& fv);
FeatureVector FeatureVectorFromJson(const nlohmann::json& j);
void WriteFeatureCache(const std::filesystem::path& path, std::span<const FeatureVector> rows);
std::vector<FeatureVector> ReadFeatureCache(const std::filesystem::path& path);

enum class BaselineMode { kSortedPairwise, kRawCentroidScores, kCentroidPlusImposterScores };

BaselineMode ParseBaselineMode(std::string_view name);

std::vector<double> BaselineFeatures(const SimilarityTable& table, BaselineMode mode);
// One row per table; throws kDimensionMismatch if n or m varies.
std::vector<std::vector<double>> BaselineFeatureMatrix(std::span<const SimilarityTable> tables,
                                                       BaselineMode mode);

}  // namespace spkmia

#endif  // SPKMIA_FEATURES_H_
