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

#include "spkmia/features.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "spkmia/error.h"
#include "spkmia/file_util.h"
#include "spkmia/vector_math.h"

namespace spkmia {

std::string_view StatName(StatKind kind) {
  switch (kind) {
    case StatKind::kAvg: return "avg";
    case StatKind::kNegStd: return "negstd";
    case StatKind::kMax: return "max";
    case StatKind::kMin: return "min";
  }
  return "?";
}

double Stat(std::span<const double> values, StatKind kind) {
  Require(!values.empty(), ErrorCode::kEmptyInput, "statistic of an empty set");
  const double n = static_cast<double>(values.size());
  switch (kind) {
    case StatKind::kAvg: {
      double s = 0.0;
      for (double v : values) s += v;
      return s / n;
    }
    case StatKind::kNegStd: {
      double s = 0.0;
      for (double v : values) s += v;
      const double mean = s / n;
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      const double sd = std::sqrt(ss / n);
      return sd == 0.0 ? 0.0 : -sd;
    }
    case StatKind::kMax: return *std::max_element(values.begin(), values.end());
    case StatKind::kMin: return *std::min_element(values.begin(), values.end());
  }
  Fail(ErrorCode::kInvalidArgument, "unknown statistic");
}

std::size_t ImposterBank::num_voices() const {
  std::size_t q = 0;
  for (const auto& v : voices) q += v.size();
  return q;
}

std::vector<std::size_t> ImposterBank::voices_per_imposter() const {
  std::vector<std::size_t> k;
  for (const auto& v : voices) k.push_back(v.size());
  return k;
}

void ImposterBank::Validate() const {
  Require(!voices.empty(), ErrorCode::kEmptyInput, "imposter bank is empty");
  Require(speaker_ids.empty() || speaker_ids.size() == voices.size(),
          ErrorCode::kInvalidArgument, "imposter id list does not match the bank");
  for (const auto& v : voices) {
    Require(!v.empty(), ErrorCode::kEmptyInput, "imposter without voices");
  }
}

SimilarityTable SimilarityTable::Empty(std::size_t n,
                                       std::span<const std::size_t> voices_per_imposter) {
  SimilarityTable t;
  t.n = n;
  t.m = voices_per_imposter.size();
  for (std::size_t j = 0; j < t.m; ++j) {
    for (std::size_t k = 0; k < voices_per_imposter[j]; ++k) t.imposter_of.push_back(j);
  }
  t.q = t.imposter_of.size();
  t.fc.assign(n, 0.0);
  t.pair.assign(n * n, 1.0);
  t.cc.assign(t.m, 0.0);
  t.cv.assign(t.q, 0.0);
  t.vc.assign(n * t.m, 0.0);
  t.vv.assign(n * t.q, 0.0);
  return t;
}

EmbeddedBank EmbedImposters(SrsSession& session, const ImposterBank& bank) {
  bank.Validate();
  EmbeddedBank out;
  for (std::size_t j = 0; j < bank.voices.size(); ++j) {
    std::vector<Embedding> mine;
    for (const Voice& v : bank.voices[j]) {
      mine.push_back(session.Embed(v));
      out.voices.push_back(mine.back());
      out.imposter_of.push_back(j);
    }
    out.centroids.push_back(Centroid(mine));
  }
  return out;
}

SimilarityTable WhiteBoxTable(std::span<const Embedding> e, const EmbeddedBank& bank) {
  Require(!e.empty(), ErrorCode::kEmptyInput, "no target voices");
  Require(!bank.centroids.empty(), ErrorCode::kEmptyInput, "imposter bank is empty");
  const std::size_t n = e.size();
  std::vector<std::size_t> k(bank.centroids.size(), 0);
  for (std::size_t j : bank.imposter_of) ++k[j];
  SimilarityTable t = SimilarityTable::Empty(n, k);
  const Embedding c = Centroid(e);
  for (std::size_t i = 0; i < n; ++i) {
    t.fc[i] = CosineSimilarity(e[i], c);
    for (std::size_t j = i + 1; j < n; ++j) {
      t.pair[i * n + j] = t.pair[j * n + i] = CosineSimilarity(e[j], e[i]);
    }
    for (std::size_t j = 0; j < t.m; ++j) {
      t.vc[i * t.m + j] = CosineSimilarity(e[i], bank.centroids[j]);
    }
    for (std::size_t q = 0; q < t.q; ++q) {
      t.vv[i * t.q + q] = CosineSimilarity(bank.voices[q], e[i]);
    }
  }
  for (std::size_t j = 0; j < t.m; ++j) t.cc[j] = CosineSimilarity(bank.centroids[j], c);
  for (std::size_t q = 0; q < t.q; ++q) t.cv[q] = CosineSimilarity(bank.voices[q], c);
  return t;
}

SimilarityTable WhiteBoxTable(SrsSession& session, std::span<const Voice> voices,
                              const EmbeddedBank& bank) {
  std::vector<Embedding> e;
  e.reserve(voices.size());
  for (const Voice& v : voices) e.push_back(session.Embed(v));
  return WhiteBoxTable(e, bank);
}

double Omega(SrsSession& session, std::span<const Voice> test, std::span<const Voice> enroll) {
  Require(!test.empty() && !enroll.empty(), ErrorCode::kEmptyInput,
          "omega needs test and enrollment voices");
  if (session.mode() == SrsAccessMode::kWhiteBox) {
    std::vector<Embedding> a;
    std::vector<Embedding> b;
    for (const Voice& v : test) a.push_back(session.Embed(v));
    for (const Voice& v : enroll) b.push_back(session.Embed(v));
    return CosineSimilarity(Centroid(a), Centroid(b));
  }
  Require(test.size() == 1, ErrorCode::kAccessModeViolation,
          "black-box omega takes a single test voice");
  const TemplateId id = session.EnrollCreate();
  for (const Voice& v : enroll) session.EnrollAdd(id, v);
  return session.Recognize(test.front(), id);
}

namespace {

void AddRefined(std::vector<SimilaritySet>& out, const std::string& base,
                const std::vector<std::vector<double>>& groups) {
  for (StatKind s : kAllStats) {
    SimilaritySet set;
    set.tag = base + "." + (s == StatKind::kNegStd ? "std" : std::string(StatName(s)));
    for (const auto& g : groups) set.values.push_back(Stat(g, s));
    out.push_back(std::move(set));
  }
}

std::vector<double> Negated(std::span<const double> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = -v[i];
  return out;
}

}  // namespace

std::vector<SimilaritySet> IntraSets(const SimilarityTable& t) {
  Require(t.n >= 2, ErrorCode::kNotEnoughVoices, "intra features need at least 2 voices");
  std::vector<SimilaritySet> out;
  out.push_back({"c", t.fc});
  SimilaritySet p{"p", {}};
  for (std::size_t i = 0; i < t.n; ++i) {
    for (std::size_t j = i + 1; j < t.n; ++j) p.values.push_back(t.pair[i * t.n + j]);
  }
  out.push_back(std::move(p));
  std::vector<std::vector<double>> rows(t.n);
  for (std::size_t i = 0; i < t.n; ++i) {
    for (std::size_t j = 0; j < t.n; ++j) {
      if (j != i) rows[i].push_back(t.pair[i * t.n + j]);
    }
  }
  AddRefined(out, "p~", rows);
  return out;
}

std::vector<SimilaritySet> InterSets(const SimilarityTable& t) {
  Require(t.m >= 1 && t.q >= 1, ErrorCode::kEmptyInput, "inter features need imposters");
  Require(t.n >= 1, ErrorCode::kEmptyInput, "inter features need a target voice");
  std::vector<SimilaritySet> out;
  out.push_back({"cc", Negated(t.cc)});
  const std::vector<double> cv = Negated(t.cv);
  out.push_back({"cv", cv});
  std::vector<std::vector<double>> per_imposter(t.m);
  for (std::size_t k = 0; k < t.q; ++k) per_imposter[t.imposter_of[k]].push_back(cv[k]);
  AddRefined(out, "cv~", per_imposter);

  const std::vector<double> vc = Negated(t.vc);
  out.push_back({"vc", vc});
  std::vector<std::vector<double>> rows(t.n), cols(t.m);
  for (std::size_t i = 0; i < t.n; ++i) {
    for (std::size_t j = 0; j < t.m; ++j) {
      rows[i].push_back(vc[i * t.m + j]);
      cols[j].push_back(vc[i * t.m + j]);
    }
  }
  AddRefined(out, "v~c", rows);
  AddRefined(out, "vc~", cols);

  const std::vector<double> vv = Negated(t.vv);
  out.push_back({"vv", vv});
  std::vector<std::vector<double>> vrows(t.n), vcols(t.q);
  for (std::size_t i = 0; i < t.n; ++i) {
    for (std::size_t k = 0; k < t.q; ++k) {
      vrows[i].push_back(vv[i * t.q + k]);
      vcols[k].push_back(vv[i * t.q + k]);
    }
  }
  AddRefined(out, "v~v", vrows);
  AddRefined(out, "vv~", vcols);
  return out;
}

namespace {

bool IsDuplicate(const std::string& set, StatKind stat) {
  static const std::map<std::string, std::vector<StatKind>> kDropped = {
      {"p~.avg", {StatKind::kAvg}},    {"p~.max", {StatKind::kMax}},
      {"p~.min", {StatKind::kMin}},    {"cv~.max", {StatKind::kMax}},
      {"cv~.min", {StatKind::kMin}},   {"v~c.avg", {StatKind::kAvg}},
      {"vc~.avg", {StatKind::kAvg}},   {"v~c.max", {StatKind::kMax}},
      {"vc~.max", {StatKind::kMax}},   {"v~c.min", {StatKind::kMin}},
      {"vc~.min", {StatKind::kMin}},   {"v~v.avg", {StatKind::kAvg}},
      {"vv~.avg", {StatKind::kAvg}},   {"v~v.max", {StatKind::kMax}},
      {"vv~.max", {StatKind::kMax}},   {"v~v.min", {StatKind::kMin}},
      {"vv~.min", {StatKind::kMin}},
  };
  auto it = kDropped.find(set);
  if (it == kDropped.end()) return false;
  return std::find(it->second.begin(), it->second.end(), stat) != it->second.end();
}

const std::vector<std::string>& IntraSetTags() {
  static const std::vector<std::string> kTags = {"c",      "p",      "p~.avg",
                                                 "p~.std", "p~.max", "p~.min"};
  return kTags;
}

const std::vector<std::string>& InterSetTags() {
  static const std::vector<std::string> kTags = [] {
    std::vector<std::string> t;
    const char* refined[] = {"avg", "std", "max", "min"};
    t.push_back("cc");
    t.push_back("cv");
    for (const char* r : refined) t.push_back(std::string("cv~.") + r);
    t.push_back("vc");
    for (const char* r : refined) t.push_back(std::string("v~c.") + r);
    for (const char* r : refined) t.push_back(std::string("vc~.") + r);
    t.push_back("vv");
    for (const char* r : refined) t.push_back(std::string("v~v.") + r);
    for (const char* r : refined) t.push_back(std::string("vv~.") + r);
    return t;
  }();
  return kTags;
}

void AppendFeatures(const std::vector<SimilaritySet>& sets, const char* block,
                    std::vector<std::string>* names, std::vector<double>* values) {
  for (const SimilaritySet& s : sets) {
    for (StatKind k : kAllStats) {
      if (IsDuplicate(s.tag, k)) continue;
      if (names) names->push_back(std::string(block) + "/" + s.tag + "/" + std::string(StatName(k)));
      if (values) values->push_back(Stat(s.values, k));
    }
  }
}

}  // namespace

const std::vector<std::string>& FeatureNames() {
  static const std::vector<std::string> kNames = [] {
    std::vector<std::string> names;
    std::vector<SimilaritySet> intra, inter;
    for (const auto& t : IntraSetTags()) intra.push_back({t, {}});
    for (const auto& t : InterSetTags()) inter.push_back({t, {}});
    AppendFeatures(intra, "intra", &names, nullptr);
    AppendFeatures(inter, "inter", &names, nullptr);
    return names;
  }();
  return kNames;
}

std::size_t FeatureIndex(std::string_view name) {
  const auto& names = FeatureNames();
  auto it = std::find(names.begin(), names.end(), name);
  Require(it != names.end(), ErrorCode::kInvalidArgument,
          "unknown feature '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names.begin());
}

const std::string& FeatureOrderHash() {
  static const std::string kHash = [] {
    std::string joined;
    for (const auto& n : FeatureNames()) joined += n + "\n";
    return Sha256Hex(joined);
  }();
  return kHash;
}

FeatureVector ComputeFeatures(const SimilarityTable& table) {
  const auto intra = IntraSets(table);
  const auto inter = InterSets(table);
  FeatureVector fv;
  fv.n = table.n;
  fv.m = table.m;
  fv.q = table.q;
  fv.values.reserve(kNumFeatures);
  AppendFeatures(intra, "intra", nullptr, &fv.values);
  AppendFeatures(inter, "inter", nullptr, &fv.values);
  Require(fv.values.size() == kNumFeatures, ErrorCode::kDegenerateData,
          "feature vector has the wrong length");
  for (double v : fv.values) {
    Require(std::isfinite(v), ErrorCode::kDegenerateData, "non-finite feature value");
  }
  return fv;
}

nlohmann::ordered_json FeatureVectorToJson(const FeatureVector& fv) {
  nlohmann::ordered_json j;
  j["speaker_id"] = fv.speaker_id;
  if (fv.label) j["label"] = *fv.label;
  j["r"] = fv.r ? nlohmann::ordered_json(*fv.r) : nlohmann::ordered_json(nullptr);
  j["N"] = fv.n;
  j["M"] = fv.m;
  j["Q"] = fv.q;
  j["chunked"] = fv.chunked;
  j["features"] = fv.values;
  return j;
}

FeatureVector FeatureVectorFromJson(const nlohmann::json& j) {
  FeatureVector fv;
  try {
    fv.speaker_id = j.at("speaker_id").get<std::string>();
    if (j.contains("label") && !j["label"].is_null()) fv.label = j["label"].get<int>();
    if (j.contains("r") && !j["r"].is_null()) fv.r = j["r"].get<double>();
    fv.n = j.at("N").get<std::size_t>();
    fv.m = j.at("M").get<std::size_t>();
    fv.q = j.at("Q").get<std::size_t>();
    fv.chunked = j.value("chunked", false);
    fv.values = j.at("features").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kFormatError, std::string("bad feature record: ") + e.what());
  }
  Require(fv.values.size() == kNumFeatures, ErrorCode::kFormatError,
          "feature record for '" + fv.speaker_id + "' does not hold 103 values");
  return fv;
}

void WriteFeatureCache(const std::filesystem::path& path, std::span<const FeatureVector> rows) {
  std::string out;
  for (const auto& fv : rows) out += FeatureVectorToJson(fv).dump() + "\n";
  WriteFileAtomic(path, out);
}

std::vector<FeatureVector> ReadFeatureCache(const std::filesystem::path& path) {
  std::istringstream in(ReadFile(path));
  std::vector<FeatureVector> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorCode::kFormatError, path.string() + ": " + e.what());
    }
    rows.push_back(FeatureVectorFromJson(j));
  }
  return rows;
}

BaselineMode ParseBaselineMode(std::string_view name) {
  if (name == "sorted-pairwise") return BaselineMode::kSortedPairwise;
  if (name == "raw-centroid") return BaselineMode::kRawCentroidScores;
  if (name == "centroid-plus-imposter") return BaselineMode::kCentroidPlusImposterScores;
  Fail(ErrorCode::kInvalidArgument, "unknown baseline mode '" + std::string(name) + "'");
}

std::vector<double> BaselineFeatures(const SimilarityTable& t, BaselineMode mode) {
  std::vector<double> out;
  switch (mode) {
    case BaselineMode::kSortedPairwise:
      Require(t.n >= 2, ErrorCode::kNotEnoughVoices, "pairwise scores need 2 voices");
      for (std::size_t i = 0; i < t.n; ++i) {
        for (std::size_t j = i + 1; j < t.n; ++j) out.push_back(t.pair[i * t.n + j]);
      }
      std::sort(out.begin(), out.end());
      break;
    case BaselineMode::kRawCentroidScores:
      out = t.fc;
      break;
    case BaselineMode::kCentroidPlusImposterScores:
      out = t.fc;
      out.insert(out.end(), t.vc.begin(), t.vc.end());
      break;
  }
  return out;
}

std::vector<std::vector<double>> BaselineFeatureMatrix(std::span<const SimilarityTable> tables,
                                                       BaselineMode mode) {
  std::vector<std::vector<double>> rows;
  for (const auto& t : tables) {
    Require(t.n == tables.front().n && t.m == tables.front().m, ErrorCode::kDimensionMismatch,
            "baseline features need the same N and M for every speaker");
    rows.push_back(BaselineFeatures(t, mode));
  }
  return rows;
}

}  // namespace spkmia
