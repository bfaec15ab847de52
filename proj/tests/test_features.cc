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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "spkmia/chunking.h"
#include "spkmia/dataset.h"
#include "spkmia/error.h"
#include "spkmia/features.h"
#include "spkmia/partition.h"
#include "spkmia/query_plan.h"
#include "spkmia/rng.h"
#include "spkmia/srs.h"
#include "spkmia/synthetic_srs.h"
#include "spkmia/vector_math.h"
#include "support/oracles.h"
#include "support/test_util.h"

namespace spkmia {
namespace {

using testing::CodeOf;
using testing::TempDir;
using namespace oracle;

Embedding E(std::vector<double> v) { return Embedding(std::move(v)); }

TEST(Stat, Examples) {
  const std::vector<double> five{5};
  EXPECT_EQ(Stat(five, StatKind::kNegStd), 0.0);
  const std::vector<double> v{1, 3};
  EXPECT_EQ(Stat(v, StatKind::kAvg), 2.0);
  EXPECT_EQ(Stat(v, StatKind::kMax), 3.0);
  EXPECT_EQ(Stat(v, StatKind::kMin), 1.0);
  EXPECT_EQ(Stat(v, StatKind::kNegStd), -1.0);
  EXPECT_EQ(CodeOf([] { Stat(std::vector<double>{}, StatKind::kAvg); }), ErrorCode::kEmptyInput);
}

TEST(Stat, PermutationInvariantAndShiftEquivariant) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> v(1 + static_cast<std::size_t>(rng.UniformInt(0, 30)));
    for (auto& x : v) x = rng.Uniform(-1, 1);
    std::vector<double> shuffled = v;
    rng.Shuffle(shuffled);
    const double shift = rng.Uniform(-0.5, 0.5);
    std::vector<double> shifted = v;
    for (auto& x : shifted) x += shift;
    for (StatKind k : kAllStats) {
      ASSERT_NEAR(Stat(v, k), Stat(shuffled, k), 1e-12);
      const double expect = k == StatKind::kNegStd ? Stat(v, k) : Stat(v, k) + shift;
      ASSERT_NEAR(Stat(shifted, k), expect, 1e-12);
    }
  }
}

TEST(Omega, Examples) {
  SynthParams p;
  p.num_speakers = 10;
  const Dataset d = SynthesizeDataset(p);
  const auto srs = SyntheticSrs::Train({}, d.AllVoices());
  const auto v = d.VoicesOf(d.speakers()[0]);
  SrsSession white(srs, SrsAccessMode::kWhiteBox);
  SrsSession black(srs, SrsAccessMode::kBlackBoxVerification);
  EXPECT_NEAR(Omega(white, v.subspan(0, 1), v.subspan(0, 1)), 1.0, 1e-12);
  EXPECT_NEAR(Omega(black, v.subspan(0, 1), v.subspan(0, 1)), 1.0, 1e-12);
  for (std::size_t k = 1; k < v.size(); ++k) {
    EXPECT_NEAR(Omega(black, v.subspan(k, 1), v.subspan(0, k)),
                Omega(white, v.subspan(k, 1), v.subspan(0, k)), 1e-12);
  }
  EXPECT_EQ(CodeOf([&] { Omega(black, v.subspan(0, 2), v.subspan(2, 1)); }),
            ErrorCode::kAccessModeViolation);
  const auto table = WhiteBoxTable(std::vector<Embedding>{E({1, 0})},
                                   MakeBank({{E({1, 0}), E({0, 1})}}));
  EXPECT_NEAR(table.vc[0], 1 / std::sqrt(2.0), 1e-15);
}

TEST(IntraSets, WorkedCases) {
  const auto bank = MakeBank({{E({0, 1})}});
  const auto t = WhiteBoxTable(std::vector<Embedding>{E({1, 0}), E({0, 1})}, bank);
  const auto sets = IntraSets(t);
  ASSERT_EQ(sets.size(), 6u);
  EXPECT_EQ(sets[0].tag, "c");
  EXPECT_NEAR(sets[0].values[0], 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(sets[0].values[1], 1 / std::sqrt(2.0), 1e-15);
  ASSERT_EQ(sets[1].values.size(), 1u);
  EXPECT_NEAR(sets[1].values[0], 0.0, 1e-15);

  const std::vector<Embedding> same(4, E({0.3, 0.4}));
  for (const auto& s : IntraSets(WhiteBoxTable(same, bank))) {
    for (double x : s.values) {
      if (s.tag == "p~.std") {
        EXPECT_NEAR(x, 0.0, 1e-12);
      } else {
        EXPECT_NEAR(x, 1.0, 1e-12) << s.tag;
      }
    }
  }
  EXPECT_EQ(CodeOf([&] { IntraSets(WhiteBoxTable(std::vector<Embedding>{E({1, 0})}, bank)); }),
            ErrorCode::kNotEnoughVoices);
}

TEST(IntraSets, RowMeansOfOffDiagonal) {
  Rng rng(9);
  const Instance inst = RandomInstance(rng, 3, {1});
  const auto sets = IntraSets(WhiteBoxTable(inst.target, MakeBank(inst.imposters)));
  ASSERT_EQ(sets[2].tag, "p~.avg");
  for (std::size_t i = 0; i < 3; ++i) {
    double sum = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      if (i != j) sum += CosineSimilarity(inst.target[i], inst.target[j]);
    }
    EXPECT_NEAR(sets[2].values[i], sum / 2, 1e-12);
  }
}

TEST(InterSets, CoincidentAndOrthogonal) {
  const auto t1 = WhiteBoxTable(std::vector<Embedding>{E({0.6, 0.8})},
                                MakeBank({{E({0.6, 0.8})}}));
  const auto inter = InterSets(t1);
  ASSERT_EQ(inter[0].tag, "cc");
  EXPECT_NEAR(inter[0].values[0], -1.0, 1e-15);

  const auto t2 = WhiteBoxTable(std::vector<Embedding>{E({1, 0, 0}), E({2, 0, 0})},
                                MakeBank({{E({0, 1, 0}), E({0, 0, 1})}, {E({0, 2, 1})}}));
  const auto fv = ComputeFeatures(t2);
  for (std::size_t f = kNumIntraFeatures; f < kNumFeatures; ++f) {
    EXPECT_EQ(fv.values[f], 0.0) << FeatureNames()[f];
  }
  EXPECT_EQ(CodeOf([] {
              SimilarityTable t = SimilarityTable::Empty(2, std::vector<std::size_t>{});
              InterSets(t);
            }),
            ErrorCode::kEmptyInput);
}

TEST(InterSets, CardinalitiesAndBruteForce) {
  Rng rng(21);
  const Instance inst = RandomInstance(rng, 2, {2, 2});
  const auto table = WhiteBoxTable(inst.target, MakeBank(inst.imposters));
  const auto intra = IntraSets(table);
  const auto inter = InterSets(table);
  ASSERT_EQ(inter.size(), 24u);
  const std::map<std::string, std::size_t> sizes = {
      {"c", 2}, {"p", 1}, {"p~.avg", 2}, {"cc", 2}, {"cv", 4}, {"cv~.std", 2}, {"vc", 4},
      {"v~c.max", 2}, {"vc~.min", 2}, {"vv", 8}, {"v~v.avg", 2}, {"vv~.std", 4}};
  for (const auto& set : intra) {
    if (sizes.count(set.tag)) EXPECT_EQ(set.values.size(), sizes.at(set.tag)) << set.tag;
  }
  for (const auto& set : inter) {
    if (sizes.count(set.tag)) EXPECT_EQ(set.values.size(), sizes.at(set.tag)) << set.tag;
  }
  const auto oracle = OracleOf(inst);
  for (const auto& [block, sets] : {std::pair{"intra", intra}, std::pair{"inter", inter}}) {
    for (const auto& set : sets) {
      for (StatKind k : kAllStats) {
        const std::string key = std::string(block) + "/" + set.tag + "/" + std::string(StatName(k));
        ASSERT_TRUE(oracle.count(key)) << key;
        EXPECT_NEAR(Stat(set.values, k), oracle.at(key), 1e-12) << key;
      }
    }
  }
}

TEST(Features, NamesAreCanonical) {
  const auto& names = FeatureNames();
  ASSERT_EQ(names.size(), 103u);
  EXPECT_EQ(std::set<std::string>(names.begin(), names.end()).size(), 103u);
  std::size_t intra = 0;
  for (const auto& n : names) intra += n.rfind("intra/", 0) == 0;
  EXPECT_EQ(intra, 21u);
  EXPECT_EQ(names.front(), "intra/c/avg");
  EXPECT_EQ(names[kNumIntraFeatures], "inter/cc/avg");
  EXPECT_EQ(FeatureIndex("intra/p/avg"), 4u);
  EXPECT_EQ(CodeOf([] { FeatureIndex("intra/p~.avg/avg"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(FeatureOrderHash().size(), 64u);
}

TEST(Features, MatchOracleAndDedupIdentities) {
  Rng rng(33);
  std::set<std::string> dropped;
  for (const auto& g : DedupGroups()) dropped.insert(g.begin() + 1, g.end());
  EXPECT_EQ(dropped.size(), 3u + 2u + 12u);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.UniformInt(0, 5));
    std::vector<std::size_t> k(1 + static_cast<std::size_t>(rng.UniformInt(0, 4)));
    for (auto& x : k) x = 1 + static_cast<std::size_t>(rng.UniformInt(0, 3));
    const Instance inst = RandomInstance(rng, n, k);
    const auto oracle = OracleOf(inst);
    ASSERT_EQ(oracle.size(), 120u);
    for (const auto& g : DedupGroups()) {
      for (const auto& name : g) ASSERT_NEAR(oracle.at(name), oracle.at(g[0]), 1e-9) << name;
    }
    const FeatureVector fv = ComputeFeatures(WhiteBoxTable(inst.target, MakeBank(inst.imposters)));
    ASSERT_EQ(fv.values.size(), 103u);
    EXPECT_EQ(fv.n, n);
    EXPECT_EQ(fv.m, k.size());
    std::size_t kept = 0;
    for (const auto& [name, value] : oracle) {
      if (dropped.count(name)) continue;
      ++kept;
      ASSERT_NEAR(fv.values[FeatureIndex(name)], value, 1e-12) << name;
    }
    EXPECT_EQ(kept, 103u);
  }
}

TEST(Features, CacheRoundTrip) {
  Rng rng(4);
  const Instance inst = RandomInstance(rng, 4, {2, 3});
  FeatureVector fv = ComputeFeatures(WhiteBoxTable(inst.target, MakeBank(inst.imposters)));
  fv.speaker_id = "spk7";
  fv.label = 1;
  fv.r = 0.5;
  fv.chunked = true;
  FeatureVector other = fv;
  other.speaker_id = "spk8";
  other.label.reset();
  other.r.reset();
  TempDir dir("features");
  WriteFeatureCache(dir / "f.jsonl", std::vector<FeatureVector>{fv, other});
  const auto back = ReadFeatureCache(dir / "f.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].speaker_id, "spk7");
  EXPECT_EQ(back[0].label, 1);
  EXPECT_EQ(back[0].r, 0.5);
  EXPECT_TRUE(back[0].chunked);
  EXPECT_EQ(back[0].q, 5u);
  EXPECT_EQ(back[0].values, fv.values);
  EXPECT_FALSE(back[1].label.has_value());
  const auto j = FeatureVectorToJson(fv);
  for (const char* key : {"speaker_id", "label", "r", "N", "M", "Q", "chunked", "features"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
}

TEST(Baseline, ModesAndLengths) {
  // Three unit vectors at angles whose pairwise cosines are 0.2, 0.8, 0.5.
  const double a01 = std::acos(0.2), a02 = std::acos(0.8);
  const double y2 = (0.5 - std::cos(a02) * std::cos(a01)) / std::sin(a01);
  const std::vector<Embedding> e{
      E({1, 0, 0}), E({std::cos(a01), std::sin(a01), 0}),
      E({std::cos(a02), y2, std::sqrt(1 - std::cos(a02) * std::cos(a02) - y2 * y2)})};
  const auto bank = MakeBank({{E({0, 0, 1})}, {E({0, 1, 0}), E({1, 1, 1})}});
  const auto t = WhiteBoxTable(e, bank);
  const auto sorted = BaselineFeatures(t, BaselineMode::kSortedPairwise);
  ASSERT_EQ(sorted.size(), 3u);
  EXPECT_NEAR(sorted[0], 0.2, 1e-12);
  EXPECT_NEAR(sorted[1], 0.5, 1e-12);
  EXPECT_NEAR(sorted[2], 0.8, 1e-12);
  EXPECT_EQ(BaselineFeatures(t, BaselineMode::kRawCentroidScores).size(), 3u);
  EXPECT_EQ(BaselineFeatures(t, BaselineMode::kCentroidPlusImposterScores).size(), 3u + 3u * 2u);
  for (double x : BaselineFeatures(WhiteBoxTable(std::vector<Embedding>(4, E({1, 2, 3})), bank),
                                   BaselineMode::kSortedPairwise)) {
    EXPECT_NEAR(x, 1.0, 1e-12);
  }
  const std::vector<SimilarityTable> mixed{t, WhiteBoxTable(std::vector<Embedding>(4, E({1, 2, 3})), bank)};
  EXPECT_EQ(CodeOf([&] { BaselineFeatureMatrix(mixed, BaselineMode::kSortedPairwise); }),
            ErrorCode::kDimensionMismatch);
  EXPECT_EQ(ParseBaselineMode("sorted-pairwise"), BaselineMode::kSortedPairwise);
}

// Synthetic corpus with a trained SRS; members' held-out voices vs outsiders.
class SyntheticFeatures : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SynthParams p;
    p.num_speakers = 230;
    p.seed = 31;
    data_ = new Dataset(SynthesizeDataset(p));
  }
  static void TearDownTestSuite() { delete data_; }

  static ImposterBank Bank(std::size_t first, std::size_t m, std::size_t k) {
    ImposterBank bank;
    for (std::size_t j = first; j < first + m; ++j) {
      const auto& id = data_->speakers()[j];
      bank.speaker_ids.push_back(id);
      const auto v = data_->VoicesOf(id);
      bank.voices.emplace_back(v.begin(), v.begin() + static_cast<long>(k));
    }
    return bank;
  }
  // Every voice cut to the shortest duration the corpus can produce.
  static ImposterBank EqualLength(ImposterBank bank) {
    const std::size_t len = MsToSamples(5600, 1600);
    for (auto& voices : bank.voices) {
      for (auto& v : voices) {
        v = Voice(v.speaker_id(), v.voice_id(),
                  {v.samples().begin(), v.samples().begin() + static_cast<long>(len)},
                  v.sample_rate());
      }
    }
    return bank;
  }
  static Dataset* data_;
};

Dataset* SyntheticFeatures::data_ = nullptr;

TEST_F(SyntheticFeatures, BlackBoxAgreesWithWhiteBox) {
  std::vector<Voice> train;
  for (std::size_t s = 0; s < 20; ++s) {
    for (const auto& v : data_->VoicesOf(data_->speakers()[s])) train.push_back(v);
  }
  SyntheticSrsConfig c;
  const auto srs = SyntheticSrs::Train(c, train);
  const ImposterBank bank = EqualLength(Bank(200, 5, 3));
  SrsSession white(srs, SrsAccessMode::kWhiteBox);
  const EmbeddedBank eb = EmbedImposters(white, bank);
  for (std::size_t s = 0; s < 30; s += 3) {
    const auto voices = data_->VoicesOf(data_->speakers()[s]).subspan(0, 4);
    const FeatureVector wb = ComputeFeatures(WhiteBoxTable(white, voices, eb));
    for (auto mode : {SrsAccessMode::kBlackBoxVerification, SrsAccessMode::kBlackBoxIdentification}) {
      SrsSession black(srs, mode);
      const FeatureVector bb = BlackBoxFeatures(black, voices, bank, Technique{});
      for (std::size_t f = 0; f < kNumFeatures; ++f) {
        const bool cc = FeatureNames()[f].rfind("inter/cc/", 0) == 0;
        ASSERT_NEAR(bb.values[f], wb.values[f], cc ? 0.05 : 1e-9) << FeatureNames()[f];
      }
    }
  }
}

TEST_F(SyntheticFeatures, WhiteBoxQueryCount) {
  const auto srs = SyntheticSrs::Train({}, data_->VoicesOf(data_->speakers()[0]));
  SrsSession white(srs, SrsAccessMode::kWhiteBox);
  const ImposterBank bank = Bank(100, 20, 8);
  const EmbeddedBank eb = EmbedImposters(white, bank);
  WhiteBoxTable(white, data_->VoicesOf(data_->speakers()[1]).subspan(0, 8), eb);
  EXPECT_EQ(white.counts().embed, WhiteBoxCount(8, 160));
}

TEST_F(SyntheticFeatures, TrainingSpeakersLookMoreCohesive) {
  std::vector<Voice> train;
  std::vector<std::vector<Voice>> members, outsiders;
  for (std::size_t s = 0; s < 100; ++s) {
    const auto voices = data_->VoicesOf(data_->speakers()[s]);
    std::vector<std::string> ids;
    for (const auto& v : voices) ids.push_back(v.voice_id());
    const auto split = SplitMemberVoices(ids, s);
    members.emplace_back();
    for (const auto& v : voices) {
      const bool in = std::count(split.train.begin(), split.train.end(), v.voice_id()) > 0;
      (in ? train : members.back()).push_back(v);
    }
  }
  for (std::size_t s = 100; s < 200; ++s) {
    const auto voices = data_->VoicesOf(data_->speakers()[s]);
    outsiders.emplace_back(voices.begin(), voices.begin() + 4);
  }
  SyntheticSrsConfig c;
  c.gamma = 0.9;
  const auto srs = SyntheticSrs::Train(c, train);
  SrsSession white(srs, SrsAccessMode::kWhiteBox);
  const EmbeddedBank eb = EmbedImposters(white, Bank(200, 20, 4));
  auto mean_feature = [&](const std::vector<std::vector<Voice>>& group, const char* name) {
    double sum = 0;
    for (const auto& voices : group) {
      sum += ComputeFeatures(WhiteBoxTable(white, voices, eb)).values[FeatureIndex(name)];
    }
    return sum / static_cast<double>(group.size());
  };
  EXPECT_GT(mean_feature(members, "intra/p/avg"), mean_feature(outsiders, "intra/p/avg"));
  EXPECT_GT(mean_feature(members, "inter/v~v.max/avg"),
            mean_feature(outsiders, "inter/v~v.max/avg"));
}

}  // namespace
}  // namespace spkmia
