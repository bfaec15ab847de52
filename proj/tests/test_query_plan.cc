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

#include <atomic>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "spkmia/dataset.h"
#include "spkmia/error.h"
#include "spkmia/features.h"
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
using G = FeatureGroup;
using oracle::TableOne;

constexpr auto kIdent = SrsAccessMode::kBlackBoxIdentification;
constexpr auto kVerif = SrsAccessMode::kBlackBoxVerification;

std::vector<std::size_t> Uniform(std::size_t m, std::size_t k) {
  return std::vector<std::size_t>(m, k);
}

TEST(PredictCounts, PaperExamples) {
  const auto k = Uniform(20, 10);
  const Technique base{}, both{true, true, false}, all{true, true, true};
  EXPECT_EQ(PredictCounts(FeatureGroup::kVoiceCentroid, 10, k, base, kIdent).total(), 400u);
  EXPECT_EQ(PredictCounts(FeatureGroup::kVoiceCentroid, 10, k, both, kIdent).total(), 30u);
  EXPECT_EQ(PredictCounts(FeatureGroupSet::All(), 10, k, all, kIdent),
            (PlanCounts{11, 230}));
  EXPECT_EQ(PredictCounts(FeatureGroupSet::All(), 10, k, all, kIdent).total(), 241u);
  EXPECT_EQ(PredictCounts(FeatureGroup::kPairwise, 2, k, base, kVerif), (PlanCounts{1, 1}));
  EXPECT_EQ(PredictCounts(FeatureGroup::kVoiceVoice, 10, k, Technique{false, true, false}, kIdent),
            (PlanCounts{10, 200}));
  EXPECT_EQ(PredictCounts(FeatureGroup::kPairwise, 10, k, base, kVerif).total(), (10u - 1) * (10 + 2) / 2);
}

TEST(PredictCounts, ModeMismatch) {
  const auto k = Uniform(2, 2);
  EXPECT_EQ(CodeOf([&] { PredictCounts(FeatureGroup::kVoiceVoice, 3, k, {false, true, false}, kVerif); }),
            ErrorCode::kTechniqueModeMismatch);
  EXPECT_EQ(CodeOf([&] { PredictCounts(FeatureGroup::kVoiceVoice, 3, k, {}, SrsAccessMode::kWhiteBox); }),
            ErrorCode::kAccessModeViolation);
  EXPECT_EQ(CodeOf([&] { PredictCounts(FeatureGroup::kVoiceVoice, 0, k, {}, kIdent); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([&] { PredictCounts(FeatureGroup::kVoiceVoice, 2, std::vector<std::size_t>{}, {}, kIdent); }),
            ErrorCode::kInvalidArgument);
}

TEST(PredictCounts, RandomTuplesMatchClosedFormsAndAreMonotone) {
  Rng rng(101);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.UniformInt(0, 14));
    std::vector<std::size_t> k(1 + static_cast<std::size_t>(rng.UniformInt(0, 24)));
    std::uint64_t q = 0;
    for (auto& x : k) q += (x = 1 + static_cast<std::size_t>(rng.UniformInt(0, 11)));
    for (const auto& row : TableOneRows(n, k)) {
      if (row.group == "all") {
        EXPECT_EQ(row.counts, (PlanCounts{1 + n, n + k.size() + q}));
        EXPECT_EQ(row.counts.total(), 2 * n + k.size() + q + 1);
        continue;
      }
      const PlanCounts want = TableOne(ParseFeatureGroup(row.group), row.technique, n, k.size(), q);
      if (row.group == "pairwise" && n < 2) continue;
      ASSERT_EQ(row.counts, want) << row.group << " " << TechniqueName(row.technique);
    }
    for (std::uint32_t bits = 1; bits < 64; ++bits) {
      FeatureGroupSet groups;
      for (G g : kAllFeatureGroups) {
        if (bits & (1u << static_cast<int>(g))) groups.Insert(g);
      }
      for (int tech = 0; tech < 8; ++tech) {
        const Technique cur{(tech & 1) != 0, (tech & 2) != 0, (tech & 4) != 0};
        const PlanCounts c = PredictCounts(groups, n, k, cur, kIdent);
        for (int flag = 0; flag < 3; ++flag) {
          if (tech & (1 << flag)) continue;
          const int more = tech | (1 << flag);
          const Technique next{(more & 1) != 0, (more & 2) != 0, (more & 4) != 0};
          const PlanCounts d = PredictCounts(groups, n, k, next, kIdent);
          ASSERT_LE(d.enrollment, c.enrollment) << bits << " " << tech << "->" << more;
          ASSERT_LE(d.recognition, c.recognition) << bits << " " << tech << "->" << more;
        }
      }
    }
  }
}

TEST(WhiteBoxCount, Examples) {
  EXPECT_EQ(WhiteBoxCount(10, 200), 210u);
  EXPECT_EQ(WhiteBoxCount(1, 1), 2u);
  EXPECT_EQ(CodeOf([] { WhiteBoxCount(0, 3); }), ErrorCode::kInvalidArgument);
}

TEST(QueryCountsCsv, Format) {
  const auto rows = TableOneRows(10, Uniform(20, 10));
  const std::string csv = QueryCountsCsv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "group,technique,N,M,Q,enrollment,recognition,total");
  EXPECT_NE(csv.find("\nvoice-centroid,concat+group,10,20,200,20,10,30\n"), std::string::npos);
  EXPECT_NE(csv.find("\nall,concat+group+share,10,20,200,11,230,241\n"), std::string::npos);
}

class PlanExecution : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    SynthParams p;
    p.num_speakers = 40;
    p.min_voices = 8;
    p.max_voices = 8;
    p.min_duration_ms = 400;
    p.max_duration_ms = 700;
    p.seed = 3;
    data_ = new Dataset(SynthesizeDataset(p));
    std::vector<Voice> train;
    for (std::size_t s = 0; s < 10; ++s) {
      for (const auto& v : data_->VoicesOf(data_->speakers()[s])) train.push_back(v);
    }
    SyntheticSrsConfig c;
    c.gamma = 0.5;
    srs_ = new std::shared_ptr<SyntheticSrs>(SyntheticSrs::Train(c, train));
  }
  static void TearDownTestSuite() {
    delete srs_;
    delete data_;
  }

  static std::vector<Voice> Target(std::size_t s, std::size_t n) {
    const auto v = data_->VoicesOf(data_->speakers()[s]);
    return {v.begin(), v.begin() + static_cast<long>(n)};
  }
  static ImposterBank Bank(std::size_t first, std::span<const std::size_t> k) {
    ImposterBank bank;
    for (std::size_t j = 0; j < k.size(); ++j) {
      const auto& id = data_->speakers()[first + j];
      const auto v = data_->VoicesOf(id);
      bank.speaker_ids.push_back(id);
      bank.voices.emplace_back(v.begin(), v.begin() + static_cast<long>(k[j]));
    }
    return bank;
  }

  static Dataset* data_;
  static std::shared_ptr<SyntheticSrs>* srs_;
};

Dataset* PlanExecution::data_ = nullptr;
std::shared_ptr<SyntheticSrs>* PlanExecution::srs_ = nullptr;

TEST_F(PlanExecution, LedgerEqualsPredictionForTableRows) {
  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.UniformInt(0, 6));
    std::vector<std::size_t> k(1 + static_cast<std::size_t>(rng.UniformInt(0, 5)));
    for (auto& x : k) x = 1 + static_cast<std::size_t>(rng.UniformInt(0, 4));
    const auto target = Target(20 + static_cast<std::size_t>(t % 10), n);
    const ImposterBank bank = Bank(30, k);
    for (const auto& row : TableOneRows(n, k)) {
      const FeatureGroupSet groups =
          row.group == "all" ? FeatureGroupSet::All() : FeatureGroupSet{ParseFeatureGroup(row.group)};
      const QueryPlan plan = BuildQueryPlan(groups, n, k, row.technique, kIdent);
      ASSERT_EQ(plan.counts(), row.counts) << row.group << " " << TechniqueName(row.technique);
      SrsSession session(*srs_, kIdent);
      ExecutePlan(plan, session, target, bank);
      const QueryCounts c = session.counts();
      ASSERT_EQ(c.enroll, row.counts.enrollment) << row.group << " " << TechniqueName(row.technique);
      ASSERT_EQ(c.recognize, row.counts.recognition) << row.group;
      ASSERT_EQ(c.embed, 0u);
    }
  }
}

TEST_F(PlanExecution, RandomGroupSetsMatchPrediction) {
  Rng rng(8);
  for (int t = 0; t < 150; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.UniformInt(0, 4));
    std::vector<std::size_t> k(1 + static_cast<std::size_t>(rng.UniformInt(0, 3)));
    for (auto& x : k) x = 1 + static_cast<std::size_t>(rng.UniformInt(0, 3));
    FeatureGroupSet groups;
    while (groups.empty()) {
      for (G g : kAllFeatureGroups) {
        if (rng.Uniform01() < 0.5) groups.Insert(g);
      }
    }
    const Technique tech{rng.Uniform01() < 0.5, rng.Uniform01() < 0.5, rng.Uniform01() < 0.5};
    const auto mode = tech.group || rng.Uniform01() < 0.5 ? kIdent : kVerif;
    const QueryPlan plan = BuildQueryPlan(groups, n, k, tech, mode);
    const PlanCounts want = PredictCounts(groups, n, k, tech, mode);
    ASSERT_EQ(plan.counts(), want);
    SrsSession session(*srs_, mode);
    ExecutePlan(plan, session, Target(25, n), Bank(30, k));
    ASSERT_EQ(session.counts().enroll, want.enrollment);
    ASSERT_EQ(session.counts().recognize, want.recognition);
  }
}

void ExpectSameTable(const SimilarityTable& a, const SimilarityTable& b) {
  EXPECT_EQ(a.fc, b.fc);
  EXPECT_EQ(a.pair, b.pair);
  EXPECT_EQ(a.cc, b.cc);
  EXPECT_EQ(a.cv, b.cv);
  EXPECT_EQ(a.vc, b.vc);
  EXPECT_EQ(a.vv, b.vv);
}

TEST_F(PlanExecution, GroupChangesCountsNotScores) {
  const std::vector<std::size_t> k{3, 2, 4};
  const auto target = Target(22, 5);
  const ImposterBank bank = Bank(30, k);
  for (bool concat : {false, true}) {
    for (bool share : {false, true}) {
      SrsSession plain(*srs_, kIdent), grouped(*srs_, kIdent), verif(*srs_, kVerif);
      const auto all = FeatureGroupSet::All();
      const auto a = ExecutePlan(BuildQueryPlan(all, 5, k, {concat, false, share}, kIdent), plain,
                                 target, bank);
      const auto b = ExecutePlan(BuildQueryPlan(all, 5, k, {concat, true, share}, kIdent), grouped,
                                 target, bank);
      const auto c = ExecutePlan(BuildQueryPlan(all, 5, k, {concat, false, share}, kVerif), verif,
                                 target, bank);
      ExpectSameTable(a, b);
      ExpectSameTable(a, c);
      EXPECT_LT(grouped.counts().recognize, plain.counts().recognize);
      const FeatureVector fa = ComputeFeatures(a);
      const FeatureVector fb = ComputeFeatures(b);
      EXPECT_EQ(fa.values, fb.values);
    }
  }
}

TEST_F(PlanExecution, ShareEnrollsTheTargetCentroidOnce) {
  const FeatureGroupSet groups{G::kCentroid, G::kCentroidCentroid, G::kCentroidVoice};
  const std::vector<std::size_t> k{2, 2};
  auto centroid_templates = [&](bool share) {
    const QueryPlan plan = BuildQueryPlan(groups, 4, k, {false, false, share}, kIdent);
    std::size_t count = 0;
    for (const auto& t : plan.templates) count += t.kind == TemplateKind::kTargetCentroid;
    return count;
  };
  EXPECT_EQ(centroid_templates(true), 1u);
  EXPECT_EQ(centroid_templates(false), 3u);
}

TEST_F(PlanExecution, AllRowMatchesPaperClosedForm) {
  const auto k = Uniform(20, 10);
  const QueryPlan plan = BuildQueryPlan(FeatureGroupSet::All(), 10, k, {true, true, true}, kIdent);
  EXPECT_EQ(plan.counts().total(), 241u);
  for (std::size_t r = 1; r < plan.recognitions.size(); ++r) {
    // Templates come first; recognitions never enroll.
    EXPECT_FALSE(plan.recognitions[r].templates.empty());
  }
}

TEST_F(PlanExecution, PlanMismatchesAreRejected) {
  const std::vector<std::size_t> k{2};
  const QueryPlan plan = BuildQueryPlan(FeatureGroupSet::All(), 3, k, {}, kVerif);
  SrsSession ident(*srs_, kIdent);
  EXPECT_EQ(CodeOf([&] { ExecutePlan(plan, ident, Target(21, 3), Bank(30, k)); }),
            ErrorCode::kAccessModeViolation);
  SrsSession verif(*srs_, kVerif);
  EXPECT_EQ(CodeOf([&] { ExecutePlan(plan, verif, Target(21, 2), Bank(30, k)); }),
            ErrorCode::kDimensionMismatch);
  EXPECT_EQ(CodeOf([&] { ExecutePlan(plan, verif, Target(21, 3), Bank(30, std::vector<std::size_t>{3})); }),
            ErrorCode::kDimensionMismatch);
}

// Fails every embed after the first `budget`.
class FlakyModel : public EmbeddingModel {
 public:
  FlakyModel(std::shared_ptr<const EmbeddingModel> inner, int budget)
      : inner_(std::move(inner)), budget_(budget) {}
  std::size_t dim() const override { return inner_->dim(); }
  Embedding Embed(const Voice& v) const override {
    if (budget_-- <= 0) Fail(ErrorCode::kBackendError, "backend went away");
    return inner_->Embed(v);
  }

 private:
  std::shared_ptr<const EmbeddingModel> inner_;
  mutable std::atomic<int> budget_;
};

TEST_F(PlanExecution, AbortCarriesPartialLedger) {
  const std::vector<std::size_t> k{2, 2};
  const QueryPlan plan = BuildQueryPlan(FeatureGroupSet::All(), 3, k, {}, kIdent);
  SrsSession session(std::make_shared<FlakyModel>(*srs_, 5), kIdent);
  try {
    ExecutePlan(plan, session, Target(21, 3), Bank(30, k));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackendError);
    const std::string what = e.what();
    EXPECT_EQ(what.find("backend error: backend went away"), 0u) << what;
    EXPECT_NE(what.find("ledger enroll=5 recognize=0"), std::string::npos) << what;
  }
}

TEST_F(PlanExecution, ConcatVoices) {
  const auto v = Target(20, 2);
  const Voice one = ConcatVoices(std::span<const Voice>(v.data(), 1));
  EXPECT_TRUE(std::equal(one.samples().begin(), one.samples().end(), v[0].samples().begin(),
                         v[0].samples().end()));
  const Voice two = ConcatVoices(v);
  ASSERT_EQ(two.num_samples(), v[0].num_samples() + v[1].num_samples());
  EXPECT_DOUBLE_EQ(two.duration_ms(), v[0].duration_ms() + v[1].duration_ms());
  EXPECT_EQ(two.samples()[v[0].num_samples()], v[1].samples()[0]);
  const std::vector<Voice> reversed{v[1], v[0]};
  const Voice sorted = ConcatSorted(reversed);
  EXPECT_EQ(sorted.samples()[0], v[0].samples()[0]);
  const std::vector<Voice> mixed{v[0], Voice("x", "y", {0.1f}, 8000)};
  EXPECT_EQ(CodeOf([&] { ConcatVoices(mixed); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { ConcatVoices(std::vector<Voice>{}); }), ErrorCode::kEmptyInput);
}

TEST_F(PlanExecution, ConcatApproximatesCentroidForEqualLengths) {
  SynthParams p;
  p.num_speakers = 30;
  p.session_sigma = 0.0;
  p.seed = 12;
  const Dataset d = SynthesizeDataset(p);
  const auto srs = SyntheticSrs::Train({}, d.VoicesOf(d.speakers()[0]));
  const std::size_t len = 4000 * 16 / 10;  // 4 s at 1600 Hz
  for (const auto& spk : d.speakers()) {
    const auto vs = d.VoicesOf(spk);
    std::vector<Voice> pair;
    for (std::size_t i = 0; i < 2; ++i) {
      pair.emplace_back(spk, vs[i].voice_id(),
                        std::vector<float>(vs[i].samples().begin(),
                                           vs[i].samples().begin() + static_cast<long>(len)),
                        vs[i].sample_rate());
    }
    const Embedding joined = srs->Embed(ConcatVoices(pair));
    const Embedding centroid = Centroid(std::vector<Embedding>{srs->Embed(pair[0]), srs->Embed(pair[1])});
    EXPECT_GE(CosineSimilarity(joined, centroid), 0.999) << spk;
  }
}

TEST(FeatureGroups, Names) {
  for (G g : kAllFeatureGroups) EXPECT_EQ(ParseFeatureGroup(FeatureGroupName(g)), g);
  EXPECT_EQ(CodeOf([] { ParseFeatureGroup("nope"); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(FeatureGroupSet::All().size(), 6u);
  EXPECT_EQ(TechniqueName({}), "baseline");
  EXPECT_EQ(TechniqueName({true, true, true}), "concat+group+share");
}

}  // namespace
}  // namespace spkmia
