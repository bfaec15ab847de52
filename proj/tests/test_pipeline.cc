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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "spkmia/config.h"
#include "spkmia/dataset.h"
#include "spkmia/error.h"
#include "spkmia/file_util.h"
#include "spkmia/partition.h"
#include "spkmia/pipeline.h"
#include "support/test_util.h"

namespace spkmia {
namespace {

namespace fs = std::filesystem;
using testing::CodeOf;
using testing::TempDir;

AuditConfig SmallConfig(const fs::path& out, std::uint64_t seed = 1) {
  AuditConfig c;
  c.dataset.synthetic.num_speakers = 50;
  c.dataset.synthetic.seed = seed;
  c.partition_seed = seed;
  c.srs.synthetic.gamma = 0.9;
  c.srs.synthetic.seed = seed;
  c.setting.n = 4;
  c.setting.m = 3;
  c.setting.k = 2;
  c.attack.train.epochs = 100;
  c.attack.train.repeats = 2;
  c.trials = 200;
  c.seed = seed;
  c.output_dir = out.string();
  return c;
}

std::string Slurp(const fs::path& p) { return ReadFile(p); }

std::size_t Lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

TEST(Pipeline, WritesTheReportBundle) {
  TempDir dir("audit");
  Audit audit(SmallConfig(dir.path()));
  const AuditReport rep = audit.Run();
  for (const char* f : {"metrics.csv", "roc.csv", "query_counts.csv", "features.jsonl", "summary.txt", "results.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_TRUE(fs::exists(dir / "models"));
  const std::size_t train = audit.Speakers(PartitionLabel::kShadowTrain).size();
  const std::size_t non = audit.Speakers(PartitionLabel::kShadowNonTrain).size();
  EXPECT_EQ(rep.shadow_rows, 2 * train + non);
  EXPECT_EQ(Lines(dir / "features.jsonl"), 2 * train + non);
  ASSERT_EQ(rep.ratios.size(), 3u);
  for (const auto& r : rep.ratios) {
    EXPECT_EQ(r.eval.n_members, r.eval.n_non_members);
    EXPECT_GT(r.eval.n_members, 0u);
  }
  ASSERT_TRUE(rep.overfit.has_value());
  const std::string metrics = Slurp(dir / "metrics.csv");
  EXPECT_NE(metrics.find("r_m=0.5/auroc,"), std::string::npos);
  EXPECT_NE(metrics.find("srs/overfit_gap,"), std::string::npos);
  EXPECT_NE(Slurp(dir / "summary.txt").find("Attack vs r_m"), std::string::npos);
}

TEST(Pipeline, RerunsAreByteIdenticalAndCachesAreSound) {
  TempDir dir("rerun");
  Audit(SmallConfig(dir.path())).Run();
  const std::string first = Slurp(dir / "metrics.csv");
  Audit(SmallConfig(dir.path())).Run();
  EXPECT_EQ(Slurp(dir / "metrics.csv"), first);
  fs::remove_all(dir / "cache");
  Audit(SmallConfig(dir.path())).Run();
  EXPECT_EQ(Slurp(dir / "metrics.csv"), first);
  TempDir other("fresh");
  Audit(SmallConfig(other.path())).Run();
  EXPECT_EQ(Slurp(other / "metrics.csv"), first);
}

TEST(Pipeline, ShadowArtifactsIgnoreTargetData) {
  SynthParams p = SmallConfig("").dataset.synthetic;
  const Dataset base = SynthesizeDataset(p);
  p.seed = 999;
  const Dataset swapped = SynthesizeDataset(p);
  const PartitionAssignment part = PartitionSpeakers(base.speakers(), 4);

  std::vector<Voice> mixed;
  for (const auto& s : base.speakers()) {
    const bool target = part.at(s) == PartitionLabel::kTargetTrain || part.at(s) == PartitionLabel::kTargetNonTrain;
    const auto voices = target ? swapped.VoicesOf(s) : base.VoicesOf(s);
    ASSERT_FALSE(voices.empty());
    mixed.insert(mixed.end(), voices.begin(), voices.end());
  }

  TempDir a("leak-a"), b("leak-b");
  Audit audit_a(SmallConfig(a.path()), std::make_shared<Dataset>(base), part);
  Audit audit_b(SmallConfig(b.path()), std::make_shared<Dataset>(std::move(mixed)), part);
  audit_a.Run();
  audit_b.Run();
  const auto shadow = audit_a.CachePath("shadow").concat(".jsonl").filename();
  const auto attack = audit_a.CachePath("attack").concat(".json").filename();
  EXPECT_EQ(Slurp(a / "cache" / shadow.string()), Slurp(b / "cache" / shadow.string()));
  EXPECT_EQ(Slurp(a / "cache" / attack.string()), Slurp(b / "cache" / attack.string()));
  EXPECT_EQ(Slurp(a / "features.jsonl"), Slurp(b / "features.jsonl"));
  EXPECT_NE(Slurp(a / "metrics.csv"), Slurp(b / "metrics.csv"));
}

TEST(Pipeline, EmptyRatioListOmitsTheTable) {
  TempDir dir("noratio");
  AuditConfig c = SmallConfig(dir.path());
  c.ratios.clear();
  const AuditReport rep = Audit(c).Run();
  EXPECT_TRUE(rep.ratios.empty());
  const std::string summary = Slurp(dir / "summary.txt");
  EXPECT_EQ(summary.find("Attack vs r_m"), std::string::npos);
  EXPECT_EQ(Slurp(dir / "metrics.csv").find("r_m="), std::string::npos);
}

TEST(Pipeline, UnwritableOutputIsAnIoError) {
  TempDir dir("blocked");
  { std::ofstream(dir / "blocker") << "x"; }
  AuditConfig c = SmallConfig(dir / "blocker" / "out");
  EXPECT_EQ(CodeOf([&] { Audit(c).Run(); }), ErrorCode::kIoError);
}

TEST(Pipeline, StageErrorsAreTagged) {
  TempDir dir("stage");
  AuditConfig c = SmallConfig(dir.path());
  c.dataset.type = "directory";
  c.dataset.path = (dir / "nothing-here").string();
  try {
    Audit(c).Run();
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("stage dataset:"), std::string::npos) << e.what();
  }
}

TEST(Pipeline, UnitSelectionHonorsTheRatio) {
  std::vector<Voice> a, b;
  for (int i = 0; i < 6; ++i) {
    a.emplace_back("s", "a" + std::to_string(i), std::vector<float>(1600, 0.1f), 1600);
    b.emplace_back("s", "b" + std::to_string(i), std::vector<float>(1600, 0.1f), 1600);
  }
  UnitSpec spec;
  spec.n_units = 4;
  for (double r : {0.0, 0.25, 0.5, 1.0}) {
    const auto units = SelectUnits(a, b, r, spec, 3);
    ASSERT_EQ(units.size(), 4u);
    std::size_t from_a = 0;
    for (const auto& v : units) from_a += v.voice_id()[0] == 'a';
    EXPECT_EQ(from_a, static_cast<std::size_t>(std::ceil(4 * r))) << r;
    EXPECT_EQ(SelectUnits(a, b, r, spec, 3)[0].voice_id(), units[0].voice_id());
  }
  spec.n_units = 10;
  EXPECT_EQ(CodeOf([&] { SelectUnits(a, b, 1.0, spec, 3); }), ErrorCode::kNotEnoughVoices);
}

// Averaged over five corpora.
TEST(Pipeline, MemberRatioDoesNotHurt) {
  double r0 = 0, r1 = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TempDir dir("ratio");
    AuditConfig c = SmallConfig(dir.path(), seed);
    c.dataset.synthetic.num_speakers = 100;
    c.ratios = {0.0, 1.0};
    const AuditReport rep = Audit(c).Run();
    r0 += rep.ratios[0].eval.auroc;
    r1 += rep.ratios[1].eval.auroc;
  }
  EXPECT_GE(r1 / 5, r0 / 5 - 0.02) << r0 / 5 << " " << r1 / 5;
  RecordProperty("auroc_r0", std::to_string(r0 / 5));
  RecordProperty("auroc_r1", std::to_string(r1 / 5));
}

}  // namespace
}  // namespace spkmia
