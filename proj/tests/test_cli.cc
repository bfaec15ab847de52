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

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "json.hpp"
#include "spkmia/file_util.h"
#include "support/test_util.h"

namespace spkmia {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome Cli(const std::string& args) {
  const std::string cmd = std::string(SPKMIA_CLI) + " " + args + " 2>/dev/null";
  Outcome o;
  FILE* p = popen(cmd.c_str(), "r");
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) o.out.append(buf, n);
  const int status = pclose(p);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

const char* kSmall =
    "--num-speakers 50 -N 4 -M 3 -K 2 --epochs 50 --repeats 1 --trials 100 --gamma 0.9";

TEST(Cli, PlanQueriesHeadlineRow) {
  TempDir dir("plan");
  const Outcome o = Cli("plan-queries -o " + dir.path().string());
  ASSERT_EQ(o.code, 0);
  EXPECT_NE(o.out.find("voice-centroid,concat+group,10,20,200,20,10,30\n"), std::string::npos);
  EXPECT_NE(o.out.find("voice-centroid,baseline,10,20,200,200,200,400\n"), std::string::npos);
  EXPECT_NE(o.out.find("all,concat+group+share,10,20,200,11,230,241\n"), std::string::npos);
  EXPECT_EQ(ReadFile(dir / "query_counts.csv"), o.out);
}

TEST(Cli, ExitCodes) {
  TempDir dir("codes");
  const std::string out = " -o " + dir.path().string();
  EXPECT_EQ(Cli("").code, 2);
  EXPECT_EQ(Cli("no-such-command").code, 2);
  EXPECT_EQ(Cli("audit --ratios 2" + out).code, 2);
  EXPECT_EQ(Cli("audit --access sideways" + out).code, 2);
  EXPECT_EQ(Cli("audit --config " + (dir / "missing.json").string() + out).code, 2);
  EXPECT_EQ(Cli("audit --dataset-dir " + (dir / "empty").string() + out).code, 3);
  EXPECT_EQ(Cli("report " + (dir / "nowhere").string()).code, 3);
  EXPECT_EQ(Cli("--help").code, 0);
}

TEST(Cli, FlagsOverrideTheConfigFile) {
  TempDir dir("override");
  {
    std::ofstream(dir / "c.json") << R"({"setting": {"n": 6, "m": 5}, "ratios": [0.5]})";
  }
  const Outcome o = Cli("plan-queries --config " + (dir / "c.json").string() + " -M 7 -o " +
                        dir.path().string());
  ASSERT_EQ(o.code, 0);
  EXPECT_NE(o.out.find("centroid,baseline,6,7,70,"), std::string::npos) << o.out;
}

TEST(Cli, StagesAndAuditShareTheCache) {
  TempDir dir("stages");
  const std::string base = std::string(kSmall) + " --ratios 0,1 -o " + dir.path().string();
  ASSERT_EQ(Cli("partition " + base).code, 0);
  EXPECT_TRUE(fs::exists(dir / "partition.json"));
  ASSERT_EQ(Cli("extract " + base).code, 0);
  ASSERT_EQ(Cli("train-attack " + base).code, 0);
  EXPECT_TRUE(fs::exists(dir / "models" / "classifier-0.json"));
  ASSERT_EQ(Cli("infer " + base).code, 0);
  EXPECT_TRUE(fs::exists(dir / "predictions_r1.csv"));
  const Outcome audit = Cli("audit " + base);
  ASSERT_EQ(audit.code, 0);
  EXPECT_NE(audit.out.find("Attack vs r_m"), std::string::npos);
  const std::string metrics = ReadFile(dir / "metrics.csv");
  ASSERT_EQ(Cli("evaluate " + base).code, 0);
  EXPECT_EQ(ReadFile(dir / "metrics.csv"), metrics);

  const auto results = nlohmann::json::parse(ReadFile(dir / "results.json"));
  EXPECT_EQ(results["ratios"].size(), 2u);
  const Outcome report = Cli("report " + dir.path().string());
  EXPECT_EQ(report.code, 0);
  EXPECT_NE(report.out.find("0.9"), std::string::npos);
}

TEST(Cli, SynthesizedWavsCanBeAudited) {
  TempDir dir("wav");
  const std::string wavs = (dir / "wavs").string();
  ASSERT_EQ(Cli("synth --num-speakers 50 -o " + dir.path().string() + " --out " + wavs).code, 0);
  const Outcome o = Cli(std::string("audit ") + kSmall + " --no-ratios --dataset-dir " + wavs +
                        " -o " + (dir / "out").string());
  EXPECT_EQ(o.code, 0);
  EXPECT_EQ(o.out.find("Attack vs r_m"), std::string::npos);
}

TEST(Cli, BoundN) {
  TempDir dir("bound");
  const Outcome o = Cli(std::string("bound-n ") + kSmall + " -o " + dir.path().string());
  ASSERT_EQ(o.code, 0);
  EXPECT_EQ(o.out.rfind("N' = ", 0), 0u) << o.out;
  const auto j = nlohmann::json::parse(ReadFile(dir / "bound.json"));
  EXPECT_GE(j["bound"].get<int>(), 2);
}

}  // namespace
}  // namespace spkmia
