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
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "spkmia/audio_io.h"
#include "spkmia/error.h"
#include "spkmia/exact_sum.h"
#include "spkmia/partition.h"
#include "spkmia/rng.h"
#include "spkmia/types.h"
#include "spkmia/vector_math.h"

namespace spkmia {
namespace {

template <typename F>
ErrorCode CodeOf(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kStageFailure;
}

Embedding E(std::vector<double> v) { return Embedding(std::move(v)); }

TEST(Voice, RejectsEmptyAndBadRate) {
  EXPECT_EQ(CodeOf([] { Voice("s", "v", {}, 16000); }), ErrorCode::kEmptyInput);
  EXPECT_EQ(CodeOf([] { Voice("s", "v", {0.1f}, 0); }), ErrorCode::kInvalidArgument);
  Voice v("s", "v", std::vector<float>(1600, 0.0f), 16000);
  EXPECT_DOUBLE_EQ(v.duration_ms(), 100.0);
}

TEST(Embedding, RejectsZeroAndNonFinite) {
  EXPECT_EQ(CodeOf([] { E({0.0, 0.0}); }), ErrorCode::kZeroNorm);
  EXPECT_EQ(CodeOf([] { E({1.0, std::nan("")}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { E({}); }), ErrorCode::kEmptyInput);
}

TEST(Cosine, Examples) {
  EXPECT_DOUBLE_EQ(CosineSimilarity(E({0.3, -2.0, 5.0}), E({0.3, -2.0, 5.0})), 1.0);
  EXPECT_DOUBLE_EQ(CosineSimilarity(E({1, 0}), E({0, 1})), 0.0);
  EXPECT_DOUBLE_EQ(CosineSimilarity(E({1, 0}), E({-1, 0})), -1.0);
  EXPECT_EQ(CodeOf([] { CosineSimilarity(E({1, 0}), E({1, 0, 0})); }),
            ErrorCode::kDimensionMismatch);
}

TEST(Cosine, SymmetricScaleInvariantAndBounded) {
  Rng rng(7);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t d = 1 + static_cast<std::size_t>(rng.UniformInt(0, 40));
    std::vector<double> a(d), b(d);
    for (auto& x : a) x = rng.Normal();
    for (auto& x : b) x = rng.Normal();
    a[0] += 1e-3;
    b[0] += 1e-3;
    const double c = CosineSimilarity(E(a), E(b));
    ASSERT_GE(c, -1 - 1e-12);
    ASSERT_LE(c, 1 + 1e-12);
    ASSERT_DOUBLE_EQ(c, CosineSimilarity(E(b), E(a)));
    std::vector<double> scaled = a;
    for (auto& x : scaled) x *= 3.5;
    ASSERT_NEAR(c, CosineSimilarity(E(scaled), E(b)), 1e-12);
  }
}

TEST(Centroid, Examples) {
  const Embedding one = Centroid(std::vector<Embedding>{E({1, 0})});
  EXPECT_EQ(one[0], 1.0);
  EXPECT_EQ(one[1], 0.0);
  const Embedding two = Centroid(std::vector<Embedding>{E({1, 0}), E({0, 1})});
  EXPECT_EQ(two[0], 0.5);
  EXPECT_EQ(two[1], 0.5);
  const Embedding three = Centroid(std::vector<Embedding>{E({2, 0}), E({0, 2}), E({1, 1})});
  EXPECT_EQ(three[0], 1.0);
  EXPECT_EQ(three[1], 1.0);
  EXPECT_EQ(CodeOf([] { Centroid(std::vector<Embedding>{}); }), ErrorCode::kEmptyInput);
}

TEST(Centroid, RepeatedListIsBitIdentical) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<Embedding> list;
    const int n = 1 + static_cast<int>(rng.UniformInt(0, 9));
    for (int i = 0; i < n; ++i) list.push_back(E({rng.Normal(), rng.Normal(), rng.Normal()}));
    const Embedding base = Centroid(list);
    const int k = 2 + static_cast<int>(rng.UniformInt(0, 5));
    std::vector<Embedding> repeated;
    for (int c = 0; c < k; ++c) repeated.insert(repeated.end(), list.begin(), list.end());
    rng.Shuffle(repeated);
    const Embedding again = Centroid(repeated);
    for (std::size_t i = 0; i < base.dim(); ++i) ASSERT_EQ(base[i], again[i]);
  }
}

TEST(ExactAccumulator, CorrectlyRoundedMean) {
  ExactAccumulator acc;
  acc.Add(1e100);
  acc.Add(1.0);
  acc.Add(-1e100);
  EXPECT_EQ(acc.Mean(3), 1.0 / 3.0);
  ExactAccumulator tiny;
  tiny.Add(std::numeric_limits<double>::denorm_min());
  tiny.Add(std::numeric_limits<double>::max());
  tiny.Add(-std::numeric_limits<double>::max());
  EXPECT_EQ(tiny.Mean(1), std::numeric_limits<double>::denorm_min());
  ExactAccumulator tie;
  tie.Add(0.1);
  tie.Add(0.2);
  tie.Add(0.3);
  EXPECT_EQ(tie.Mean(3), 0.2);
}

std::vector<std::string> Ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("spk" + std::to_string(1000 + i));
  return ids;
}

std::map<PartitionLabel, std::size_t> Sizes(const PartitionAssignment& a) {
  std::map<PartitionLabel, std::size_t> s;
  for (auto l : kAllPartitionLabels) s[l] = 0;
  for (const auto& [id, l] : a) ++s[l];
  return s;
}

TEST(Partition, TenSpeakersGiveTwoEach) {
  const auto a = PartitionSpeakers(Ids(10), 1);
  for (const auto& [label, size] : Sizes(a)) EXPECT_EQ(size, 2u) << PartitionLabelName(label);
}

TEST(Partition, LargeCorpusNearEqual) {
  const auto a = PartitionSpeakers(Ids(6112), 5);
  ASSERT_EQ(a.size(), 6112u);
  std::size_t lo = SIZE_MAX, hi = 0;
  for (const auto& [label, size] : Sizes(a)) {
    lo = std::min(lo, size);
    hi = std::max(hi, size);
  }
  EXPECT_LE(hi - lo, 1u);
  EXPECT_EQ(lo, 1222u);
}

TEST(Partition, SevenSpeakers) {
  std::multiset<std::size_t> sizes;
  for (const auto& [label, size] : Sizes(PartitionSpeakers(Ids(7), 9))) sizes.insert(size);
  EXPECT_EQ(sizes, (std::multiset<std::size_t>{1, 1, 1, 2, 2}));
}

TEST(Partition, DeterministicOrderIndependentAndDisjoint) {
  auto ids = Ids(53);
  const auto a = PartitionSpeakers(ids, 42);
  Rng rng(1);
  rng.Shuffle(ids);
  EXPECT_EQ(PartitionSpeakers(ids, 42), a);
  EXPECT_NE(PartitionSpeakers(ids, 43), a);
  std::set<std::string> seen;
  for (auto l : kAllPartitionLabels) {
    for (const auto& s : SpeakersWithLabel(a, l)) EXPECT_TRUE(seen.insert(s).second);
  }
  EXPECT_EQ(seen.size(), 53u);
}

TEST(Partition, TooFewSpeakers) {
  EXPECT_EQ(CodeOf([] { PartitionSpeakers(Ids(4), 0); }), ErrorCode::kNotEnoughSpeakers);
}

TEST(Partition, SingleVoiceSpeakersNeverTrain) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<SpeakerVoiceCount> speakers;
    for (std::size_t i = 0; i < 30; ++i) speakers.push_back({Ids(30)[i], i % 3 == 0 ? 1u : 4u});
    const auto a = PartitionSpeakers(speakers, seed);
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto& [label, size] : Sizes(a)) {
      lo = std::min(lo, size);
      hi = std::max(hi, size);
    }
    EXPECT_LE(hi - lo, 1u);
    for (const auto& s : speakers) {
      if (s.num_voices >= 2) continue;
      const auto l = a.at(s.speaker_id);
      EXPECT_NE(l, PartitionLabel::kShadowTrain);
      EXPECT_NE(l, PartitionLabel::kTargetTrain);
    }
  }
}

TEST(Partition, NotEnoughEligible) {
  std::vector<SpeakerVoiceCount> speakers;
  for (std::size_t i = 0; i < 10; ++i) speakers.push_back({Ids(10)[i], i < 3 ? 3u : 1u});
  EXPECT_EQ(CodeOf([&] { PartitionSpeakers(speakers, 0); }), ErrorCode::kNotEnoughVoices);
}

TEST(SplitMemberVoices, Sizes) {
  for (auto [n, train, held] : {std::tuple{10u, 5u, 5u}, {9u, 5u, 4u}, {2u, 1u, 1u}}) {
    std::vector<std::string> ids;
    for (unsigned i = 0; i < n; ++i) ids.push_back("v" + std::to_string(i));
    const auto split = SplitMemberVoices(ids, 11);
    EXPECT_EQ(split.train.size(), train);
    EXPECT_EQ(split.held_out.size(), held);
    std::set<std::string> all(split.train.begin(), split.train.end());
    all.insert(split.held_out.begin(), split.held_out.end());
    EXPECT_EQ(all.size(), n);
    const auto again = SplitMemberVoices(ids, 11);
    EXPECT_EQ(again.train, split.train);
  }
  EXPECT_EQ(CodeOf([] { SplitMemberVoices({"only"}, 0); }), ErrorCode::kNotEnoughVoices);
}

TEST(Rng, PinnedStream) {
  Rng rng(2024);
  EXPECT_EQ(rng.engine()(), std::mt19937_64(2024)());
  EXPECT_EQ(DeriveSeed(1, {2, 3}), DeriveSeed(1, {2, 3}));
  EXPECT_NE(DeriveSeed(1, {2, 3}), DeriveSeed(1, {3, 2}));
  EXPECT_EQ(HashTag("a"), 0xaf63dc4c8601ec8cULL);
}

class AudioIo : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("spkmia-audio-" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "-" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::filesystem::path dir_;
};

TEST_F(AudioIo, WavRoundTrip) {
  std::vector<float> s;
  for (int i = 0; i < 800; ++i) s.push_back(static_cast<float>(std::sin(i * 0.05) * 0.9));
  s.push_back(1.5f);
  const Voice v("spk", "v1", s, 8000);
  WriteWav(dir_ / "v1.wav", v);
  const Voice back = ReadWav(dir_ / "v1.wav", "spk", "v1");
  ASSERT_EQ(back.num_samples(), v.num_samples());
  EXPECT_EQ(back.sample_rate(), 8000);
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    ASSERT_NEAR(back.samples()[i], s[i], 1.0 / 32767);
  }
  EXPECT_EQ(back.samples().back(), 32767.0f / 32768.0f);
}

TEST_F(AudioIo, RawF32RoundTripIsExact) {
  const Voice v("spk", "v2", {0.125f, -0.5f, 0.333f}, 16000);
  WriteRawF32(dir_ / "v2", v);
  const Voice back = ReadRawF32(dir_ / "v2.json");
  EXPECT_EQ(back.voice_id(), "v2");
  EXPECT_EQ(back.speaker_id(), "spk");
  ASSERT_EQ(back.num_samples(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(back.samples()[i], v.samples()[i]);
}

TEST_F(AudioIo, BadWavIsFormatError) {
  std::ofstream(dir_ / "bad.wav") << "RIFFnonsense";
  EXPECT_EQ(CodeOf([&] { ReadWav(dir_ / "bad.wav", "s", "v"); }), ErrorCode::kFormatError);
}

TEST_F(AudioIo, LoadDirectory) {
  std::filesystem::create_directories(dir_ / "a");
  std::filesystem::create_directories(dir_ / "b");
  WriteWav(dir_ / "b" / "b-1.wav", Voice("b", "b-1", std::vector<float>(10, 0.1f), 8000));
  WriteWav(dir_ / "a" / "a-2.wav", Voice("a", "a-2", std::vector<float>(10, 0.1f), 8000));
  std::filesystem::create_directories(dir_ / "raw");
  WriteRawF32(dir_ / "raw" / "a-1", Voice("a", "a-1", std::vector<float>(5, 0.2f), 8000));
  const auto voices = LoadVoiceDirectory(dir_);
  ASSERT_EQ(voices.size(), 3u);
  EXPECT_EQ(voices[0].voice_id(), "a-1");
  EXPECT_EQ(voices[1].voice_id(), "a-2");
  EXPECT_EQ(voices[2].speaker_id(), "b");
}

}  // namespace
}  // namespace spkmia
