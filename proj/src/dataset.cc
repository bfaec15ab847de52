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

#include "spkmia/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "spkmia/audio_io.h"
#include "spkmia/error.h"
#include "spkmia/rng.h"
#include "spkmia/synthetic_srs.h"
#include "spkmia/vector_math.h"

namespace spkmia {

void SynthParams::Validate() const {
  Require(num_speakers >= 10, ErrorCode::kInvalidArgument, "need at least 10 speakers");
  Require(min_voices >= 1 && max_voices >= min_voices, ErrorCode::kInvalidArgument,
          "invalid voices-per-speaker range");
  Require(min_duration_ms > 0 && max_duration_ms >= min_duration_ms,
          ErrorCode::kInvalidArgument, "invalid duration range");
  Require(identity_dim >= 1, ErrorCode::kInvalidArgument, "identity_dim must be positive");
  Require(sample_rate > 0 && frame_rate > 0 && sample_rate % frame_rate == 0,
          ErrorCode::kInvalidArgument, "sample_rate must be a multiple of frame_rate");
  Require(sample_rate / frame_rate >= identity_dim, ErrorCode::kInvalidArgument,
          "a frame needs at least identity_dim samples");
  Require(frame_noise_sigma >= 0 && session_sigma >= 0, ErrorCode::kInvalidArgument,
          "noise levels must be non-negative");
  Require(min_duration_ms * frame_rate >= 1000.0, ErrorCode::kInvalidArgument,
          "voices must hold at least one frame");
}

void to_json(nlohmann::json& j, const SynthParams& p) {
  j = {{"num_speakers", p.num_speakers},     {"min_voices", p.min_voices},
       {"max_voices", p.max_voices},         {"min_duration_ms", p.min_duration_ms},
       {"max_duration_ms", p.max_duration_ms}, {"identity_dim", p.identity_dim},
       {"sample_rate", p.sample_rate},       {"frame_rate", p.frame_rate},
       {"frame_noise_sigma", p.frame_noise_sigma}, {"session_sigma", p.session_sigma},
       {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, SynthParams& p) {
  p = SynthParams{};
  p.num_speakers = j.value("num_speakers", p.num_speakers);
  p.min_voices = j.value("min_voices", p.min_voices);
  p.max_voices = j.value("max_voices", p.max_voices);
  p.min_duration_ms = j.value("min_duration_ms", p.min_duration_ms);
  p.max_duration_ms = j.value("max_duration_ms", p.max_duration_ms);
  p.identity_dim = j.value("identity_dim", p.identity_dim);
  p.sample_rate = j.value("sample_rate", p.sample_rate);
  p.frame_rate = j.value("frame_rate", p.frame_rate);
  p.frame_noise_sigma = j.value("frame_noise_sigma", p.frame_noise_sigma);
  p.session_sigma = j.value("session_sigma", p.session_sigma);
  p.seed = j.value("seed", p.seed);
}

Dataset::Dataset(std::vector<Voice> voices) {
  for (Voice& v : voices) {
    const std::string id = v.speaker_id();
    voices_[id].push_back(std::move(v));
  }
  for (auto& [id, list] : voices_) {
    std::stable_sort(list.begin(), list.end(),
                     [](const Voice& a, const Voice& b) { return a.voice_id() < b.voice_id(); });
    speakers_.push_back(id);
  }
}

std::span<const Voice> Dataset::VoicesOf(const std::string& speaker_id) const {
  auto it = voices_.find(speaker_id);
  Require(it != voices_.end(), ErrorCode::kInvalidArgument,
          "unknown speaker '" + speaker_id + "'");
  return it->second;
}

std::size_t Dataset::num_voices() const {
  std::size_t n = 0;
  for (const auto& [id, list] : voices_) n += list.size();
  return n;
}

std::vector<Voice> Dataset::AllVoices() const {
  std::vector<Voice> out;
  for (const auto& [id, list] : voices_) out.insert(out.end(), list.begin(), list.end());
  return out;
}

Dataset SynthesizeDataset(const SynthParams& params) {
  params.Validate();
  auto codec = GetFrameCodec(params.sample_rate, params.frame_rate, params.identity_dim);
  const auto f = static_cast<std::size_t>(params.identity_dim);
  const auto spf = static_cast<std::size_t>(codec->samples_per_frame());
  std::vector<Voice> voices;
  std::map<std::string, std::vector<double>> identities;
  char buf[64];
  for (std::size_t s = 0; s < params.num_speakers; ++s) {
    std::snprintf(buf, sizeof(buf), "spk%05zu", s);
    const std::string speaker = buf;
    Rng id_rng(DeriveSeed(params.seed, {HashTag("identity"), s}));
    std::vector<double> identity(f);
    for (double& x : identity) x = id_rng.Normal();
    identity = Normalized(identity);
    const auto count = static_cast<std::size_t>(
        id_rng.UniformInt(static_cast<std::int64_t>(params.min_voices),
                          static_cast<std::int64_t>(params.max_voices)));
    for (std::size_t v = 0; v < count; ++v) {
      Rng rng(DeriveSeed(params.seed, {HashTag("voice"), s, v}));
      const double ms = params.min_duration_ms == params.max_duration_ms
                            ? params.min_duration_ms
                            : rng.Uniform(params.min_duration_ms, params.max_duration_ms);
      const auto frames = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(ms * params.frame_rate / 1000.0)));
      std::vector<double> center(identity);
      for (double& x : center) x += rng.Normal(0.0, params.session_sigma);
      std::vector<float> samples(frames * spf);
      std::vector<double> frame(f);
      for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t i = 0; i < f; ++i) {
          frame[i] = center[i] + rng.Normal(0.0, params.frame_noise_sigma);
        }
        codec->Encode(frame, std::span<float>(samples).subspan(t * spf, spf));
      }
      std::snprintf(buf, sizeof(buf), "%s-v%03zu", speaker.c_str(), v);
      voices.emplace_back(speaker, buf, std::move(samples), params.sample_rate);
    }
    identities.emplace(speaker, std::move(identity));
  }
  Dataset data(std::move(voices));
  data.identities = std::move(identities);
  return data;
}

void WriteDatasetWav(const Dataset& data, const std::filesystem::path& root) {
  for (const auto& speaker : data.speakers()) {
    std::error_code ec;
    std::filesystem::create_directories(root / speaker, ec);
    Require(!ec, ErrorCode::kIoError, "cannot create " + (root / speaker).string());
    for (const Voice& v : data.VoicesOf(speaker)) {
      WriteWav(root / speaker / (v.voice_id() + ".wav"), v);
    }
  }
}

}  // namespace spkmia
