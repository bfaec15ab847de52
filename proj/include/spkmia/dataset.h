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

// Synthetic speaker corpus: each speaker has a latent identity on the unit
// sphere; each voice adds a session offset and per-frame noise, rendered to
// PCM with the frame codec the synthetic SRS decodes.

#ifndef SPKMIA_DATASET_H_
#define SPKMIA_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "spkmia/types.h"

namespace spkmia {

struct SynthParams {
  std::size_t num_speakers = 100;
  std::size_t min_voices = 8;
  std::size_t max_voices = 8;
  double min_duration_ms = 5600;
  double max_duration_ms = 7200;
  int identity_dim = 16;
  int sample_rate = 1600;
  int frame_rate = 100;
  double frame_noise_sigma = 0.3;
  double session_sigma = 0.13;
  std::uint64_t seed = 0;

  void Validate() const;
};

void to_json(nlohmann::json& j, const SynthParams& p);
void from_json(const nlohmann::json& j, SynthParams& p);

class Dataset {
 public:
  Dataset() = default;
  // Voices are grouped by speaker and sorted by voice_id.
  explicit Dataset(std::vector<Voice> voices);

  const std::vector<std::string>& speakers() const { return speakers_; }
  std::span<const Voice> VoicesOf(const std::string& speaker_id) const;
  std::size_t num_voices() const;
  std::vector<Voice> AllVoices() const;

  // Latent identities, present for synthesized corpora.
  std::map<std::string, std::vector<double>> identities;

 private:
  std::vector<std::string> speakers_;
  std::map<std::string, std::vector<Voice>> voices_;
};

Dataset SynthesizeDataset(const SynthParams& params);

// Writes <root>/<speaker>/<voice>.wav; 16-bit quantization.
void WriteDatasetWav(const Dataset& data, const std::filesystem::path& root);

}  // namespace spkmia

#endif  // SPKMIA_DATASET_H_
