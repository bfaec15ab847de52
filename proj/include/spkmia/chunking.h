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

// Sliding-window voice chunk splitting.

#ifndef SPKMIA_CHUNKING_H_
#define SPKMIA_CHUNKING_H_

#include <cstddef>
#include <vector>

#include "json.hpp"
#include "spkmia/types.h"

namespace spkmia {

struct ChunkConfig {
  double window_ms = 3200.0;
  // Non-positive means window_ms / 2.
  double step_ms = 0.0;
  double min_fill = 0.7;

  double effective_step_ms() const { return step_ms > 0 ? step_ms : window_ms / 2; }
  void Validate() const;
};

void to_json(nlohmann::json& j, const ChunkConfig& c);
void from_json(const nlohmann::json& j, ChunkConfig& c);

// Milliseconds to samples, rounded to the nearest sample.
std::size_t MsToSamples(double ms, int sample_rate);

// Chunk k of a voice gets voice_id "<parent>#<k>". A trailing chunk that is
// at least min_fill of the window is zero-padded; shorter tails are dropped.
std::vector<Voice> SplitVoice(const Voice& voice, const ChunkConfig& config);

}  // namespace spkmia

#endif  // SPKMIA_CHUNKING_H_
