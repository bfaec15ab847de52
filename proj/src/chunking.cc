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

#include "spkmia/chunking.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "spkmia/error.h"

namespace spkmia {

void ChunkConfig::Validate() const {
  Require(window_ms > 0, ErrorCode::kInvalidArgument, "window_ms must be positive");
  const double step = effective_step_ms();
  Require(step > 0 && step <= window_ms, ErrorCode::kInvalidArgument,
          "step_ms must lie in (0, window_ms]");
  Require(min_fill > 0 && min_fill <= 1, ErrorCode::kInvalidArgument,
          "min_fill must lie in (0, 1]");
}

void to_json(nlohmann::json& j, const ChunkConfig& c) {
  j = {{"window_ms", c.window_ms}, {"step_ms", c.effective_step_ms()}, {"min_fill", c.min_fill}};
}

void from_json(const nlohmann::json& j, ChunkConfig& c) {
  c = ChunkConfig{};
  c.window_ms = j.value("window_ms", c.window_ms);
  c.step_ms = j.value("step_ms", c.step_ms);
  c.min_fill = j.value("min_fill", c.min_fill);
}

std::size_t MsToSamples(double ms, int sample_rate) {
  return static_cast<std::size_t>(std::llround(ms * sample_rate / 1000.0));
}

std::vector<Voice> SplitVoice(const Voice& voice, const ChunkConfig& config) {
  config.Validate();
  const std::size_t total = voice.num_samples();
  Require(total > 0, ErrorCode::kEmptyInput, "cannot split an empty voice");
  const int rate = voice.sample_rate();
  const std::size_t window = MsToSamples(config.window_ms, rate);
  const std::size_t step = MsToSamples(config.effective_step_ms(), rate);
  const std::size_t min_len = MsToSamples(config.min_fill * config.window_ms, rate);
  Require(window > 0 && step > 0, ErrorCode::kInvalidArgument,
          "window or step rounds to zero samples at " + std::to_string(rate) + " Hz");

  std::vector<Voice> chunks;
  const auto samples = voice.samples();
  for (std::size_t start = 0, k = 0; start < total; start += step) {
    const std::size_t len = std::min(window, total - start);
    if (len < std::max<std::size_t>(min_len, 1)) break;
    std::vector<float> buf(window, 0.0f);
    std::copy_n(samples.begin() + static_cast<std::ptrdiff_t>(start), len, buf.begin());
    chunks.emplace_back(voice.speaker_id(), voice.voice_id() + "#" + std::to_string(k++),
                        std::move(buf), rate);
  }
  return chunks;
}

}  // namespace spkmia
