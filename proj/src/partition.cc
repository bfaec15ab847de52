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

#include "spkmia/partition.h"

#include <algorithm>

#include "spkmia/error.h"
#include "spkmia/rng.h"

namespace spkmia {

namespace {

bool IsTrainLabel(PartitionLabel l) {
  return l == PartitionLabel::kShadowTrain || l == PartitionLabel::kTargetTrain;
}

}  // namespace

PartitionAssignment PartitionSpeakers(const std::vector<SpeakerVoiceCount>& speakers,
                                      std::uint64_t seed) {
  const std::size_t n = speakers.size();
  Require(n >= 5, ErrorCode::kNotEnoughSpeakers,
          "partition needs at least 5 speakers, got " + std::to_string(n));

  std::vector<SpeakerVoiceCount> order = speakers;
  std::sort(order.begin(), order.end(),
            [](const auto& a, const auto& b) { return a.speaker_id < b.speaker_id; });
  for (std::size_t i = 1; i < n; ++i) {
    Require(order[i].speaker_id != order[i - 1].speaker_id,
            ErrorCode::kInvalidArgument,
            "duplicate speaker id '" + order[i].speaker_id + "'");
  }
  Rng rng(DeriveSeed(seed, {HashTag("partition")}));
  rng.Shuffle(order);

  std::vector<PartitionLabel> slots;
  slots.reserve(n);
  const std::size_t base = n / 5;
  const std::size_t extra = n % 5;
  for (std::size_t p = 0; p < 5; ++p) {
    const std::size_t size = base + (p < extra ? 1 : 0);
    slots.insert(slots.end(), size, kAllPartitionLabels[p]);
  }

  // Swap ineligible speakers out of training slots.
  for (std::size_t i = 0; i < n; ++i) {
    if (!IsTrainLabel(slots[i]) || order[i].num_voices >= 2) continue;
    bool swapped = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (!IsTrainLabel(slots[j]) && order[j].num_voices >= 2) {
        std::swap(order[i], order[j]);
        swapped = true;
        break;
      }
    }
    Require(swapped, ErrorCode::kNotEnoughVoices,
            "too few speakers with at least two voices to fill training parts");
  }

  PartitionAssignment out;
  for (std::size_t i = 0; i < n; ++i) out[order[i].speaker_id] = slots[i];
  return out;
}

PartitionAssignment PartitionSpeakers(const std::vector<std::string>& speaker_ids,
                                      std::uint64_t seed) {
  std::vector<SpeakerVoiceCount> speakers;
  speakers.reserve(speaker_ids.size());
  for (const auto& id : speaker_ids) speakers.push_back({id, 2});
  return PartitionSpeakers(speakers, seed);
}

std::vector<std::string> SpeakersWithLabel(const PartitionAssignment& assignment,
                                           PartitionLabel label) {
  std::vector<std::string> out;
  for (const auto& [id, l] : assignment) {
    if (l == label) out.push_back(id);
  }
  return out;
}

VoiceSplit SplitMemberVoices(const std::vector<std::string>& voice_ids,
                             std::uint64_t seed) {
  Require(voice_ids.size() >= 2, ErrorCode::kNotEnoughVoices,
          "a training speaker needs at least two voices to split");
  std::vector<std::string> order = voice_ids;
  std::sort(order.begin(), order.end());
  Rng rng(seed);
  rng.Shuffle(order);
  const std::size_t n_train = (order.size() + 1) / 2;
  VoiceSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<long>(n_train));
  split.held_out.assign(order.begin() + static_cast<long>(n_train), order.end());
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.held_out.begin(), split.held_out.end());
  return split;
}

}  // namespace spkmia
