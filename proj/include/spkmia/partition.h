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

// Dataset partition into the five disjoint speaker groups used by an audit,
// and the per-speaker split of a training speaker's voices.

#ifndef SPKMIA_PARTITION_H_
#define SPKMIA_PARTITION_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spkmia/types.h"

namespace spkmia {

struct SpeakerVoiceCount {
  std::string speaker_id;
  std::size_t num_voices = 0;
};

using PartitionAssignment = std::map<std::string, PartitionLabel>;

// Canonically sorts the ids, shuffles them with `seed`, and slices the result
// into five contiguous blocks whose sizes differ by at most one. Speakers with
// fewer than two voices are never placed in a training part; they trade places
// with the earliest eligible speaker of a non-training part.
// Throws kNotEnoughSpeakers for fewer than five speakers, kNotEnoughVoices if
// the training parts cannot be filled with eligible speakers.
PartitionAssignment PartitionSpeakers(const std::vector<SpeakerVoiceCount>& speakers,
                                      std::uint64_t seed);

// Same, treating every speaker as eligible.
PartitionAssignment PartitionSpeakers(const std::vector<std::string>& speaker_ids,
                                      std::uint64_t seed);

std::vector<std::string> SpeakersWithLabel(const PartitionAssignment& assignment,
                                           PartitionLabel label);

struct VoiceSplit {
  std::vector<std::string> train;     // VoiceRole::kTrainVoice
  std::vector<std::string> held_out;  // VoiceRole::kHeldOutVoice
};

// Splits one training speaker's voices into two near-equal disjoint halves
// (the train half gets the extra voice when the count is odd).
// Throws kNotEnoughVoices for fewer than two voices.
VoiceSplit SplitMemberVoices(const std::vector<std::string>& voice_ids,
                             std::uint64_t seed);

}  // namespace spkmia

#endif  // SPKMIA_PARTITION_H_
