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

#include "spkmia/types.h"

#include <cmath>
#include <utility>

#include "spkmia/error.h"

namespace spkmia {

Voice::Voice(std::string speaker_id, std::string voice_id,
             std::vector<float> samples, int sample_rate)
    : speaker_id_(std::move(speaker_id)),
      voice_id_(std::move(voice_id)),
      samples_(std::move(samples)),
      sample_rate_(sample_rate) {
  Require(!samples_.empty(), ErrorCode::kEmptyInput,
          "voice '" + voice_id_ + "' has no samples");
  Require(sample_rate_ > 0, ErrorCode::kInvalidArgument,
          "voice '" + voice_id_ + "' has non-positive sample rate");
}

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  Require(!values_.empty(), ErrorCode::kEmptyInput, "embedding has no entries");
  double sq = 0.0;
  for (double v : values_) {
    Require(std::isfinite(v), ErrorCode::kInvalidArgument,
            "embedding has a non-finite entry");
    sq += v * v;
  }
  norm_ = std::sqrt(sq);
  Require(norm_ > 0.0, ErrorCode::kZeroNorm, "embedding has zero norm");
}

std::string_view PartitionLabelName(PartitionLabel label) {
  switch (label) {
    case PartitionLabel::kImposter: return "imposter";
    case PartitionLabel::kShadowTrain: return "shadow_train";
    case PartitionLabel::kShadowNonTrain: return "shadow_non_train";
    case PartitionLabel::kTargetTrain: return "target_train";
    case PartitionLabel::kTargetNonTrain: return "target_non_train";
  }
  return "unknown";
}

PartitionLabel ParsePartitionLabel(std::string_view name) {
  for (PartitionLabel l : kAllPartitionLabels) {
    if (PartitionLabelName(l) == name) return l;
  }
  Fail(ErrorCode::kFormatError, "unknown partition label '" + std::string(name) + "'");
}

}  // namespace spkmia
