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

#ifndef SPKMIA_TYPES_H_
#define SPKMIA_TYPES_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spkmia {

// One utterance. Samples are real PCM values in [-1, 1].
class Voice {
 public:
  Voice(std::string speaker_id, std::string voice_id, std::vector<float> samples,
        int sample_rate);

  const std::string& speaker_id() const { return speaker_id_; }
  const std::string& voice_id() const { return voice_id_; }
  std::span<const float> samples() const { return samples_; }
  std::size_t num_samples() const { return samples_.size(); }
  int sample_rate() const { return sample_rate_; }
  double duration_ms() const {
    return 1000.0 * static_cast<double>(samples_.size()) / sample_rate_;
  }

 private:
  std::string speaker_id_;
  std::string voice_id_;
  std::vector<float> samples_;
  int sample_rate_;
};

// A speaker-recognition embedding; finite entries and non-zero norm.
class Embedding {
 public:
  explicit Embedding(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double norm() const { return norm_; }

 private:
  std::vector<double> values_;
  double norm_;
};

enum class PartitionLabel {
  kImposter,
  kShadowTrain,
  kShadowNonTrain,
  kTargetTrain,
  kTargetNonTrain,
};

inline constexpr PartitionLabel kAllPartitionLabels[] = {
    PartitionLabel::kImposter, PartitionLabel::kShadowTrain,
    PartitionLabel::kShadowNonTrain, PartitionLabel::kTargetTrain,
    PartitionLabel::kTargetNonTrain};

std::string_view PartitionLabelName(PartitionLabel label);
PartitionLabel ParsePartitionLabel(std::string_view name);

enum class VoiceRole { kTrainVoice, kHeldOutVoice };

}  // namespace spkmia

#endif  // SPKMIA_TYPES_H_
