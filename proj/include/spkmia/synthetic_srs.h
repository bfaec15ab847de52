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

// A deterministic synthetic SRS with a tunable memorization level.
//
// Audio is cut into frames of 1/frame_rate seconds. A fixed orthonormal frame
// codec maps each frame's samples to a frame_dim vector (the codec is shared
// with the dataset synthesizer, which renders frame vectors into PCM). A
// voice's embedding is computed from the mean frame vector m:
//
//   raw    = W m
//   warped = raw + gamma * k(m) * (a_j - raw),  k(m) = exp(-|m - c_j|^2 / beta)
//
// where c_j is the frame-space centroid of the nearest training speaker and
// a_j = normalize(W c_j) its anchor. The embedding is normalize(warped).

#ifndef SPKMIA_SYNTHETIC_SRS_H_
#define SPKMIA_SYNTHETIC_SRS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "spkmia/srs.h"
#include "spkmia/types.h"

namespace spkmia {

struct SyntheticSrsConfig {
  int dim = 32;
  int frame_rate = 100;
  int frame_dim = 16;
  double frame_noise_sigma = 0.3;
  double gamma = 0.0;
  double beta = 0.5;
  std::uint64_t seed = 0;

  void Validate() const;
};

void to_json(nlohmann::json& j, const SyntheticSrsConfig& c);
void from_json(const nlohmann::json& j, SyntheticSrsConfig& c);

// Orthonormal map between a frame's samples and its frame vector. Fixed for a
// given (samples_per_frame, frame_dim); independent of any SRS seed.
class FrameCodec {
 public:
  // PCM amplitude per unit of frame-vector coordinate.
  static constexpr double kPcmScale = 0.25;

  FrameCodec(int samples_per_frame, int frame_dim);

  int samples_per_frame() const { return samples_per_frame_; }
  int frame_dim() const { return frame_dim_; }

  // frame vector -> samples_per_frame samples, clipped to [-1, 1].
  void Encode(std::span<const double> frame, std::span<float> out) const;
  // Sum of the frame vectors of `frames` whole frames starting at samples[0].
  std::vector<double> DecodeSum(std::span<const float> samples, std::size_t frames) const;

 private:
  int samples_per_frame_;
  int frame_dim_;
  std::vector<double> basis_;  // samples_per_frame x frame_dim, row-major
};

// Shared codec instance for a sample rate / frame layout.
std::shared_ptr<const FrameCodec> GetFrameCodec(int sample_rate, int frame_rate,
                                                int frame_dim);

// Mean frame vector of a voice (trailing partial frame ignored).
// Throws kInvalidArgument for a voice shorter than one frame.
std::vector<double> MeanFrameVector(const Voice& voice, int frame_rate, int frame_dim);

class SyntheticSrs : public EmbeddingModel {
 public:
  // Trains on the given voices (grouped by speaker_id). Throws kEmptyInput
  // when no voices are given.
  static std::shared_ptr<SyntheticSrs> Train(const SyntheticSrsConfig& config,
                                             std::span<const Voice> training_voices);

  // Restores a trained model from its serialized state.
  static std::shared_ptr<SyntheticSrs> FromJson(const nlohmann::json& state);
  nlohmann::json ToJson() const;

  std::size_t dim() const override { return static_cast<std::size_t>(config_.dim); }
  Embedding Embed(const Voice& voice) const override;

  // Embedding of a mean frame vector (the pooled representation).
  Embedding EmbedFrameMean(std::span<const double> mean_frame) const;
  // W m before warping.
  std::vector<double> RawProjection(std::span<const double> mean_frame) const;

  const SyntheticSrsConfig& config() const { return config_; }
  const std::vector<std::string>& speakers() const { return speakers_; }
  std::span<const double> centroid(std::size_t j) const;
  std::span<const double> anchor(std::size_t j) const;

 private:
  SyntheticSrs(SyntheticSrsConfig config, std::vector<std::string> speakers,
               std::vector<double> centroids);

  SyntheticSrsConfig config_;
  std::vector<double> projection_;  // dim x frame_dim, row-major
  std::vector<std::string> speakers_;
  std::vector<double> centroids_;  // speakers x frame_dim
  std::vector<double> anchors_;    // speakers x dim
};

}  // namespace spkmia

#endif  // SPKMIA_SYNTHETIC_SRS_H_
