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

#include "spkmia/synthetic_srs.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include <Eigen/Dense>

#include "spkmia/error.h"
#include "spkmia/rng.h"
#include "spkmia/vector_math.h"

namespace spkmia {

namespace {

constexpr std::uint64_t kCodecSeed = 0x5eed'c0de'f4a3'e001ULL;

}  // namespace

void SyntheticSrsConfig::Validate() const {
  Require(dim > 0, ErrorCode::kInvalidArgument, "dim must be positive");
  Require(frame_rate > 0, ErrorCode::kInvalidArgument, "frame_rate must be positive");
  Require(frame_dim > 0, ErrorCode::kInvalidArgument, "frame_dim must be positive");
  Require(frame_noise_sigma >= 0, ErrorCode::kInvalidArgument,
          "frame_noise_sigma must be non-negative");
  Require(gamma >= 0 && gamma <= 1, ErrorCode::kInvalidArgument,
          "gamma must lie in [0, 1]");
  Require(beta > 0, ErrorCode::kInvalidArgument, "beta must be positive");
}

void to_json(nlohmann::json& j, const SyntheticSrsConfig& c) {
  j = {{"dim", c.dim},
       {"frame_rate", c.frame_rate},
       {"frame_dim", c.frame_dim},
       {"frame_noise_sigma", c.frame_noise_sigma},
       {"gamma", c.gamma},
       {"beta", c.beta},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SyntheticSrsConfig& c) {
  c = SyntheticSrsConfig{};
  c.dim = j.value("dim", c.dim);
  c.frame_rate = j.value("frame_rate", c.frame_rate);
  c.frame_dim = j.value("frame_dim", c.frame_dim);
  c.frame_noise_sigma = j.value("frame_noise_sigma", c.frame_noise_sigma);
  c.gamma = j.value("gamma", c.gamma);
  c.beta = j.value("beta", c.beta);
  c.seed = j.value("seed", c.seed);
}

FrameCodec::FrameCodec(int samples_per_frame, int frame_dim)
    : samples_per_frame_(samples_per_frame), frame_dim_(frame_dim) {
  Require(samples_per_frame >= frame_dim, ErrorCode::kInvalidArgument,
          "a frame needs at least frame_dim samples (" +
              std::to_string(samples_per_frame) + " < " + std::to_string(frame_dim) + ")");
  Rng rng(DeriveSeed(kCodecSeed, {static_cast<std::uint64_t>(samples_per_frame),
                                  static_cast<std::uint64_t>(frame_dim)}));
  Eigen::MatrixXd g(samples_per_frame, frame_dim);
  for (int r = 0; r < samples_per_frame; ++r) {
    for (int c = 0; c < frame_dim; ++c) g(r, c) = rng.Normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(samples_per_frame, frame_dim);
  basis_.resize(static_cast<std::size_t>(samples_per_frame) * frame_dim);
  for (int r = 0; r < samples_per_frame; ++r) {
    for (int c = 0; c < frame_dim; ++c) {
      basis_[static_cast<std::size_t>(r) * frame_dim + c] = q(r, c);
    }
  }
}

void FrameCodec::Encode(std::span<const double> frame, std::span<float> out) const {
  Require(frame.size() == static_cast<std::size_t>(frame_dim_) &&
              out.size() == static_cast<std::size_t>(samples_per_frame_),
          ErrorCode::kDimensionMismatch, "frame codec size mismatch");
  for (int r = 0; r < samples_per_frame_; ++r) {
    double s = 0.0;
    const double* row = &basis_[static_cast<std::size_t>(r) * frame_dim_];
    for (int c = 0; c < frame_dim_; ++c) s += row[c] * frame[c];
    out[r] = static_cast<float>(std::clamp(kPcmScale * s, -1.0, 1.0));
  }
}

std::vector<double> FrameCodec::DecodeSum(std::span<const float> samples,
                                          std::size_t frames) const {
  const auto spf = static_cast<std::size_t>(samples_per_frame_);
  Require(frames * spf <= samples.size(), ErrorCode::kInvalidArgument,
          "not enough samples for the requested frames");
  // Sum the per-position samples across frames, then project once.
  std::vector<double> pooled(spf, 0.0);
  for (std::size_t f = 0; f < frames; ++f) {
    const float* block = samples.data() + f * spf;
    for (std::size_t r = 0; r < spf; ++r) pooled[r] += block[r];
  }
  std::vector<double> out(static_cast<std::size_t>(frame_dim_), 0.0);
  for (std::size_t r = 0; r < spf; ++r) {
    const double* row = &basis_[r * static_cast<std::size_t>(frame_dim_)];
    for (int c = 0; c < frame_dim_; ++c) out[c] += row[c] * pooled[r];
  }
  for (double& v : out) v /= kPcmScale;
  return out;
}

std::shared_ptr<const FrameCodec> GetFrameCodec(int sample_rate, int frame_rate,
                                                int frame_dim) {
  Require(frame_rate > 0 && sample_rate % frame_rate == 0, ErrorCode::kInvalidArgument,
          "sample rate " + std::to_string(sample_rate) +
              " is not a multiple of the frame rate " + std::to_string(frame_rate));
  static std::mutex mu;
  static std::map<std::tuple<int, int>, std::shared_ptr<const FrameCodec>> cache;
  const int spf = sample_rate / frame_rate;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{spf, frame_dim}];
  if (!slot) slot = std::make_shared<FrameCodec>(spf, frame_dim);
  return slot;
}

std::vector<double> MeanFrameVector(const Voice& voice, int frame_rate, int frame_dim) {
  auto codec = GetFrameCodec(voice.sample_rate(), frame_rate, frame_dim);
  const std::size_t frames =
      voice.num_samples() / static_cast<std::size_t>(codec->samples_per_frame());
  Require(frames > 0, ErrorCode::kInvalidArgument,
          "voice '" + voice.voice_id() + "' is shorter than one frame");
  std::vector<double> m = codec->DecodeSum(voice.samples(), frames);
  for (double& v : m) v /= static_cast<double>(frames);
  return m;
}

SyntheticSrs::SyntheticSrs(SyntheticSrsConfig config, std::vector<std::string> speakers,
                           std::vector<double> centroids)
    : config_(config), speakers_(std::move(speakers)), centroids_(std::move(centroids)) {
  const auto d = static_cast<std::size_t>(config_.dim);
  const auto f = static_cast<std::size_t>(config_.frame_dim);
  Rng rng(DeriveSeed(config_.seed, {HashTag("projection")}));
  projection_.resize(d * f);
  const double scale = 1.0 / std::sqrt(static_cast<double>(f));
  for (double& w : projection_) w = rng.Normal() * scale;
  anchors_.reserve(speakers_.size() * d);
  for (std::size_t j = 0; j < speakers_.size(); ++j) {
    std::vector<double> a = Normalized(RawProjection(centroid(j)));
    anchors_.insert(anchors_.end(), a.begin(), a.end());
  }
}

std::shared_ptr<SyntheticSrs> SyntheticSrs::Train(const SyntheticSrsConfig& config,
                                                  std::span<const Voice> training_voices) {
  config.Validate();
  Require(!training_voices.empty(), ErrorCode::kEmptyInput,
          "synthetic SRS needs at least one training voice");
  const auto f = static_cast<std::size_t>(config.frame_dim);

  // Per speaker: sum of frame vectors and frame count, voices in id order.
  std::vector<const Voice*> order;
  order.reserve(training_voices.size());
  for (const Voice& v : training_voices) order.push_back(&v);
  std::sort(order.begin(), order.end(), [](const Voice* a, const Voice* b) {
    return std::tie(a->speaker_id(), a->voice_id()) < std::tie(b->speaker_id(), b->voice_id());
  });

  std::vector<std::string> speakers;
  std::vector<double> centroids;
  std::vector<double> sum(f, 0.0);
  std::size_t frames_total = 0;
  auto flush = [&]() {
    Require(frames_total > 0, ErrorCode::kInvalidArgument,
            "training speaker '" + speakers.back() + "' has no complete frame");
    for (double s : sum) centroids.push_back(s / static_cast<double>(frames_total));
    std::fill(sum.begin(), sum.end(), 0.0);
    frames_total = 0;
  };
  for (const Voice* v : order) {
    if (speakers.empty() || speakers.back() != v->speaker_id()) {
      if (!speakers.empty()) flush();
      speakers.push_back(v->speaker_id());
    }
    auto codec = GetFrameCodec(v->sample_rate(), config.frame_rate, config.frame_dim);
    const std::size_t frames =
        v->num_samples() / static_cast<std::size_t>(codec->samples_per_frame());
    if (frames == 0) continue;
    std::vector<double> s = codec->DecodeSum(v->samples(), frames);
    for (std::size_t i = 0; i < f; ++i) sum[i] += s[i];
    frames_total += frames;
  }
  flush();
  return std::shared_ptr<SyntheticSrs>(
      new SyntheticSrs(config, std::move(speakers), std::move(centroids)));
}

std::shared_ptr<SyntheticSrs> SyntheticSrs::FromJson(const nlohmann::json& state) {
  SyntheticSrsConfig config = state.at("config").get<SyntheticSrsConfig>();
  config.Validate();
  auto speakers = state.at("speakers").get<std::vector<std::string>>();
  auto centroids = state.at("centroids").get<std::vector<double>>();
  Require(centroids.size() == speakers.size() * static_cast<std::size_t>(config.frame_dim),
          ErrorCode::kFormatError, "centroid table does not match speaker count");
  Require(!speakers.empty(), ErrorCode::kFormatError, "model has no training speakers");
  return std::shared_ptr<SyntheticSrs>(
      new SyntheticSrs(config, std::move(speakers), std::move(centroids)));
}

nlohmann::json SyntheticSrs::ToJson() const {
  return {{"type", "synthetic-srs"},
          {"config", config_},
          {"speakers", speakers_},
          {"centroids", centroids_}};
}

std::span<const double> SyntheticSrs::centroid(std::size_t j) const {
  const auto f = static_cast<std::size_t>(config_.frame_dim);
  return std::span<const double>(centroids_).subspan(j * f, f);
}

std::span<const double> SyntheticSrs::anchor(std::size_t j) const {
  const auto d = static_cast<std::size_t>(config_.dim);
  return std::span<const double>(anchors_).subspan(j * d, d);
}

std::vector<double> SyntheticSrs::RawProjection(std::span<const double> mean_frame) const {
  const auto d = static_cast<std::size_t>(config_.dim);
  const auto f = static_cast<std::size_t>(config_.frame_dim);
  Require(mean_frame.size() == f, ErrorCode::kDimensionMismatch,
          "mean frame vector has the wrong dimension");
  std::vector<double> raw(d, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    const double* row = &projection_[r * f];
    double s = 0.0;
    for (std::size_t c = 0; c < f; ++c) s += row[c] * mean_frame[c];
    raw[r] = s;
  }
  return raw;
}

Embedding SyntheticSrs::EmbedFrameMean(std::span<const double> mean_frame) const {
  std::vector<double> out = RawProjection(mean_frame);
  if (config_.gamma > 0.0) {
    const auto f = static_cast<std::size_t>(config_.frame_dim);
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < speakers_.size(); ++j) {
      const double* c = &centroids_[j * f];
      double d2 = 0.0;
      for (std::size_t i = 0; i < f; ++i) {
        const double diff = mean_frame[i] - c[i];
        d2 += diff * diff;
      }
      if (d2 < best_d2) {
        best_d2 = d2;
        best = j;
      }
    }
    const double pull = config_.gamma * std::exp(-best_d2 / config_.beta);
    std::span<const double> a = anchor(best);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += pull * (a[i] - out[i]);
  }
  return Embedding(Normalized(out));
}

Embedding SyntheticSrs::Embed(const Voice& voice) const {
  return EmbedFrameMean(MeanFrameVector(voice, config_.frame_rate, config_.frame_dim));
}

}  // namespace spkmia
