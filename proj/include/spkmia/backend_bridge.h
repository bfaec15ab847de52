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

// Client side of the embedding backend bridge: newline-delimited JSON over a
// child-process pipe or a TCP connection.
//
//   -> {"op":"hello","version":1}
//   <- {"op":"hello","dim":<int>,"sample_rate":<int>}
//   -> {"op":"embed","id":<int>,"sample_rate":<int>,"pcm_b64":"<f32 LE base64>"}
//   <- {"op":"embed","id":<int>,"embedding":[<floats>]}
//   <- {"op":"error","id":<int>,"message":"..."}

#ifndef SPKMIA_BACKEND_BRIDGE_H_
#define SPKMIA_BACKEND_BRIDGE_H_

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "spkmia/srs.h"

namespace spkmia {

std::string Base64Encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> Base64Decode(const std::string& text);

// Little-endian f32 payload for a voice, base64 encoded.
std::string EncodePcm(std::span<const float> samples);
std::vector<float> DecodePcm(const std::string& b64);

struct BridgeOptions {
  std::chrono::milliseconds timeout{10000};
};

class BackendBridge : public EmbeddingModel {
 public:
  // Launches argv[0] with the given arguments; talks over its stdin/stdout.
  static std::shared_ptr<BackendBridge> Spawn(const std::vector<std::string>& argv,
                                              BridgeOptions options = {});
  static std::shared_ptr<BackendBridge> Connect(const std::string& host, int port,
                                                BridgeOptions options = {});

  ~BackendBridge() override;
  BackendBridge(const BackendBridge&) = delete;
  BackendBridge& operator=(const BackendBridge&) = delete;

  std::size_t dim() const override { return dim_; }
  int sample_rate() const { return sample_rate_; }

  // Throws kProtocolError, kDimensionMismatch, kTimeout or kBackendError.
  Embedding Embed(const Voice& voice) const override;
  // Requests are serialized per connection.
  bool concurrent_safe() const override { return true; }

  std::int64_t requests_sent() const { return next_id_ - 1; }

 private:
  BackendBridge(int read_fd, int write_fd, int child_pid, BridgeOptions options);

  void Handshake();
  void SendLine(const std::string& line) const;
  std::string ReadLine() const;

  int read_fd_;
  int write_fd_;
  int child_pid_;
  BridgeOptions options_;
  std::size_t dim_ = 0;
  int sample_rate_ = 0;
  mutable std::mutex mu_;
  mutable std::string buffer_;
  mutable std::int64_t next_id_ = 1;
};

}  // namespace spkmia

#endif  // SPKMIA_BACKEND_BRIDGE_H_
