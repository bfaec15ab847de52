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

// Audit configuration: one JSON document, hashed for cache keys.

#ifndef SPKMIA_CONFIG_H_
#define SPKMIA_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "spkmia/attack.h"
#include "spkmia/chunking.h"
#include "spkmia/dataset.h"
#include "spkmia/query_plan.h"
#include "spkmia/srs.h"
#include "spkmia/synthetic_srs.h"

namespace spkmia {

struct DatasetConfig {
  std::string type = "synthetic";  // or "directory"
  SynthParams synthetic;
  std::string path;
};

struct SrsConfig {
  std::string type = "synthetic";  // or "backend"
  SyntheticSrsConfig synthetic;
  std::vector<std::string> command;  // backend child process
  std::string host;                  // backend TCP endpoint when command is empty
  int port = 0;
  int timeout_ms = 10000;
};

struct SettingConfig {
  std::string type = "setting2";  // or "setting1"
  std::size_t n = 10;
  std::size_t m = 20;
  std::size_t k = 10;
  std::size_t source_voices = 0;  // 0: n
  bool chunking = true;
  ChunkConfig chunk;
};

struct AttackConfig {
  std::string model = "classifier";  // or "threshold"
  std::string feature = "intra/p/avg";
  MixingMode mixing = MixingMode::kMix;
  bool vnd = false;
  BoundOptions bound{5, 0.05, 2, 64};
  TrainConfig train;
};

struct AuditConfig {
  DatasetConfig dataset;
  std::uint64_t partition_seed = 0;
  SrsConfig srs;
  SrsAccessMode access = SrsAccessMode::kWhiteBox;
  SettingConfig setting;
  AttackConfig attack;
  Technique techniques;
  std::vector<double> ratios{0.0, 0.5, 1.0};
  bool permutation_importance = false;
  int permutations = 10;
  std::size_t trials = 4000;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
  std::string output_dir = "spkmia-out";

  // Throws kInvalidArgument.
  void Validate() const;
};

void to_json(nlohmann::json& j, const AuditConfig& c);
// Missing fields keep their defaults; throws kInvalidArgument on bad values.
void from_json(const nlohmann::json& j, AuditConfig& c);

AuditConfig LoadAuditConfig(const std::string& path);

// SHA-256 of the canonical JSON (sorted keys) without output_dir and workers.
std::string ConfigHash(const AuditConfig& c);

std::string_view MixingModeName(MixingMode m);
MixingMode ParseMixingMode(std::string_view name);

}  // namespace spkmia

#endif  // SPKMIA_CONFIG_H_
