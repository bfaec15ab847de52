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

#include "spkmia/config.h"

#include <cmath>

#include "spkmia/error.h"
#include "spkmia/file_util.h"

namespace spkmia {

std::string_view MixingModeName(MixingMode m) {
  switch (m) {
    case MixingMode::kMix: return "mix";
    case MixingMode::kOnlyR1: return "r1";
    case MixingMode::kOnlyR0: return "r0";
  }
  return "?";
}

MixingMode ParseMixingMode(std::string_view name) {
  if (name == "mix") return MixingMode::kMix;
  if (name == "r1") return MixingMode::kOnlyR1;
  if (name == "r0") return MixingMode::kOnlyR0;
  Fail(ErrorCode::kInvalidArgument, "unknown mixing mode '" + std::string(name) + "'");
}

void AuditConfig::Validate() const {
  Require(dataset.type == "synthetic" || dataset.type == "directory",
          ErrorCode::kInvalidArgument, "dataset.type must be synthetic or directory");
  if (dataset.type == "synthetic") {
    dataset.synthetic.Validate();
  } else {
    Require(!dataset.path.empty(), ErrorCode::kInvalidArgument, "dataset.path is required");
  }
  Require(srs.type == "synthetic" || srs.type == "backend", ErrorCode::kInvalidArgument,
          "srs.type must be synthetic or backend");
  if (srs.type == "synthetic") {
    srs.synthetic.Validate();
    if (dataset.type == "synthetic") {
      Require(srs.synthetic.frame_dim == dataset.synthetic.identity_dim &&
                  srs.synthetic.frame_rate == dataset.synthetic.frame_rate,
              ErrorCode::kInvalidArgument,
              "synthetic SRS frame_dim/frame_rate must match the dataset");
    }
  } else {
    Require(!srs.command.empty() || (!srs.host.empty() && srs.port > 0),
            ErrorCode::kInvalidArgument, "backend needs a command or host:port");
    Require(srs.timeout_ms > 0, ErrorCode::kInvalidArgument, "timeout_ms must be positive");
  }
  Require(setting.type == "setting1" || setting.type == "setting2", ErrorCode::kInvalidArgument,
          "setting.type must be setting1 or setting2");
  if (setting.type == "setting2") {
    Require(setting.n >= 2, ErrorCode::kInvalidArgument, "Setting-2 requires N >= 2");
    Require(setting.m >= 1 && setting.k >= 1, ErrorCode::kInvalidArgument,
            "Setting-2 requires M, K >= 1");
    if (setting.chunking) setting.chunk.Validate();
  }
  Require(attack.model == "classifier" || attack.model == "threshold",
          ErrorCode::kInvalidArgument, "attack.model must be classifier or threshold");
  if (attack.model == "threshold") FeatureIndex(attack.feature);
  attack.train.Validate();
  Require(attack.bound.step >= 1 && attack.bound.alpha > 0 && attack.bound.alpha < 1 &&
              attack.bound.start_n >= 2,
          ErrorCode::kInvalidArgument, "invalid bound parameters");
  Require(!attack.vnd || setting.type == "setting2", ErrorCode::kInvalidArgument,
          "voice-number-dependent banks need Setting-2");
  Require(!techniques.group || access == SrsAccessMode::kBlackBoxIdentification,
          ErrorCode::kInvalidArgument, "group enrollment needs black-box-identification access");
  for (double r : ratios) {
    Require(r >= 0 && r <= 1, ErrorCode::kInvalidArgument, "ratios must lie in [0, 1]");
  }
  Require(permutations >= 1, ErrorCode::kInvalidArgument, "permutations must be positive");
  Require(workers >= 1, ErrorCode::kInvalidArgument, "workers must be positive");
}

void to_json(nlohmann::json& j, const AuditConfig& c) {
  nlohmann::json dataset = {{"type", c.dataset.type}};
  if (c.dataset.type == "synthetic") {
    dataset["synthetic"] = c.dataset.synthetic;
  } else {
    dataset["path"] = c.dataset.path;
  }
  nlohmann::json srs = {{"type", c.srs.type}};
  if (c.srs.type == "synthetic") {
    srs["synthetic"] = c.srs.synthetic;
  } else {
    srs["command"] = c.srs.command;
    srs["host"] = c.srs.host;
    srs["port"] = c.srs.port;
    srs["timeout_ms"] = c.srs.timeout_ms;
  }
  j = {{"dataset", dataset},
       {"partition_seed", c.partition_seed},
       {"srs", srs},
       {"access", std::string(AccessModeName(c.access))},
       {"setting",
        {{"type", c.setting.type},
         {"n", c.setting.n},
         {"m", c.setting.m},
         {"k", c.setting.k},
         {"source_voices", c.setting.source_voices},
         {"chunking", c.setting.chunking},
         {"chunk", c.setting.chunk}}},
       {"attack",
        {{"model", c.attack.model},
         {"feature", c.attack.feature},
         {"mixing", std::string(MixingModeName(c.attack.mixing))},
         {"vnd", c.attack.vnd},
         {"bound",
          {{"step", c.attack.bound.step},
           {"alpha", c.attack.bound.alpha},
           {"start_n", c.attack.bound.start_n},
           {"max_n", c.attack.bound.max_n}}},
         {"train", c.attack.train}}},
       {"techniques",
        {{"concat", c.techniques.concat},
         {"group", c.techniques.group},
         {"share", c.techniques.share}}},
       {"ratios", c.ratios},
       {"permutation_importance", c.permutation_importance},
       {"permutations", c.permutations},
       {"trials", c.trials},
       {"workers", c.workers},
       {"seed", c.seed},
       {"output_dir", c.output_dir}};
}

void from_json(const nlohmann::json& j, AuditConfig& c) {
  c = AuditConfig{};
  try {
    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      c.dataset.type = d.value("type", c.dataset.type);
      if (d.contains("synthetic")) c.dataset.synthetic = d["synthetic"].get<SynthParams>();
      c.dataset.path = d.value("path", c.dataset.path);
    }
    c.partition_seed = j.value("partition_seed", c.partition_seed);
    if (j.contains("srs")) {
      const auto& s = j["srs"];
      c.srs.type = s.value("type", c.srs.type);
      if (s.contains("synthetic")) c.srs.synthetic = s["synthetic"].get<SyntheticSrsConfig>();
      c.srs.command = s.value("command", c.srs.command);
      c.srs.host = s.value("host", c.srs.host);
      c.srs.port = s.value("port", c.srs.port);
      c.srs.timeout_ms = s.value("timeout_ms", c.srs.timeout_ms);
    }
    if (j.contains("access")) c.access = ParseAccessMode(j["access"].get<std::string>());
    if (j.contains("setting")) {
      const auto& s = j["setting"];
      c.setting.type = s.value("type", c.setting.type);
      c.setting.n = s.value("n", c.setting.n);
      c.setting.m = s.value("m", c.setting.m);
      c.setting.k = s.value("k", c.setting.k);
      c.setting.source_voices = s.value("source_voices", c.setting.source_voices);
      c.setting.chunking = s.value("chunking", c.setting.chunking);
      if (s.contains("chunk")) c.setting.chunk = s["chunk"].get<ChunkConfig>();
    }
    if (j.contains("attack")) {
      const auto& a = j["attack"];
      c.attack.model = a.value("model", c.attack.model);
      c.attack.feature = a.value("feature", c.attack.feature);
      if (a.contains("mixing")) c.attack.mixing = ParseMixingMode(a["mixing"].get<std::string>());
      c.attack.vnd = a.value("vnd", c.attack.vnd);
      if (a.contains("bound")) {
        const auto& b = a["bound"];
        c.attack.bound.step = b.value("step", c.attack.bound.step);
        c.attack.bound.alpha = b.value("alpha", c.attack.bound.alpha);
        c.attack.bound.start_n = b.value("start_n", c.attack.bound.start_n);
        c.attack.bound.max_n = b.value("max_n", c.attack.bound.max_n);
      }
      if (a.contains("train")) c.attack.train = a["train"].get<TrainConfig>();
    }
    if (j.contains("techniques")) {
      const auto& t = j["techniques"];
      c.techniques.concat = t.value("concat", false);
      c.techniques.group = t.value("group", false);
      c.techniques.share = t.value("share", false);
    }
    c.ratios = j.value("ratios", c.ratios);
    c.permutation_importance = j.value("permutation_importance", c.permutation_importance);
    c.permutations = j.value("permutations", c.permutations);
    c.trials = j.value("trials", c.trials);
    c.workers = j.value("workers", c.workers);
    c.seed = j.value("seed", c.seed);
    c.output_dir = j.value("output_dir", c.output_dir);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("bad config: ") + e.what());
  }
}

AuditConfig LoadAuditConfig(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ReadFile(path));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, path + ": " + e.what());
  } catch (const Error& e) {
    Fail(ErrorCode::kInvalidArgument, e.what());
  }
  AuditConfig c = j.get<AuditConfig>();
  c.Validate();
  return c;
}

std::string ConfigHash(const AuditConfig& c) {
  nlohmann::json j = c;
  j.erase("output_dir");
  j.erase("workers");
  return Sha256Hex(j.dump());
}

}  // namespace spkmia
