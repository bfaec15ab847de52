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

// The access contract to a speaker recognition system (SRS). A model maps
// voices to embeddings; an SrsSession wraps a model with an access mode and a
// query ledger, exposing either the white-box embedding call or the black-box
// enroll/recognize calls.

#ifndef SPKMIA_SRS_H_
#define SPKMIA_SRS_H_

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string_view>
#include <vector>

#include "spkmia/exact_sum.h"
#include "spkmia/types.h"

namespace spkmia {

enum class SrsAccessMode { kWhiteBox, kBlackBoxVerification, kBlackBoxIdentification };

std::string_view AccessModeName(SrsAccessMode mode);
SrsAccessMode ParseAccessMode(std::string_view name);

struct QueryCounts {
  std::uint64_t enroll = 0;
  std::uint64_t recognize = 0;
  std::uint64_t embed = 0;

  std::uint64_t total() const { return enroll + recognize + embed; }
  bool operator==(const QueryCounts&) const = default;
};

// Monotone per-audit counters; increments from concurrent workers are atomic.
class QueryLedger {
 public:
  void CountEnroll() { enroll_.fetch_add(1, std::memory_order_relaxed); }
  void CountRecognize() { recognize_.fetch_add(1, std::memory_order_relaxed); }
  void CountEmbed() { embed_.fetch_add(1, std::memory_order_relaxed); }

  QueryCounts Snapshot() const {
    return {enroll_.load(), recognize_.load(), embed_.load()};
  }

 private:
  std::atomic<std::uint64_t> enroll_{0};
  std::atomic<std::uint64_t> recognize_{0};
  std::atomic<std::uint64_t> embed_{0};
};

class EmbeddingModel {
 public:
  virtual ~EmbeddingModel() = default;
  virtual std::size_t dim() const = 0;
  virtual Embedding Embed(const Voice& voice) const = 0;
  // Whether Embed may be called from several threads at once.
  virtual bool concurrent_safe() const { return true; }
};

using TemplateId = std::uint64_t;

// Registered speaker template: the centroid of the embeddings of every voice
// added so far.
class EnrolledTemplate {
 public:
  explicit EnrolledTemplate(TemplateId id) : id_(id) {}

  TemplateId id() const { return id_; }
  void Add(const Embedding& e);
  std::size_t num_voices() const { return count_; }
  // Throws kEmptyInput if no voice has been added.
  const Embedding& embedding() const;

 private:
  TemplateId id_;
  std::vector<ExactAccumulator> sum_;
  std::size_t count_ = 0;
  std::unique_ptr<Embedding> centroid_;
};

class SrsSession {
 public:
  SrsSession(std::shared_ptr<const EmbeddingModel> model, SrsAccessMode mode);

  SrsAccessMode mode() const { return mode_; }
  std::size_t dim() const { return model_->dim(); }
  const EmbeddingModel& model() const { return *model_; }

  // White-box only.
  Embedding Embed(const Voice& voice);

  // Black-box only.
  TemplateId EnrollCreate();
  void EnrollAdd(TemplateId id, const Voice& voice);
  // One score per template, cosine of the voice's embedding with the template.
  // Verification mode accepts exactly one template per call; identification
  // scores the whole gallery and is metered as a single recognition.
  std::vector<double> Recognize(const Voice& voice, std::span<const TemplateId> templates);
  double Recognize(const Voice& voice, TemplateId id);

  QueryCounts counts() const { return ledger_.Snapshot(); }
  QueryLedger& ledger() { return ledger_; }

  // Unmetered inspection hook for tests and diagnostics.
  Embedding TemplateEmbedding(TemplateId id) const;

 private:
  void RequireBlackBox(std::string_view op) const;

  std::shared_ptr<const EmbeddingModel> model_;
  SrsAccessMode mode_;
  QueryLedger ledger_;
  mutable std::mutex mu_;
  std::map<TemplateId, EnrolledTemplate> templates_;
  TemplateId next_id_ = 1;
};

}  // namespace spkmia

#endif  // SPKMIA_SRS_H_
