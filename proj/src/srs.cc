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

#include "spkmia/srs.h"

#include <string>

#include "spkmia/error.h"
#include "spkmia/vector_math.h"

namespace spkmia {

std::string_view AccessModeName(SrsAccessMode mode) {
  switch (mode) {
    case SrsAccessMode::kWhiteBox: return "white-box";
    case SrsAccessMode::kBlackBoxVerification: return "black-box-verification";
    case SrsAccessMode::kBlackBoxIdentification: return "black-box-identification";
  }
  return "unknown";
}

SrsAccessMode ParseAccessMode(std::string_view name) {
  for (auto m : {SrsAccessMode::kWhiteBox, SrsAccessMode::kBlackBoxVerification,
                 SrsAccessMode::kBlackBoxIdentification}) {
    if (AccessModeName(m) == name) return m;
  }
  Fail(ErrorCode::kFormatError, "unknown access mode '" + std::string(name) + "'");
}

void EnrolledTemplate::Add(const Embedding& e) {
  if (sum_.empty()) sum_.resize(e.dim());
  Require(e.dim() == sum_.size(), ErrorCode::kDimensionMismatch,
          "template dimension changed");
  for (std::size_t i = 0; i < e.dim(); ++i) sum_[i].Add(e[i]);
  ++count_;
  std::vector<double> mean(sum_.size());
  for (std::size_t i = 0; i < sum_.size(); ++i) mean[i] = sum_[i].Mean(count_);
  centroid_ = std::make_unique<Embedding>(std::move(mean));
}

const Embedding& EnrolledTemplate::embedding() const {
  Require(centroid_ != nullptr, ErrorCode::kEmptyInput,
          "template " + std::to_string(id_) + " has no enrolled voice");
  return *centroid_;
}

SrsSession::SrsSession(std::shared_ptr<const EmbeddingModel> model, SrsAccessMode mode)
    : model_(std::move(model)), mode_(mode) {
  Require(model_ != nullptr, ErrorCode::kInvalidArgument, "null embedding model");
}

void SrsSession::RequireBlackBox(std::string_view op) const {
  Require(mode_ != SrsAccessMode::kWhiteBox, ErrorCode::kAccessModeViolation,
          std::string(op) + " is not exposed in white-box mode");
}

Embedding SrsSession::Embed(const Voice& voice) {
  Require(mode_ == SrsAccessMode::kWhiteBox, ErrorCode::kAccessModeViolation,
          "embed is only exposed in white-box mode");
  ledger_.CountEmbed();
  return model_->Embed(voice);
}

TemplateId SrsSession::EnrollCreate() {
  RequireBlackBox("enroll_create");
  std::lock_guard<std::mutex> lock(mu_);
  const TemplateId id = next_id_++;
  templates_.emplace(id, EnrolledTemplate(id));
  return id;
}

void SrsSession::EnrollAdd(TemplateId id, const Voice& voice) {
  RequireBlackBox("enroll_add");
  {
    std::lock_guard<std::mutex> lock(mu_);
    Require(templates_.count(id) > 0, ErrorCode::kUnknownTemplate,
            "template " + std::to_string(id) + " does not exist");
  }
  Embedding e = model_->Embed(voice);
  std::lock_guard<std::mutex> lock(mu_);
  templates_.at(id).Add(e);
  ledger_.CountEnroll();
}

std::vector<double> SrsSession::Recognize(const Voice& voice,
                                          std::span<const TemplateId> templates) {
  RequireBlackBox("recognize");
  Require(!templates.empty(), ErrorCode::kInvalidArgument,
          "recognize needs at least one template");
  Require(mode_ != SrsAccessMode::kBlackBoxVerification || templates.size() == 1,
          ErrorCode::kAccessModeViolation,
          "verification mode scores exactly one template per query");
  std::vector<Embedding> gallery;
  gallery.reserve(templates.size());
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (TemplateId id : templates) {
      auto it = templates_.find(id);
      Require(it != templates_.end(), ErrorCode::kUnknownTemplate,
              "template " + std::to_string(id) + " does not exist");
      gallery.push_back(it->second.embedding());
    }
  }
  const Embedding probe = model_->Embed(voice);
  std::vector<double> scores;
  scores.reserve(gallery.size());
  for (const Embedding& t : gallery) scores.push_back(CosineSimilarity(probe, t));
  ledger_.CountRecognize();
  return scores;
}

double SrsSession::Recognize(const Voice& voice, TemplateId id) {
  const TemplateId ids[] = {id};
  return Recognize(voice, ids).front();
}

Embedding SrsSession::TemplateEmbedding(TemplateId id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = templates_.find(id);
  Require(it != templates_.end(), ErrorCode::kUnknownTemplate,
          "template " + std::to_string(id) + " does not exist");
  return it->second.embedding();
}

}  // namespace spkmia
