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

#include "spkmia/vector_math.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "spkmia/error.h"
#include "spkmia/exact_sum.h"

namespace spkmia {

double Dot(std::span<const double> a, std::span<const double> b) {
  Require(a.size() == b.size(), ErrorCode::kDimensionMismatch,
          "dot of " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double CosineSimilarity(const Embedding& a, const Embedding& b) {
  Require(a.dim() == b.dim(), ErrorCode::kDimensionMismatch,
          "cosine of " + std::to_string(a.dim()) + "-d vs " +
              std::to_string(b.dim()) + "-d embeddings");
  double c = Dot(a.values(), b.values()) / (a.norm() * b.norm());
  return std::clamp(c, -1.0, 1.0);
}

Embedding Centroid(std::span<const Embedding> embeddings) {
  Require(!embeddings.empty(), ErrorCode::kEmptyInput, "centroid of no embeddings");
  const std::size_t d = embeddings.front().dim();
  std::vector<ExactAccumulator> acc(d);
  for (const Embedding& e : embeddings) {
    Require(e.dim() == d, ErrorCode::kDimensionMismatch,
            "centroid over mixed dimensions");
    for (std::size_t i = 0; i < d; ++i) acc[i].Add(e[i]);
  }
  std::vector<double> mean(d);
  for (std::size_t i = 0; i < d; ++i) mean[i] = acc[i].Mean(embeddings.size());
  return Embedding(std::move(mean));
}

std::vector<double> Normalized(std::span<const double> v) {
  double sq = 0.0;
  for (double x : v) sq += x * x;
  Require(sq > 0.0, ErrorCode::kZeroNorm, "cannot normalize the zero vector");
  const double inv = 1.0 / std::sqrt(sq);
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x *= inv;
  return out;
}

}  // namespace spkmia
