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

#ifndef SPKMIA_VECTOR_MATH_H_
#define SPKMIA_VECTOR_MATH_H_

#include <span>
#include <vector>

#include "spkmia/types.h"

namespace spkmia {

// <a,b> / (|a||b|). Throws kDimensionMismatch when dimensions differ.
double CosineSimilarity(const Embedding& a, const Embedding& b);

// Component-wise mean. Throws kEmptyInput on an empty list.
Embedding Centroid(std::span<const Embedding> embeddings);

// Unit-norm copy of v. Throws kZeroNorm for the zero vector.
std::vector<double> Normalized(std::span<const double> v);

double Dot(std::span<const double> a, std::span<const double> b);

}  // namespace spkmia

#endif  // SPKMIA_VECTOR_MATH_H_
