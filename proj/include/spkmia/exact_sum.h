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

#ifndef SPKMIA_EXACT_SUM_H_
#define SPKMIA_EXACT_SUM_H_

#include <array>
#include <cstddef>
#include <cstdint>

namespace spkmia {

// Accumulates doubles without rounding and returns the correctly rounded
// mean. The mean depends only on the multiset of inputs as an exact rational,
// so repeating a list k times, or permuting it, yields a bit-identical result.
class ExactAccumulator {
 public:
  void Add(double v);
  // Correctly rounded sum / count; count > 0.
  double Mean(std::size_t count) const;

 private:
  // Bit 0 of limb 0 has weight 2^-kBias.
  static constexpr int kBias = 1126;
  static constexpr std::size_t kLimbs = 36;
  using Limbs = std::array<std::uint64_t, kLimbs>;

  static void AddMagnitude(Limbs& acc, std::uint64_t mag, int position);

  Limbs pos_{};
  Limbs neg_{};
};

}  // namespace spkmia

#endif  // SPKMIA_EXACT_SUM_H_
