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

#include "spkmia/exact_sum.h"

#include <cmath>

#include <boost/multiprecision/cpp_int.hpp>

#include "spkmia/error.h"

namespace spkmia {

using boost::multiprecision::cpp_int;

void ExactAccumulator::AddMagnitude(Limbs& acc, std::uint64_t mag, int position) {
  std::size_t limb = static_cast<std::size_t>(position / 64);
  const int off = position % 64;
  const std::uint64_t lo = mag << off;
  const std::uint64_t hi = off == 0 ? 0 : (mag >> (64 - off));
  std::uint64_t carry = 0;
  std::uint64_t before = acc[limb];
  acc[limb] += lo;
  carry = acc[limb] < before ? 1 : 0;
  ++limb;
  std::uint64_t add = hi;
  while ((add != 0 || carry != 0) && limb < kLimbs) {
    before = acc[limb];
    std::uint64_t sum = before + add;
    std::uint64_t c1 = sum < before ? 1 : 0;
    std::uint64_t sum2 = sum + carry;
    std::uint64_t c2 = sum2 < sum ? 1 : 0;
    acc[limb] = sum2;
    carry = c1 + c2;
    add = 0;
    ++limb;
  }
}

void ExactAccumulator::Add(double v) {
  Require(std::isfinite(v), ErrorCode::kInvalidArgument, "non-finite value in sum");
  if (v == 0.0) return;
  int exp = 0;
  const double frac = std::frexp(v, &exp);
  const auto mantissa = static_cast<std::int64_t>(std::ldexp(frac, 53));
  const int position = exp - 53 + kBias;
  if (mantissa > 0) {
    AddMagnitude(pos_, static_cast<std::uint64_t>(mantissa), position);
  } else {
    AddMagnitude(neg_, static_cast<std::uint64_t>(-mantissa), position);
  }
}

namespace {

cpp_int ToInt(const std::array<std::uint64_t, 36>& limbs) {
  cpp_int out = 0;
  for (std::size_t i = limbs.size(); i-- > 0;) {
    out <<= 64;
    out += limbs[i];
  }
  return out;
}

}  // namespace

double ExactAccumulator::Mean(std::size_t count) const {
  Require(count > 0, ErrorCode::kEmptyInput, "mean of zero values");
  cpp_int num = ToInt(pos_) - ToInt(neg_);
  if (num == 0) return 0.0;
  const bool negative = num < 0;
  if (negative) num = -num;
  const cpp_int den = count;

  // Quotient with at least 55 significant bits plus a sticky remainder.
  const long num_bits = static_cast<long>(boost::multiprecision::msb(num));
  const long den_bits = static_cast<long>(boost::multiprecision::msb(den));
  const long shift = std::max(0L, 56 + den_bits - num_bits);
  cpp_int scaled = num << shift;
  cpp_int q = scaled / den;
  const bool sticky = (scaled % den) != 0;

  const long q_bits = static_cast<long>(boost::multiprecision::msb(q)) + 1;
  const long drop = q_bits - 53;
  cpp_int mant = q >> drop;
  const cpp_int rem = q - (mant << drop);
  const cpp_int half = cpp_int(1) << (drop - 1);
  if (rem > half || (rem == half && (sticky || (mant & 1) != 0))) ++mant;

  double out = std::ldexp(static_cast<double>(mant),
                          static_cast<int>(drop - shift - kBias));
  return negative ? -out : out;
}

}  // namespace spkmia
