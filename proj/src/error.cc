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

#include "spkmia/error.h"

namespace spkmia {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kEmptyInput: return "empty input";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kZeroNorm: return "zero norm";
    case ErrorCode::kNotEnoughSpeakers: return "not enough speakers";
    case ErrorCode::kNotEnoughVoices: return "not enough voices";
    case ErrorCode::kUnknownTemplate: return "unknown template";
    case ErrorCode::kAccessModeViolation: return "access mode violation";
    case ErrorCode::kTechniqueModeMismatch: return "technique/mode mismatch";
    case ErrorCode::kProtocolError: return "protocol error";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kBackendError: return "backend error";
    case ErrorCode::kIoError: return "i/o error";
    case ErrorCode::kFormatError: return "format error";
    case ErrorCode::kDegenerateData: return "degenerate data";
    case ErrorCode::kStageFailure: return "stage failure";
  }
  return "unknown";
}

}  // namespace spkmia
