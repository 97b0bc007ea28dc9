// Copyright 2026 The Dejavu Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dejavu/error.h"

namespace dejavu {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kMagicMismatch: return "MagicMismatch";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kIdCountMismatch: return "IdCountMismatch";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kZeroRow: return "ZeroRow";
    case ErrorCode::kNotNormalized: return "NotNormalized";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDuplicateSample: return "DuplicateSample";
    case ErrorCode::kScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kEmptyIndex: return "EmptyIndex";
    case ErrorCode::kMissingLabel: return "MissingLabel";
    case ErrorCode::kInvalidDistribution: return "InvalidDistribution";
    case ErrorCode::kEmptyClass: return "EmptyClass";
    case ErrorCode::kUnlabeledSample: return "UnlabeledSample";
    case ErrorCode::kUnknownObject: return "UnknownObject";
    case ErrorCode::kMissingInput: return "MissingInput";
    case ErrorCode::kMissingSample: return "MissingSample";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kEmptyAfterFilter: return "EmptyAfterFilter";
    case ErrorCode::kIdSetMismatch: return "IdSetMismatch";
    case ErrorCode::kEmptyIntersection: return "EmptyIntersection";
    case ErrorCode::kMissingAnnotation: return "MissingAnnotation";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace dejavu
