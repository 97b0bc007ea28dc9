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

#ifndef DEJAVU_ERROR_H_
#define DEJAVU_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace dejavu {

enum class ErrorCode {
  kIo,
  kMagicMismatch,
  kVersionUnsupported,
  kIdCountMismatch,
  kNonFiniteValue,
  kZeroRow,
  kNotNormalized,
  kParseError,
  kDuplicateSample,
  kScoreOutOfRange,
  kDimMismatch,
  kEmptyIndex,
  kMissingLabel,
  kInvalidDistribution,
  kEmptyClass,
  kUnlabeledSample,
  kUnknownObject,
  kMissingInput,
  kMissingSample,
  kEmptyInput,
  kEmptyAfterFilter,
  kIdSetMismatch,
  kEmptyIntersection,
  kMissingAnnotation,
  kInvalidSpec,
  kInvalidArgument,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every data-level failure in the library is reported through this type.
// The CLI maps it to exit code 1.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dejavu

#endif  // DEJAVU_ERROR_H_
