/*
 * Copyright 2026 The Cardforge Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CARDFORGE_ERROR_H_
#define CARDFORGE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace cardforge {

enum class ErrorCode {
  // Input data.
  kMissingColumn,
  kValueOutOfRange,
  kInvalidLabel,
  kDuplicateId,
  kManifestMismatch,
  kInvalidManifest,
  kNonNumericColumn,
  kAlreadyBinned,
  kParseError,
  kIoError,
  // Metrics / audit.
  kMixedPredictionKinds,
  kEmptyCohort,
  kInvalidConfig,
  kMissingCI,
  // Bootstrap.
  kEmptyInput,
  kAllReplicatesDegenerate,
  // Card.
  kMissingSection,
  kInvalidCard,
  kUnsupportedSchema,
  kEmptySpec,
  // Synth.
  kInvalidSpec,
};

std::string_view error_code_name(ErrorCode code);

// All library failures surface as this exception; `code()` is stable and is
// what the CLI maps onto exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cardforge

#endif  // CARDFORGE_ERROR_H_
