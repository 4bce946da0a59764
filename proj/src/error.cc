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

#include "cardforge/error.h"

namespace cardforge {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::kInvalidLabel: return "InvalidLabel";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kManifestMismatch: return "ManifestMismatch";
    case ErrorCode::kInvalidManifest: return "InvalidManifest";
    case ErrorCode::kNonNumericColumn: return "NonNumericColumn";
    case ErrorCode::kAlreadyBinned: return "AlreadyBinned";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kMixedPredictionKinds: return "MixedPredictionKinds";
    case ErrorCode::kEmptyCohort: return "EmptyCohort";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kMissingCI: return "MissingCI";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kAllReplicatesDegenerate: return "AllReplicatesDegenerate";
    case ErrorCode::kMissingSection: return "MissingSection";
    case ErrorCode::kInvalidCard: return "InvalidCard";
    case ErrorCode::kUnsupportedSchema: return "UnsupportedSchema";
    case ErrorCode::kEmptySpec: return "EmptySpec";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
  }
  return "Unknown";
}

}  // namespace cardforge
