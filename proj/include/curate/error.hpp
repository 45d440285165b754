// Copyright 2026 The curate Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace curate {

enum class ErrorCode {
  kParse,
  kDuplicateId,
  kSchema,
  kIo,
  kDegenerate,
  kRange,
  kValidation,
  kShape,
  kCoverage,
  kReference,
  kOracleGap,
  kFirewall,
  kComparability,
  kConfig,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kDuplicateId: return "duplicate-id";
    case ErrorCode::kSchema: return "schema";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kDegenerate: return "degenerate-dataset";
    case ErrorCode::kRange: return "range";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kCoverage: return "coverage";
    case ErrorCode::kReference: return "reference";
    case ErrorCode::kOracleGap: return "oracle-gap";
    case ErrorCode::kFirewall: return "firewall";
    case ErrorCode::kComparability: return "comparability";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

// All library failures surface as curate::Error; code() distinguishes them.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + " error: " + what),
        code_(code),
        message_(what) {}

  ErrorCode code() const noexcept { return code_; }
  // The message without the code prefix, for callers that add context.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace curate
