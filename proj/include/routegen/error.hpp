// Copyright 2026 The routegen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
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
#include <utility>
#include <vector>

namespace routegen {

enum class Errc {
  kInvalidArgument,
  kDegenerateInput,
  kMissingCapacity,
  kUnsupportedProblemType,
  kUnsupportedEdgeWeightType,
  kMalformedSection,
  kDimensionMismatch,
  kEmptyCorpus,
  kResourceExhausted,
  kInvalidProgram,
  kInfeasibleDemand,
  kNonPositiveOptimum,
  kUnevaluatedMember,
  kDesignerUnavailable,
  kAuthMissing,
  kNoProgramFound,
  kUnknownCategory,
  kEvaluatorTimeout,
  kEvaluatorProtocol,
  kEvaluatorFailed,
  kMissingCategoryProgram,
  kScheduleGap,
  kIo,
};

std::string_view errc_name(Errc code);

// Every failure surfaced by the library is an Error carrying a code. Callers
// branch on code(); what() is for humans.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}
  Error(Errc code, const std::string& message, std::vector<std::string> details)
      : Error(code, message) {
    details_ = std::move(details);
  }

  Errc code() const noexcept { return code_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  Errc code_;
  std::vector<std::string> details_;
};

}  // namespace routegen
