// Copyright 2026 The lspo Authors
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

namespace lspo {

enum class Errc {
  kNotChanceNode,
  kNotDecisionNode,
  kNotTerminal,
  kInvalidAssignment,
  kIllegalAction,
  kUnknownViewer,
  kEmptySubset,
  kInvalidStrategy,
  kParseError,
  kDimensionMismatch,
  kEmptyCorpus,
  kTooFewPoints,
  kInsufficientData,
  kNoActions,
  kGameTooLarge,
  kInconsistentPrivateInfo,
  kZeroPosterior,
  kEmptyDataset,
  kIncompatibleCheckpoints,
  kMissingPrivateInfo,
  kSchemaMismatch,
  kBadSeat,
  kUnknownSession,
  kNotYourTurn,
  kDuplicateSubmission,
  kIo,
};

constexpr std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::kNotChanceNode: return "NotChanceNode";
    case Errc::kNotDecisionNode: return "NotDecisionNode";
    case Errc::kNotTerminal: return "NotTerminal";
    case Errc::kInvalidAssignment: return "InvalidAssignment";
    case Errc::kIllegalAction: return "IllegalAction";
    case Errc::kUnknownViewer: return "UnknownViewer";
    case Errc::kEmptySubset: return "EmptySubset";
    case Errc::kInvalidStrategy: return "InvalidStrategy";
    case Errc::kParseError: return "ParseError";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kEmptyCorpus: return "EmptyCorpus";
    case Errc::kTooFewPoints: return "TooFewPoints";
    case Errc::kInsufficientData: return "InsufficientData";
    case Errc::kNoActions: return "NoActions";
    case Errc::kGameTooLarge: return "GameTooLarge";
    case Errc::kInconsistentPrivateInfo: return "InconsistentPrivateInfo";
    case Errc::kZeroPosterior: return "ZeroPosterior";
    case Errc::kEmptyDataset: return "EmptyDataset";
    case Errc::kIncompatibleCheckpoints: return "IncompatibleCheckpoints";
    case Errc::kMissingPrivateInfo: return "MissingPrivateInfo";
    case Errc::kSchemaMismatch: return "SchemaMismatch";
    case Errc::kBadSeat: return "BadSeat";
    case Errc::kUnknownSession: return "UnknownSession";
    case Errc::kNotYourTurn: return "NotYourTurn";
    case Errc::kDuplicateSubmission: return "DuplicateSubmission";
    case Errc::kIo: return "Io";
  }
  return "Unknown";
}

// Every failure the library reports carries one of the codes above; the
// message adds the specifics.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace lspo
