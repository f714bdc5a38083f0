// Copyright 2026 The addrmatch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace addrmatch {

enum class ErrorCode {
  kInvalidArgument,
  kMalformedZip,
  kInvalidCp4Prefix,
  kInvalidRecord,
  kDuplicateId,
  kUnknownDoc,
  kZeroVector,
  kDegenerateData,
  kCorruptStore,
  kDimensionMismatch,
  kEmptyIndex,
  kNoCandidates,
  kMissingGold,
  kSidecarUnreachable,
  kSidecarBadResponse,
  kIo,
  kUnknownItem,
  kAlreadyResolved,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (CLI, service) can map it onto an exit status or HTTP status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace addrmatch
