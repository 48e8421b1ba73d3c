// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace srs {

enum class ErrorKind {
  kShapeMismatch,
  kInvalidAxis,
  kInvalidArgument,
  kNonScalarLoss,
  kGroupDivisibility,
  kOddSpatialDim,
  kBatchKernelMismatch,
  kSpatialDivisibility,
  kUnknownVariant,
  kMissingPhaseOneWeights,
  kEpochOutOfRange,
  kEmptyDataset,
  kNonBinaryTarget,
  kDivisibilityError,
  kCheckpointMismatch,
  kIoError,
  kVersionMismatch,
  kChecksumMismatch,
  kMissingMask,
  kUnsupportedFormat,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers and tests
// can dispatch on the category instead of parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace srs
