// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#include "srs/error.hpp"

namespace srs {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShapeMismatch: return "ShapeMismatch";
    case ErrorKind::kInvalidAxis: return "InvalidAxis";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kNonScalarLoss: return "NonScalarLoss";
    case ErrorKind::kGroupDivisibility: return "GroupDivisibility";
    case ErrorKind::kOddSpatialDim: return "OddSpatialDim";
    case ErrorKind::kBatchKernelMismatch: return "BatchKernelMismatch";
    case ErrorKind::kSpatialDivisibility: return "SpatialDivisibility";
    case ErrorKind::kUnknownVariant: return "UnknownVariant";
    case ErrorKind::kMissingPhaseOneWeights: return "MissingPhaseOneWeights";
    case ErrorKind::kEpochOutOfRange: return "EpochOutOfRange";
    case ErrorKind::kEmptyDataset: return "EmptyDataset";
    case ErrorKind::kNonBinaryTarget: return "NonBinaryTarget";
    case ErrorKind::kDivisibilityError: return "DivisibilityError";
    case ErrorKind::kCheckpointMismatch: return "CheckpointMismatch";
    case ErrorKind::kIoError: return "IoError";
    case ErrorKind::kVersionMismatch: return "VersionMismatch";
    case ErrorKind::kChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::kMissingMask: return "MissingMask";
    case ErrorKind::kUnsupportedFormat: return "UnsupportedFormat";
  }
  return "Unknown";
}

}  // namespace srs
