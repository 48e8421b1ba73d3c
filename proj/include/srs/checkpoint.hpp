// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Binary checkpoint container.
//
//   "SRSCKPT1"
//   u64 config length, UTF-8 JSON config document
//   repeated until the checksum: u64 name length, name, u64 rank,
//     rank x u64 dims, numel x f32 payload
//   u64 FNV-1a checksum of every preceding byte
//
// Integers and floats are little-endian.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "srs/tensor.hpp"

namespace srs {

inline constexpr char kCheckpointMagic[] = "SRSCKPT1";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::string config;
  std::vector<std::pair<std::string, Tensor>> tensors;

  /// nullptr when absent.
  const Tensor* find(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size);

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
/// Throws ChecksumMismatch (truncated or corrupted), VersionMismatch (a
/// different container version), or IoError (not a checkpoint).
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace srs
