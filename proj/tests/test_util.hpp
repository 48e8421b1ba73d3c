// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <gtest/gtest.h>

#include <functional>

#include "srs/error.hpp"

namespace srs::testing {

/// The kind of the srs::Error thrown by f; fails the test when none is thrown.
inline ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no srs::Error thrown";
  return ErrorKind::kUnsupportedFormat;
}

}  // namespace srs::testing
