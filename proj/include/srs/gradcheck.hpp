// Copyright 2026 The SRS Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Finite-difference gradient suite over every differentiable layer, in f64.
// Each configuration draws random shapes, inputs and parameters, projects the
// layer output onto a random tensor to get a scalar, and compares analytic and
// central-difference gradients with respect to inputs and parameters.

#include <cstdint>
#include <string>
#include <vector>

namespace srs {

struct LayerGradCheck {
  std::string layer;
  int configs = 0;
  double max_rel_error = 0.0;
};

/// Layer names accepted by run_gradcheck_suite's filter.
std::vector<std::string> gradcheck_layers();

/// Runs `configs_per_layer` random configurations for every layer in
/// `layers` (all layers when empty).
std::vector<LayerGradCheck> run_gradcheck_suite(int configs_per_layer, std::uint64_t seed,
                                                const std::vector<std::string>& layers = {});

}  // namespace srs
