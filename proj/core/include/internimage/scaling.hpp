// Copyright 2026 The internimage Authors
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

#include <cstdint>
#include <string>
#include <vector>

#include "internimage/model.hpp"

namespace internimage {

/// Width exponent in the depth/width constraint alpha * beta^1.99 ~= 2.
inline constexpr double kWidthExponent = 1.99;
inline constexpr double kConstraintTolerance = 0.05;

struct ScaleFactors {
  double alpha = 1.0;
  double beta = 1.0;
  double phi = 0.0;

  double residual() const;
};

/// alpha * beta^1.99 - 2.
double check_constraint(double alpha, double beta);

struct ContinuousScale {
  double depth = 0;  // D = 3*L1 + L3
  double c1 = 0;
};

/// D' = alpha^phi * D, C1' = beta^phi * C1, without snapping.
ContinuousScale scale_continuous(ContinuousScale origin, const ScaleFactors& f);

struct ScaledConfig {
  ContinuousScale continuous;
  StackConfig snapped;
  double c1_delta = 0;     // snapped - continuous
  double depth_delta = 0;  // snapped - continuous
};

/// Scales an origin stack and snaps the result back onto a valid stack.
///
/// Width snaps to the nearest multiple of C' (ties round up, at least C').
/// Depth picks the (L1, L3) pair minimizing |3*L1 + L3 - D'|; among equal
/// depth errors the L1 closest to alpha^phi * L1_origin wins, then the
/// smaller L1. In strict mode a constraint residual above 0.05 throws.
ScaledConfig scale_config(const StackConfig& origin, const ScaleFactors& f, bool strict = true);

struct SearchSpaceOptions {
  std::vector<int> c1_values{48, 64, 80};
  std::vector<int> l1_values{1, 2, 3, 4, 5};
  std::vector<int> cprime_values{16, 32};
  double budget = 30e6;
  double tolerance = 0.05;
  int ffn_ratio = 4;
  int num_classes = 1000;
};

struct SearchEntry {
  StackConfig stack;
  std::vector<StackViolation> violations;  // stacking rules the combination breaks
  std::int64_t params = -1;                // -1 when the stack is invalid
  bool within_budget = false;              // |params - budget| <= tolerance * budget

  bool valid() const { return violations.empty(); }
};

/// One entry per (C1, L1, C') combination, in that loop order. For a valid
/// combination L3 is the largest value >= L1 whose closed-form count stays
/// <= budget * (1 + tolerance), or L1 when even that exceeds the cap.
/// Invalid combinations keep L3 = L1 and carry their violations instead of
/// a count.
std::vector<SearchEntry> enumerate_search_space(const SearchSpaceOptions& opt = {});

/// Columns c1,cprime,l1,l3,params; params is -1 for invalid combinations.
std::string search_space_csv(const std::vector<SearchEntry>& entries);

}  // namespace internimage
