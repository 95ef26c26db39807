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

#include "internimage/dcnv3.hpp"
#include "internimage/random.hpp"

namespace internimage {

/// Number of representable doubles between a and b (0 when equal; +0 and
/// -0 compare equal). Non-finite inputs give UINT64_MAX.
std::uint64_t ulp_distance(double a, double b);
std::uint64_t max_ulp_distance(const Tensor4& a, const Tensor4& b);

struct DcnInstance {
  DcnConfig cfg;
  Tensor4 x;
  SamplingField field;
  DcnWeights weights;
};

/// Random instance bounded by (2, 8 channels, 2 groups, 7x7) with offsets
/// in U(-2, 2), so some samples fall outside the map.
DcnInstance random_dcn_instance(Rng& rng, const DcnConfig& toggles);

enum class OracleMode { kDcnv3, kDcnv2, kAllRows };

struct OracleReport {
  int trials = 0;
  std::uint64_t max_ulps = 0;
  double max_abs_diff = 0;
  int worst_trial = -1;
  std::uint64_t tolerance_ulps = 4;

  bool passed() const { return max_ulps <= tolerance_ulps; }
};

/// Compares the optimized kernel with the literal loop on `trials` seeded
/// random instances.
OracleReport run_oracle(std::uint64_t seed, int trials, OracleMode mode = OracleMode::kDcnv3);

}  // namespace internimage
