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
#include <random>
#include <vector>

#include "internimage/tensor.hpp"

namespace internimage {

/// Seeded generator used for weight init, synthetic data and test inputs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) {
    // Built from raw 53-bit draws so sequences do not depend on the
    // standard library's distribution implementation.
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  double normal();
  int uniform_int(int lo, int hi_inclusive) {
    return lo + static_cast<int>(engine_() % static_cast<std::uint64_t>(hi_inclusive - lo + 1));
  }

  void fill_uniform(std::vector<double>& v, double lo, double hi) {
    for (auto& x : v) x = uniform(lo, hi);
  }
  Tensor4 uniform_tensor(Shape4 s, double lo, double hi) {
    Tensor4 t(s);
    fill_uniform(t.vec(), lo, hi);
    return t;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace internimage
