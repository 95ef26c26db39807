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

#include <functional>
#include <string>
#include <vector>

#include "internimage/model.hpp"

namespace internimage {

inline constexpr int kMinWarmups = 2;
inline constexpr int kMinReps = 5;

struct BenchResult {
  std::string op;
  Shape4 shape;
  int warmups = kMinWarmups;
  int reps = kMinReps;
  double min_s = 0;
  double median_s = 0;
  double mean_s = 0;
  double images_per_s = 0;  // shape.n / median
  double speedup = 0;       // naive median / this median; 0 when not applicable
};

/// Runs `fn` warmups + reps times and discards the warmups. Values below the
/// minimum counts are raised to them.
BenchResult time_op(const std::string& op, Shape4 shape, int reps, const std::function<void()>& fn,
                    int warmups = kMinWarmups);

/// Optimized and naive DCNv3 forward on random data with a predicted-like
/// field; the optimized row carries the speedup.
std::vector<BenchResult> bench_dcnv3(Shape4 shape, int groups, int reps, std::uint64_t seed = 0);

/// Full forward of a randomly initialised model on one or more images.
BenchResult bench_model(const ModelConfig& cfg, Shape4 shape, int reps, std::uint64_t seed = 0);

std::string bench_csv_header();
std::string bench_csv_row(const BenchResult& r);

}  // namespace internimage
