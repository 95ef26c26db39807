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

inline constexpr std::int64_t kToyParamLimit = 2'000'000;
inline constexpr int kToyClasses = 10;
inline constexpr int kToyImageSize = 32;

struct ToyDataset {
  Tensor4 images;           // (n, 3, 32, 32)
  std::vector<int> labels;  // n entries in [0, 10)
};

/// Class-coloured Gaussian blobs at class-dependent positions over uniform
/// noise. Deterministic in the seed.
ToyDataset make_toy_dataset(int per_class, std::uint64_t seed);

/// A small 10-class config suitable for the 32x32 toy task.
ModelConfig toy_config();

struct CrossEntropy {
  double loss = 0;    // mean over the batch
  Tensor4 dlogits;    // gradient of the mean loss
};

/// Softmax cross-entropy on logits of shape (n, classes, 1, 1).
CrossEntropy cross_entropy(const Tensor4& logits, const std::vector<int>& labels);

struct TrainOptions {
  int steps = 200;
  double lr = 0.05;
  std::uint64_t seed = 0;
  int per_class = 4;
};

struct TrainResult {
  std::vector<double> losses;  // loss before each update, then the final loss
  std::int64_t params = 0;
};

/// Full-batch SGD with cross-entropy. Throws ConfigError when the model is
/// above kToyParamLimit or num_classes differs from kToyClasses.
TrainResult train_toy(const ModelConfig& cfg, const TrainOptions& opt);

/// "step,loss" rows with a header.
std::string loss_curve_csv(const std::vector<double>& losses);

}  // namespace internimage
