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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "internimage/blocks.hpp"

namespace internimage {

inline constexpr int kNumStages = 4;

/// The four-number stacking description (C1, C', L1, L3). Stage widths
/// double per stage, groups are C_i / C', and depths follow AABA.
struct StackConfig {
  int c1 = 64;
  int cprime = 16;
  std::array<int, kNumStages> depths{4, 4, 18, 4};

  static StackConfig from(int c1, int cprime, int l1, int l3) {
    return StackConfig{c1, cprime, {l1, l1, l3, l1}};
  }
  int l1() const { return depths[0]; }
  int l3() const { return depths[2]; }
  int channels(int stage) const { return c1 << stage; }
  int groups(int stage) const { return cprime > 0 ? channels(stage) / cprime : 0; }
  /// Scaling depth D = 3*L1 + L3.
  int depth() const { return 3 * depths[0] + depths[2]; }

  friend bool operator==(const StackConfig&, const StackConfig&) = default;
};

struct StackViolation {
  std::string rule;
  std::string detail;
};

/// Every stacking rule the config breaks; empty means valid.
std::vector<StackViolation> validate_stack(const StackConfig& cfg);

struct VariantSpec {
  std::string name;
  StackConfig stack;
  double expected_params = 0;  // published parameter count
  bool layer_scale = false;
};

/// T, S, B, L, XL, H in that order.
const std::vector<VariantSpec>& variant_registry();
const VariantSpec* find_variant(std::string_view name);

struct ModelConfig {
  std::string name = "custom";
  StackConfig stack;
  int ffn_ratio = 4;
  bool layer_scale = false;
  int num_classes = 1000;
  std::uint64_t seed = 0;
  // Extensions beyond the base variants.
  int kernel = 3;
  int in_channels = 3;
  bool shared_weights = true;
  bool multi_group = true;
  Normalization normalization = Normalization::kSoftmax;

  BlockOptions block_options(int stage) const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

ModelConfig config_for_variant(const VariantSpec& v);

struct Model {
  ModelConfig config;
  StemParams stem;
  std::array<std::vector<BlockParams>, kNumStages> stages;
  std::array<DownsampleParams, kNumStages - 1> downsamples;
  HeadParams head;
};

template <ParamsOf<Model> W, class Fn>
void visit_params(W& m, const std::string& prefix, Fn&& fn) {
  const std::string p = prefix.empty() ? "" : prefix + ".";
  visit_params(m.stem, p + "stem", fn);
  for (int s = 0; s < kNumStages; ++s) {
    for (std::size_t b = 0; b < m.stages[s].size(); ++b) {
      visit_params(m.stages[s][b],
                   p + "stages." + std::to_string(s) + ".blocks." + std::to_string(b), fn);
    }
    if (s + 1 < kNumStages) {
      visit_params(m.downsamples[s], p + "stages." + std::to_string(s) + ".downsample", fn);
    }
  }
  visit_params(m.head, p + "head", fn);
}

/// Structure with zero weights (LN gamma 1). Throws ConfigError on an
/// invalid stack.
Model assemble_model(const ModelConfig& cfg);

/// assemble_model followed by seeded initialization.
Model build_model(const ModelConfig& cfg, std::uint64_t seed);
inline Model build_model(const ModelConfig& cfg) { return build_model(cfg, cfg.seed); }

struct ParamReport {
  std::int64_t stem = 0;
  std::array<std::int64_t, kNumStages> stage_blocks{};
  std::int64_t downsamplers = 0;
  std::int64_t head = 0;
  std::int64_t closed_form_total = 0;
  std::int64_t enumerated_total = -1;  // -1 when enumeration was skipped

  bool exact_match() const { return closed_form_total == enumerated_total; }
};

/// Closed-form count per component. With enumerate=true every component is
/// also assembled (one at a time, to bound memory) and its weights counted.
ParamReport count_params(const ModelConfig& cfg, bool enumerate = true);
ParamReport count_params(const StackConfig& stack, int ffn_ratio, int num_classes,
                         bool enumerate = true);

/// Feature taps along the forward pass.
enum class Tap : int { kStem = 0, kStage1, kStage2, kStage3, kStage4, kLogits };

struct ModelCache {
  StemCache stem;
  std::array<std::vector<BlockCache>, kNumStages> blocks;
  std::array<DownsampleCache, kNumStages - 1> downsamples;
  Tensor4 head_input;
  Tap stop = Tap::kLogits;
};

/// Input must have in_channels channels and h, w >= 32 and divisible by 32.
void check_model_input(const Model& m, const Tensor4& x);

/// Runs the forward pass up to and including `stop`.
Tensor4 model_forward_to(const Model& m, const Tensor4& x, Tap stop,
                         ModelCache* cache = nullptr);

struct ForwardOutput {
  Tensor4 logits;                  // (n, num_classes, 1, 1)
  std::vector<Tensor4> features;   // stage 1..4 outputs when requested
};

ForwardOutput model_forward(const Model& m, const Tensor4& x, bool keep_features = false);

struct ModelGrads {
  Tensor4 dx;
  Model dmodel;  // parameter gradients, same layout as the model
};

/// Backpropagates `upstream` (gradient at cache.stop) to the input and
/// every parameter upstream of that tap.
ModelGrads model_backward(const Model& m, const ModelCache& cache, const Tensor4& upstream);

}  // namespace internimage
