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

#include "internimage/model.hpp"

#include <algorithm>
#include <string>

#include "internimage/errors.hpp"

namespace internimage {

std::vector<StackViolation> validate_stack(const StackConfig& cfg) {
  std::vector<StackViolation> v;
  if (cfg.c1 <= 0 || cfg.cprime <= 0) {
    v.push_back({"positive widths", "C1 and C' must be positive"});
    return v;
  }
  if (cfg.c1 % 2 != 0) {
    v.push_back({"C1 even", "stem halves C1, got C1 = " + std::to_string(cfg.c1)});
  }
  if (cfg.c1 % cfg.cprime != 0) {
    v.push_back({"C1 divisible by C'",
                 "G1 = " + std::to_string(cfg.c1) + " / " + std::to_string(cfg.cprime) +
                     " = " + std::to_string(static_cast<double>(cfg.c1) / cfg.cprime) +
                     " is not integral"});
  }
  for (int d : cfg.depths) {
    if (d <= 0) {
      v.push_back({"positive depths", "every stage needs at least one block"});
      break;
    }
  }
  if (cfg.depths[1] != cfg.depths[0] || cfg.depths[3] != cfg.depths[0]) {
    v.push_back({"L1 = L2 = L4", "AABA pattern needs equal depths in stages 1, 2 and 4"});
  }
  if (cfg.depths[0] > cfg.depths[2]) {
    v.push_back({"L1 <= L3", "L1 = " + std::to_string(cfg.depths[0]) + " exceeds L3 = " +
                                 std::to_string(cfg.depths[2])});
  }
  return v;
}

const std::vector<VariantSpec>& variant_registry() {
  static const std::vector<VariantSpec> registry = {
      {"T", StackConfig::from(64, 16, 4, 18), 30e6, false},
      {"S", StackConfig::from(80, 16, 4, 21), 50e6, true},
      {"B", StackConfig::from(112, 16, 4, 21), 97e6, true},
      {"L", StackConfig::from(160, 16, 5, 22), 223e6, true},
      {"XL", StackConfig::from(192, 16, 5, 24), 335e6, true},
      {"H", StackConfig::from(320, 32, 6, 32), 1.08e9, true},
  };
  return registry;
}

const VariantSpec* find_variant(std::string_view name) {
  for (const auto& v : variant_registry()) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

BlockOptions ModelConfig::block_options(int stage) const {
  BlockOptions o;
  o.channels = stack.channels(stage);
  o.groups = stack.groups(stage);
  o.kernel = kernel;
  o.ffn_ratio = ffn_ratio;
  o.layer_scale = layer_scale;
  o.shared_weights = shared_weights;
  o.multi_group = multi_group;
  o.normalization = normalization;
  return o;
}

ModelConfig config_for_variant(const VariantSpec& v) {
  ModelConfig cfg;
  cfg.name = v.name;
  cfg.stack = v.stack;
  cfg.layer_scale = v.layer_scale;
  return cfg;
}

namespace {

void require_valid(const ModelConfig& cfg) {
  const auto violations = validate_stack(cfg.stack);
  if (!violations.empty()) {
    std::string msg = "invalid stack:";
    for (const auto& v : violations) msg += " [" + v.rule + " violated: " + v.detail + "]";
    throw ConfigError(msg);
  }
  if (cfg.ffn_ratio <= 0 || cfg.num_classes <= 0 || cfg.in_channels <= 0) {
    throw ConfigError("ffn_ratio, num_classes and in_channels must be positive");
  }
  if (cfg.kernel <= 0 || cfg.kernel % 2 == 0) {
    throw ConfigError("kernel side must be odd");
  }
}

}  // namespace

Model assemble_model(const ModelConfig& cfg) {
  require_valid(cfg);
  Model m;
  m.config = cfg;
  m.stem = make_stem(cfg.in_channels, cfg.stack.c1);
  for (int s = 0; s < kNumStages; ++s) {
    const BlockOptions opt = cfg.block_options(s);
    for (int b = 0; b < cfg.stack.depths[s]; ++b) m.stages[s].push_back(make_block(opt));
    if (s + 1 < kNumStages) {
      m.downsamples[s] = make_downsample(cfg.stack.channels(s), cfg.stack.channels(s + 1));
    }
  }
  m.head = make_head(cfg.stack.channels(kNumStages - 1), cfg.num_classes);
  return m;
}

Model build_model(const ModelConfig& cfg, std::uint64_t seed) {
  Model m = assemble_model(cfg);
  m.config.seed = seed;
  Rng rng(seed);
  init_stem(m.stem, rng);
  for (int s = 0; s < kNumStages; ++s) {
    for (auto& b : m.stages[s]) init_block(b, rng);
    if (s + 1 < kNumStages) init_downsample(m.downsamples[s], rng);
  }
  init_head(m.head, rng);
  return m;
}

// ------------------------------------------------------- parameter count

namespace {

std::int64_t closed_form_block(const BlockOptions& o) {
  const std::int64_t C = o.channels;
  const std::int64_t K = static_cast<std::int64_t>(o.kernel) * o.kernel;
  const std::int64_t G = o.multi_group ? o.groups : 1;
  const std::int64_t r = o.ffn_ratio;
  const std::int64_t dcn = o.shared_weights ? C * C + C : K * C * C;
  const std::int64_t predictor = 9 * C + C + C * 3 * K * G + 3 * K * G;
  const std::int64_t norms = 4 * C;
  const std::int64_t ffn = 2 * r * C * C + r * C + C;
  const std::int64_t scale = o.layer_scale ? 2 * C : 0;
  return dcn + predictor + norms + ffn + scale;
}

}  // namespace

ParamReport count_params(const ModelConfig& cfg, bool enumerate) {
  require_valid(cfg);
  ParamReport r;
  const std::int64_t in = cfg.in_channels;
  const std::int64_t c1 = cfg.stack.c1;
  const std::int64_t half = c1 / 2;
  r.stem = (9 * in * half + half) + 2 * half + (9 * half * c1 + c1) + 2 * c1;
  for (int s = 0; s < kNumStages; ++s) {
    r.stage_blocks[s] = cfg.stack.depths[s] * closed_form_block(cfg.block_options(s));
  }
  for (int s = 0; s + 1 < kNumStages; ++s) {
    const std::int64_t a = cfg.stack.channels(s);
    const std::int64_t b = cfg.stack.channels(s + 1);
    r.downsamplers += 9 * a * b + b + 2 * b;
  }
  const std::int64_t last = cfg.stack.channels(kNumStages - 1);
  r.head = last * cfg.num_classes + cfg.num_classes;
  r.closed_form_total = r.stem + r.downsamplers + r.head;
  for (auto b : r.stage_blocks) r.closed_form_total += b;

  if (enumerate) {
    // Same constructors as assemble_model, one component alive at a time.
    std::int64_t total = enumerate_param_count(make_stem(cfg.in_channels, cfg.stack.c1));
    for (int s = 0; s < kNumStages; ++s) {
      const BlockOptions opt = cfg.block_options(s);
      for (int b = 0; b < cfg.stack.depths[s]; ++b) total += enumerate_param_count(make_block(opt));
      if (s + 1 < kNumStages) {
        total += enumerate_param_count(
            make_downsample(cfg.stack.channels(s), cfg.stack.channels(s + 1)));
      }
    }
    total += enumerate_param_count(make_head(static_cast<int>(last), cfg.num_classes));
    r.enumerated_total = total;
  }
  return r;
}

ParamReport count_params(const StackConfig& stack, int ffn_ratio, int num_classes,
                         bool enumerate) {
  ModelConfig cfg;
  cfg.stack = stack;
  cfg.ffn_ratio = ffn_ratio;
  cfg.num_classes = num_classes;
  return count_params(cfg, enumerate);
}

// ---------------------------------------------------------------- forward

void check_model_input(const Model& m, const Tensor4& x) {
  if (x.c() != m.config.in_channels) {
    throw ShapeError("model: input " + x.shape().str() + " needs " +
                     std::to_string(m.config.in_channels) + " channels");
  }
  if (x.h() < 32 || x.w() < 32 || x.h() % 32 != 0 || x.w() % 32 != 0) {
    throw ShapeError("model: input " + x.shape().str() +
                     " must have height and width >= 32 and divisible by 32");
  }
}

Tensor4 model_forward_to(const Model& m, const Tensor4& x, Tap stop, ModelCache* cache) {
  check_model_input(m, x);
  ModelCache local;
  ModelCache& c = cache != nullptr ? *cache : local;
  c.stop = stop;
  for (auto& b : c.blocks) b.clear();

  Tensor4 h = stem(x, m.stem, &c.stem);
  if (stop == Tap::kStem) return h;
  for (int s = 0; s < kNumStages; ++s) {
    if (s > 0) h = downsample(h, m.downsamples[s - 1], &c.downsamples[s - 1]);
    c.blocks[s].resize(m.stages[s].size());
    for (std::size_t b = 0; b < m.stages[s].size(); ++b) {
      h = basic_block(h, m.stages[s][b], &c.blocks[s][b]);
    }
    if (static_cast<int>(stop) == s + 1) return h;
  }
  c.head_input = h;
  return head(h, m.head);
}

ForwardOutput model_forward(const Model& m, const Tensor4& x, bool keep_features) {
  check_model_input(m, x);
  ForwardOutput out;
  Tensor4 h = stem(x, m.stem);
  for (int s = 0; s < kNumStages; ++s) {
    if (s > 0) h = downsample(h, m.downsamples[s - 1]);
    for (const auto& b : m.stages[s]) h = basic_block(h, b);
    if (keep_features) out.features.push_back(h);
  }
  out.logits = head(h, m.head);
  return out;
}

// --------------------------------------------------------------- backward

ModelGrads model_backward(const Model& m, const ModelCache& c, const Tensor4& upstream) {
  ModelGrads g{Tensor4(), m};
  zero_params(g.dmodel);

  Tensor4 grad = upstream;
  const int stop = static_cast<int>(c.stop);
  if (c.stop == Tap::kLogits) {
    auto hg = head_backward(c.head_input, m.head, grad);
    g.dmodel.head = std::move(hg.dp);
    grad = std::move(hg.dx);
  }
  const int last_stage = std::min(stop, kNumStages) - 1;  // -1 when stop is the stem
  for (int s = last_stage; s >= 0; --s) {
    for (int b = static_cast<int>(m.stages[s].size()) - 1; b >= 0; --b) {
      auto bg = basic_block_backward(c.blocks[s][b], m.stages[s][b], grad);
      g.dmodel.stages[s][b] = std::move(bg.dp);
      grad = std::move(bg.dx);
    }
    if (s > 0) {
      auto dg = downsample_backward(c.downsamples[s - 1], m.downsamples[s - 1], grad);
      g.dmodel.downsamples[s - 1] = std::move(dg.dp);
      grad = std::move(dg.dx);
    }
  }
  auto sg = stem_backward(c.stem, m.stem, grad);
  g.dmodel.stem = std::move(sg.dp);
  g.dx = std::move(sg.dx);
  return g;
}

}  // namespace internimage
