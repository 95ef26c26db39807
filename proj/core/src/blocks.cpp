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

#include "internimage/blocks.hpp"

#include <cmath>
#include <string>

#include "internimage/errors.hpp"

namespace internimage {

void init_fan_in(LinearWeights& w, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(w.in_dim));
  rng.fill_uniform(w.matrix, -bound, bound);
  std::fill(w.bias.begin(), w.bias.end(), 0.0);
}

void init_fan_in(Conv2dWeights& w, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(w.in_c_per_group * w.kh * w.kw));
  rng.fill_uniform(w.kernel, -bound, bound);
  std::fill(w.bias.begin(), w.bias.end(), 0.0);
}

// ------------------------------------------------------------------ block

DcnConfig BlockOptions::dcn_config() const {
  DcnConfig cfg;
  cfg.channels = channels;
  cfg.groups = groups;
  cfg.kernel = kernel;
  cfg.stride = 1;
  cfg.dilation = 1;
  cfg.pad = kernel / 2;
  cfg.shared_weights = shared_weights;
  cfg.multi_group = multi_group;
  cfg.normalization = normalization;
  return cfg;
}

BlockParams make_block(const BlockOptions& opt) {
  if (opt.ffn_ratio <= 0) throw ConfigError("block: ffn ratio must be positive");
  BlockParams p;
  p.dcn_cfg = opt.dcn_config();
  p.dcn_cfg.validate();
  const int C = opt.channels;
  const int kg = p.dcn_cfg.points() * p.dcn_cfg.effective_groups();
  p.dcn = DcnWeights::zeros(p.dcn_cfg);
  p.predictor.depthwise = Conv2dWeights(C, C, 3, 1, 1, C, true);
  p.predictor.linear = LinearWeights(C, 3 * kg, true);
  p.ln1 = LayerNormParams(C);
  p.ln2 = LayerNormParams(C);
  p.ffn.fc1 = LinearWeights(C, opt.ffn_ratio * C, true);
  p.ffn.fc2 = LinearWeights(opt.ffn_ratio * C, C, true);
  if (opt.layer_scale) {
    p.scale1.assign(C, opt.layer_scale_init);
    p.scale2.assign(C, opt.layer_scale_init);
  }
  return p;
}

void init_block(BlockParams& p, Rng& rng) {
  if (p.dcn_cfg.shared_weights) {
    init_fan_in(p.dcn.proj, rng);
  } else {
    for (auto& lw : p.dcn.per_point) init_fan_in(lw, rng);
  }
  init_fan_in(p.ffn.fc1, rng);
  init_fan_in(p.ffn.fc2, rng);
  // Predictor starts at zero: zero offsets, uniform masks.
  zero_params(p.predictor);
}

SamplingField predict_field(const Tensor4& x, const PredictorParams& p,
                            const DcnConfig& cfg) {
  if (x.c() != cfg.channels) {
    throw ShapeError("predict_field: input " + x.shape().str() + " for " +
                     std::to_string(cfg.channels) + " channels");
  }
  const int kg = cfg.points() * cfg.effective_groups();
  if (p.linear.out_dim != 3 * kg) {
    throw ShapeError("predict_field: predictor emits " + std::to_string(p.linear.out_dim) +
                     " channels, expected " + std::to_string(3 * kg));
  }
  const Tensor4 raw = linear_project(conv2d(x, p.depthwise), p.linear);
  return SamplingField{slice_channels(raw, 0, 2 * kg), slice_channels(raw, 2 * kg, kg)};
}

Tensor4 basic_block(const Tensor4& x, const BlockParams& p, BlockCache* cache) {
  BlockCache local;
  BlockCache& c = cache != nullptr ? *cache : local;
  c.x = x;
  c.dw_out = conv2d(x, p.predictor.depthwise);
  {
    const int kg = p.dcn_cfg.points() * p.dcn_cfg.effective_groups();
    if (p.predictor.linear.out_dim != 3 * kg) {
      throw ShapeError("basic_block: predictor emits " +
                       std::to_string(p.predictor.linear.out_dim) + " channels");
    }
    const Tensor4 raw = linear_project(c.dw_out, p.predictor.linear);
    c.field = SamplingField{slice_channels(raw, 0, 2 * kg), slice_channels(raw, 2 * kg, kg)};
  }
  c.dcn_out = dcnv3_forward(x, c.field, p.dcn, p.dcn_cfg);
  c.r1 = add(x, p.has_layer_scale() ? scale_channels(c.dcn_out, p.scale1) : c.dcn_out);
  c.y = layer_norm(c.r1, p.ln1);
  c.h1 = linear_project(c.y, p.ffn.fc1);
  c.act = gelu(c.h1);
  c.f = linear_project(c.act, p.ffn.fc2);
  c.r2 = add(c.y, p.has_layer_scale() ? scale_channels(c.f, p.scale2) : c.f);
  return layer_norm(c.r2, p.ln2);
}

namespace {

// Gradient of a per-channel scale: sum over batch and sites of dy * x.
std::vector<double> channel_scale_grad(const Tensor4& x, const Tensor4& dy) {
  std::vector<double> g(x.c(), 0.0);
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const auto a = x.plane(n, c);
      const auto b = dy.plane(n, c);
      for (std::size_t i = 0; i < a.size(); ++i) g[c] += a[i] * b[i];
    }
  }
  return g;
}

void accumulate(Tensor4& into, const Tensor4& g) {
  require_same_shape(into, g, "accumulate");
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += g[i];
}

Tensor4 concat_channels(const Tensor4& a, const Tensor4& b) {
  Tensor4 out(Shape4{a.n(), a.c() + b.c(), a.h(), a.w()});
  for (int n = 0; n < a.n(); ++n) {
    for (int c = 0; c < a.c(); ++c) {
      const auto src = a.plane(n, c);
      std::copy(src.begin(), src.end(), out.plane(n, c).begin());
    }
    for (int c = 0; c < b.c(); ++c) {
      const auto src = b.plane(n, c);
      std::copy(src.begin(), src.end(), out.plane(n, a.c() + c).begin());
    }
  }
  return out;
}

}  // namespace

BlockGrads basic_block_backward(const BlockCache& c, const BlockParams& p,
                                const Tensor4& dz) {
  BlockGrads g{Tensor4(), p};
  zero_params(g.dp);

  auto ln2 = layer_norm_backward(c.r2, p.ln2, dz);
  g.dp.ln2 = std::move(ln2.dp);
  const Tensor4& dr2 = ln2.dx;

  Tensor4 dy = dr2;
  Tensor4 df = dr2;
  if (p.has_layer_scale()) {
    g.dp.scale2 = channel_scale_grad(c.f, dr2);
    df = scale_channels(dr2, p.scale2);
  }
  auto fc2 = linear_project_backward(c.act, p.ffn.fc2, df);
  g.dp.ffn.fc2 = std::move(fc2.dw);
  const Tensor4 dh1 = gelu_backward(c.h1, fc2.dx);
  auto fc1 = linear_project_backward(c.y, p.ffn.fc1, dh1);
  g.dp.ffn.fc1 = std::move(fc1.dw);
  accumulate(dy, fc1.dx);

  auto ln1 = layer_norm_backward(c.r1, p.ln1, dy);
  g.dp.ln1 = std::move(ln1.dp);
  const Tensor4& dr1 = ln1.dx;

  g.dx = dr1;
  Tensor4 dd = dr1;
  if (p.has_layer_scale()) {
    g.dp.scale1 = channel_scale_grad(c.dcn_out, dr1);
    dd = scale_channels(dr1, p.scale1);
  }
  auto dcn = dcnv3_backward(dd, c.x, c.field, p.dcn, p.dcn_cfg);
  g.dp.dcn = std::move(dcn.dw);
  accumulate(g.dx, dcn.dx);

  const Tensor4 draw = concat_channels(dcn.dfield.offsets, dcn.dfield.mask_logits);
  auto lin = linear_project_backward(c.dw_out, p.predictor.linear, draw);
  g.dp.predictor.linear = std::move(lin.dw);
  auto dw = conv2d_backward(c.x, p.predictor.depthwise, lin.dx);
  g.dp.predictor.depthwise = std::move(dw.dw);
  accumulate(g.dx, dw.dx);
  return g;
}

// ------------------------------------------------------------------- stem

StemParams make_stem(int in_channels, int c1) {
  if (c1 <= 0 || c1 % 2 != 0) {
    throw ConfigError("stem: C1 must be a positive even number, got " + std::to_string(c1));
  }
  StemParams p;
  p.conv1 = Conv2dWeights(in_channels, c1 / 2, 3, 2, 1, 1, true);
  p.ln1 = LayerNormParams(c1 / 2);
  p.conv2 = Conv2dWeights(c1 / 2, c1, 3, 2, 1, 1, true);
  p.ln2 = LayerNormParams(c1);
  return p;
}

void init_stem(StemParams& p, Rng& rng) {
  init_fan_in(p.conv1, rng);
  init_fan_in(p.conv2, rng);
}

Tensor4 stem(const Tensor4& x, const StemParams& p, StemCache* cache) {
  StemCache local;
  StemCache& c = cache != nullptr ? *cache : local;
  c.x = x;
  c.c1 = conv2d(x, p.conv1);
  c.n1 = layer_norm(c.c1, p.ln1);
  c.a1 = gelu(c.n1);
  c.c2 = conv2d(c.a1, p.conv2);
  return layer_norm(c.c2, p.ln2);
}

StemGrads stem_backward(const StemCache& c, const StemParams& p, const Tensor4& dy) {
  StemGrads g{Tensor4(), p};
  auto ln2 = layer_norm_backward(c.c2, p.ln2, dy);
  auto conv2 = conv2d_backward(c.a1, p.conv2, ln2.dx);
  const Tensor4 dn1 = gelu_backward(c.n1, conv2.dx);
  auto ln1 = layer_norm_backward(c.c1, p.ln1, dn1);
  auto conv1 = conv2d_backward(c.x, p.conv1, ln1.dx);
  g.dp.conv1 = std::move(conv1.dw);
  g.dp.ln1 = std::move(ln1.dp);
  g.dp.conv2 = std::move(conv2.dw);
  g.dp.ln2 = std::move(ln2.dp);
  g.dx = std::move(conv1.dx);
  return g;
}

// ------------------------------------------------------------- downsample

DownsampleParams make_downsample(int in_c, int out_c) {
  return DownsampleParams{Conv2dWeights(in_c, out_c, 3, 2, 1, 1, true), LayerNormParams(out_c)};
}

void init_downsample(DownsampleParams& p, Rng& rng) { init_fan_in(p.conv, rng); }

Tensor4 downsample(const Tensor4& x, const DownsampleParams& p, DownsampleCache* cache) {
  DownsampleCache local;
  DownsampleCache& c = cache != nullptr ? *cache : local;
  c.x = x;
  c.conv_out = conv2d(x, p.conv);
  return layer_norm(c.conv_out, p.ln);
}

DownsampleGrads downsample_backward(const DownsampleCache& c, const DownsampleParams& p,
                                    const Tensor4& dy) {
  auto ln = layer_norm_backward(c.conv_out, p.ln, dy);
  auto conv = conv2d_backward(c.x, p.conv, ln.dx);
  return DownsampleGrads{std::move(conv.dx), DownsampleParams{std::move(conv.dw), std::move(ln.dp)}};
}

// ------------------------------------------------------------------- head

HeadParams make_head(int in_c, int num_classes) {
  if (num_classes <= 0) throw ConfigError("head: num_classes must be positive");
  return HeadParams{LinearWeights(in_c, num_classes, true)};
}

void init_head(HeadParams& p, Rng& rng) { init_fan_in(p.fc, rng); }

Tensor4 head(const Tensor4& x, const HeadParams& p) {
  return linear_project(global_avg_pool(x), p.fc);
}

HeadGrads head_backward(const Tensor4& x, const HeadParams& p, const Tensor4& dlogits) {
  const Tensor4 pooled = global_avg_pool(x);
  auto lin = linear_project_backward(pooled, p.fc, dlogits);
  return HeadGrads{global_avg_pool_backward(x.shape(), lin.dx), HeadParams{std::move(lin.dw)}};
}

}  // namespace internimage
