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

#include <vector>

#include "internimage/dcnv3.hpp"
#include "internimage/ops.hpp"
#include "internimage/params.hpp"
#include "internimage/random.hpp"
#include "internimage/tensor.hpp"

namespace internimage {

/// Separable offset/mask predictor: depthwise 3x3 then a per-site linear
/// map to 3*K*G channels (2*K*G offsets followed by K*G mask logits).
struct PredictorParams {
  Conv2dWeights depthwise;
  LinearWeights linear;
};

struct FfnParams {
  LinearWeights fc1;  // C -> r*C
  LinearWeights fc2;  // r*C -> C
};

struct BlockOptions {
  int channels = 0;
  int groups = 1;
  int kernel = 3;
  int ffn_ratio = 4;
  bool layer_scale = false;
  double layer_scale_init = 1e-5;
  bool shared_weights = true;
  bool multi_group = true;
  Normalization normalization = Normalization::kSoftmax;

  DcnConfig dcn_config() const;
};

struct BlockParams {
  DcnConfig dcn_cfg;
  DcnWeights dcn;
  PredictorParams predictor;
  LayerNormParams ln1;
  LayerNormParams ln2;
  FfnParams ffn;
  std::vector<double> scale1;  // empty when layer scale is off
  std::vector<double> scale2;

  bool has_layer_scale() const { return !scale1.empty(); }
};

/// Allocates a block with every learnable value zero except LN gamma = 1
/// and layer scale = layer_scale_init.
BlockParams make_block(const BlockOptions& opt);

/// Default init: fan-in scaled uniform projections, zero predictor, unit LN.
void init_block(BlockParams& p, Rng& rng);

template <ParamsOf<PredictorParams> W, class Fn>
void visit_params(W& w, const std::string& prefix, Fn&& fn) {
  visit_params(w.depthwise, prefix + ".dw", fn);
  visit_params(w.linear, prefix + ".linear", fn);
}

template <ParamsOf<BlockParams> W, class Fn>
void visit_params(W& w, const std::string& prefix, Fn&& fn) {
  visit_params(w.dcn, prefix + ".dcn", fn);
  visit_params(w.predictor, prefix + ".predictor", fn);
  visit_params(w.ln1, prefix + ".ln1", fn);
  visit_params(w.ffn.fc1, prefix + ".ffn.fc1", fn);
  visit_params(w.ffn.fc2, prefix + ".ffn.fc2", fn);
  visit_params(w.ln2, prefix + ".ln2", fn);
  if (w.has_layer_scale()) {
    fn(prefix + ".scale1", w.scale1, Dims{static_cast<std::int64_t>(w.scale1.size())});
    fn(prefix + ".scale2", w.scale2, Dims{static_cast<std::int64_t>(w.scale2.size())});
  }
}

SamplingField predict_field(const Tensor4& x, const PredictorParams& p,
                            const DcnConfig& cfg);

struct BlockCache {
  Tensor4 x;
  Tensor4 dw_out;
  SamplingField field;
  Tensor4 dcn_out;
  Tensor4 r1;
  Tensor4 y;
  Tensor4 h1;
  Tensor4 act;
  Tensor4 f;
  Tensor4 r2;
};

/// Post-norm block:
///   y = LN1(x + s1 * DCN(x, predict_field(x)))
///   z = LN2(y + s2 * FFN(y)),  FFN = fc2(GELU(fc1(.)))
Tensor4 basic_block(const Tensor4& x, const BlockParams& p, BlockCache* cache = nullptr);

struct BlockGrads {
  Tensor4 dx;
  BlockParams dp;
};
BlockGrads basic_block_backward(const BlockCache& cache, const BlockParams& p,
                                const Tensor4& dz);

// Stem: conv(3 -> C1/2, k3 s2 p1) -> LN -> GELU -> conv(C1/2 -> C1, k3 s2 p1) -> LN
struct StemParams {
  Conv2dWeights conv1;
  LayerNormParams ln1;
  Conv2dWeights conv2;
  LayerNormParams ln2;
};

StemParams make_stem(int in_channels, int c1);
void init_stem(StemParams& p, Rng& rng);

template <ParamsOf<StemParams> W, class Fn>
void visit_params(W& w, const std::string& prefix, Fn&& fn) {
  visit_params(w.conv1, prefix + ".conv1", fn);
  visit_params(w.ln1, prefix + ".ln1", fn);
  visit_params(w.conv2, prefix + ".conv2", fn);
  visit_params(w.ln2, prefix + ".ln2", fn);
}

struct StemCache {
  Tensor4 x;
  Tensor4 c1;
  Tensor4 n1;
  Tensor4 a1;
  Tensor4 c2;
};

Tensor4 stem(const Tensor4& x, const StemParams& p, StemCache* cache = nullptr);

struct StemGrads {
  Tensor4 dx;
  StemParams dp;
};
StemGrads stem_backward(const StemCache& cache, const StemParams& p, const Tensor4& dy);

// Downsample: conv(C_i -> C_{i+1}, k3 s2 p1) -> LN
struct DownsampleParams {
  Conv2dWeights conv;
  LayerNormParams ln;
};

DownsampleParams make_downsample(int in_c, int out_c);
void init_downsample(DownsampleParams& p, Rng& rng);

template <ParamsOf<DownsampleParams> W, class Fn>
void visit_params(W& w, const std::string& prefix, Fn&& fn) {
  visit_params(w.conv, prefix + ".conv", fn);
  visit_params(w.ln, prefix + ".ln", fn);
}

struct DownsampleCache {
  Tensor4 x;
  Tensor4 conv_out;
};

Tensor4 downsample(const Tensor4& x, const DownsampleParams& p,
                   DownsampleCache* cache = nullptr);

struct DownsampleGrads {
  Tensor4 dx;
  DownsampleParams dp;
};
DownsampleGrads downsample_backward(const DownsampleCache& cache,
                                    const DownsampleParams& p, const Tensor4& dy);

// Head: global average pool -> linear. Logits come back as (n, classes, 1, 1).
struct HeadParams {
  LinearWeights fc;
};

HeadParams make_head(int in_c, int num_classes);
void init_head(HeadParams& p, Rng& rng);

template <ParamsOf<HeadParams> W, class Fn>
void visit_params(W& w, const std::string& prefix, Fn&& fn) {
  visit_params(w.fc, prefix + ".fc", fn);
}

Tensor4 head(const Tensor4& x, const HeadParams& p);

struct HeadGrads {
  Tensor4 dx;
  HeadParams dp;
};
HeadGrads head_backward(const Tensor4& x, const HeadParams& p, const Tensor4& dlogits);

/// Fan-in scaled uniform: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_fan_in(LinearWeights& w, Rng& rng);
void init_fan_in(Conv2dWeights& w, Rng& rng);

}  // namespace internimage
