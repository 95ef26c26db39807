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

#include <span>
#include <vector>

#include "internimage/ops.hpp"
#include "internimage/tensor.hpp"

namespace internimage {

enum class Normalization { kSoftmax, kSigmoid };

/// Hyperparameters of one deformable-convolution layer.
///
/// The three ablation toggles default to the DCNv3 setting. Turning
/// `multi_group` off collapses the layer to a single aggregation group
/// (C' = C) regardless of `groups`.
struct DcnConfig {
  int channels = 0;
  int groups = 1;
  int kernel = 3;
  int stride = 1;
  int pad = 1;
  int dilation = 1;
  bool shared_weights = true;
  bool multi_group = true;
  Normalization normalization = Normalization::kSoftmax;

  int effective_groups() const { return multi_group ? groups : 1; }
  int group_dim() const { return channels / effective_groups(); }
  int points() const { return kernel * kernel; }
  int out_size(int in) const { return conv_out_size(in, kernel, stride, pad, dilation); }
  void validate() const;
};

/// The classic DCNv2 operator: per-point weights, sigmoid masks, one group.
DcnConfig dcnv2_config(int channels, int kernel = 3);

struct DcnWeights {
  LinearWeights proj;                   // used when shared_weights
  std::vector<LinearWeights> per_point;  // K entries when !shared_weights

  /// Zero weights with the layout required by cfg. The shared projection
  /// carries a bias; per-point projections do not.
  static DcnWeights zeros(const DcnConfig& cfg);
  /// Identity projection(s); per-point mode puts identity on every point.
  static DcnWeights identity(const DcnConfig& cfg);
  void validate(const DcnConfig& cfg) const;
};

/// Externally supplied sampling offsets and modulation logits.
///
/// offsets: (n, 2*K*G, H_out, W_out), channel (g*K + k)*2 + {0: dy, 1: dx}
/// mask_logits: (n, K*G, H_out, W_out), channel g*K + k
/// Offsets are in input-pixel units.
struct SamplingField {
  Tensor4 offsets;
  Tensor4 mask_logits;

  static SamplingField zeros(int n, const DcnConfig& cfg, int h_out, int w_out);
  static int offset_channel(int g, int k, int axis, int points) {
    return (g * points + k) * 2 + axis;
  }
  static int mask_channel(int g, int k, int points) { return g * points + k; }
};

struct BilinearTaps {
  double ly = 0, lx = 0, hy = 1, hx = 1;
  // Corner order: (y0, x0), (y0, x0+1), (y0+1, x0), (y0+1, x0+1).
  double weight[4] = {0, 0, 0, 0};
  bool valid[4] = {false, false, false, false};
  int y0 = 0;
  int x0 = 0;

  int corner_y(int i) const { return y0 + (i >> 1); }
  int corner_x(int i) const { return x0 + (i & 1); }
};

/// Corner weights for sampling an (h, w) map at real (y, x). Corners outside
/// [0, h-1] x [0, w-1] are marked invalid and read as zero.
BilinearTaps bilinear_taps(double y, double x, int h, int w);

struct BilinearSample {
  double value = 0;
  double d_dy = 0;  // partial derivative of value w.r.t. y
  double d_dx = 0;
  BilinearTaps taps;  // scatter weights for the map pullback
};

double bilinear_sample(std::span<const double> map, int h, int w, double y, double x);
BilinearSample bilinear_sample_grad(std::span<const double> map, int h, int w,
                                    double y, double x);

/// Normalized modulation scalars, shape like field.mask_logits.
Tensor4 modulation_scalars(const SamplingField& field, const DcnConfig& cfg);

/// Optimized forward. Aggregates the K modulated samples per group, then
/// applies the shared projection once per site.
Tensor4 dcnv3_forward(const Tensor4& x, const SamplingField& field,
                      const DcnWeights& w, const DcnConfig& cfg);

/// Literal loop transcription used as the correctness oracle. Produces the
/// same per-element summation order as dcnv3_forward.
Tensor4 dcnv3_naive_forward(const Tensor4& x, const SamplingField& field,
                            const DcnWeights& w, const DcnConfig& cfg);

/// DCNv2 entry points; cfg must have per-point weights, sigmoid masks and a
/// single group.
Tensor4 dcnv2_forward(const Tensor4& x, const SamplingField& field,
                      const DcnWeights& w, const DcnConfig& cfg);
Tensor4 dcnv2_naive_forward(const Tensor4& x, const SamplingField& field,
                            const DcnWeights& w, const DcnConfig& cfg);

struct DcnGrads {
  Tensor4 dx;
  SamplingField dfield;
  DcnWeights dw;
};

DcnGrads dcnv3_backward(const Tensor4& dy, const Tensor4& x,
                        const SamplingField& field, const DcnWeights& w,
                        const DcnConfig& cfg);

}  // namespace internimage
