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

#include "internimage/tensor.hpp"

namespace internimage {

/// Per-site dense map over the channel axis: y = matrix * x + bias.
struct LinearWeights {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<double> matrix;  // out_dim x in_dim, row-major
  std::vector<double> bias;    // empty when absent

  LinearWeights() = default;
  LinearWeights(int in, int out, bool with_bias);

  bool has_bias() const { return !bias.empty(); }
  double& m(int o, int i) { return matrix[static_cast<std::size_t>(o) * in_dim + i]; }
  double m(int o, int i) const { return matrix[static_cast<std::size_t>(o) * in_dim + i]; }
  void validate() const;
};

struct Conv2dWeights {
  int out_c = 0;
  int in_c_per_group = 0;
  int kh = 0;
  int kw = 0;
  int stride = 1;
  int pad = 0;
  int groups = 1;
  std::vector<double> kernel;  // out_c x in_c_per_group x kh x kw
  std::vector<double> bias;    // empty when absent

  Conv2dWeights() = default;
  Conv2dWeights(int in_c, int out_c, int k, int stride, int pad, int groups,
                bool with_bias);

  bool has_bias() const { return !bias.empty(); }
  int in_channels() const { return in_c_per_group * groups; }
  std::size_t kernel_index(int o, int i, int ky, int kx) const {
    return ((static_cast<std::size_t>(o) * in_c_per_group + i) * kh + ky) * kw + kx;
  }
  void validate() const;
};

struct LayerNormParams {
  std::vector<double> gamma;
  std::vector<double> beta;
  double eps = 1e-6;

  LayerNormParams() = default;
  explicit LayerNormParams(int channels, double eps = 1e-6);
  int channels() const { return static_cast<int>(gamma.size()); }
};

inline constexpr double kDefaultLayerNormEps = 1e-6;

int conv_out_size(int in, int k, int stride, int pad, int dilation = 1);

// Forward operations. Each has a matching *_backward that takes the same
// inputs plus the upstream gradient dy and returns the vector-Jacobian
// product for every differentiable argument.

Tensor4 linear_project(const Tensor4& x, const LinearWeights& w);

struct LinearGrads {
  Tensor4 dx;
  LinearWeights dw;  // same layout as the forward weights
};
LinearGrads linear_project_backward(const Tensor4& x, const LinearWeights& w,
                                    const Tensor4& dy);

Tensor4 conv2d(const Tensor4& x, const Conv2dWeights& w);

struct Conv2dGrads {
  Tensor4 dx;
  Conv2dWeights dw;
};
Conv2dGrads conv2d_backward(const Tensor4& x, const Conv2dWeights& w,
                            const Tensor4& dy);

/// Normalizes over the channel axis at every (n, y, x) site, then applies
/// the per-channel affine transform.
Tensor4 layer_norm(const Tensor4& x, const LayerNormParams& p);

struct LayerNormGrads {
  Tensor4 dx;
  LayerNormParams dp;
};
LayerNormGrads layer_norm_backward(const Tensor4& x, const LayerNormParams& p,
                                   const Tensor4& dy);

/// x * Phi(x) with the exact erf-based normal CDF.
double gelu(double x);
double gelu_grad(double x);
Tensor4 gelu(const Tensor4& x);
Tensor4 gelu_backward(const Tensor4& x, const Tensor4& dy);

/// Max-subtracted softmax of one logit vector (the sampling-point axis).
void softmax_axis(std::span<const double> logits, std::span<double> out);
std::vector<double> softmax_axis(std::span<const double> logits);
/// Given the softmax output m and dL/dm, writes dL/dlogits.
void softmax_axis_backward(std::span<const double> m,
                           std::span<const double> dm,
                           std::span<double> dlogits);

double sigmoid(double x);

Tensor4 global_avg_pool(const Tensor4& x);
Tensor4 global_avg_pool_backward(const Shape4& input, const Tensor4& dy);

}  // namespace internimage
