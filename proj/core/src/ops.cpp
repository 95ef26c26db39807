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

#include "internimage/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "internimage/errors.hpp"
#include "internimage/parallel.hpp"

namespace internimage {

LinearWeights::LinearWeights(int in, int out, bool with_bias)
    : in_dim(in),
      out_dim(out),
      matrix(static_cast<std::size_t>(in) * out, 0.0),
      bias(with_bias ? static_cast<std::size_t>(out) : 0, 0.0) {}

void LinearWeights::validate() const {
  if (in_dim <= 0 || out_dim <= 0 ||
      matrix.size() != static_cast<std::size_t>(in_dim) * out_dim ||
      (!bias.empty() && bias.size() != static_cast<std::size_t>(out_dim))) {
    throw ShapeError("linear weights: declared " + std::to_string(out_dim) +
                     "x" + std::to_string(in_dim) + " but matrix has " +
                     std::to_string(matrix.size()) + " entries, bias " +
                     std::to_string(bias.size()));
  }
}

Conv2dWeights::Conv2dWeights(int in_c, int out_c_, int k, int stride_,
                             int pad_, int groups_, bool with_bias)
    : out_c(out_c_),
      in_c_per_group(groups_ > 0 ? in_c / groups_ : 0),
      kh(k),
      kw(k),
      stride(stride_),
      pad(pad_),
      groups(groups_) {
  if (groups_ <= 0 || in_c % groups_ != 0 || out_c_ % groups_ != 0) {
    throw ConfigError("conv2d: channels " + std::to_string(in_c) + " -> " +
                      std::to_string(out_c_) + " not divisible by groups " +
                      std::to_string(groups_));
  }
  kernel.assign(static_cast<std::size_t>(out_c) * in_c_per_group * kh * kw, 0.0);
  if (with_bias) bias.assign(out_c, 0.0);
}

void Conv2dWeights::validate() const {
  if (groups <= 0 || out_c <= 0 || in_c_per_group <= 0 || out_c % groups != 0) {
    throw ConfigError("conv2d: out channels " + std::to_string(out_c) +
                      " not divisible by groups " + std::to_string(groups));
  }
  if (kh <= 0 || kw <= 0 || kh % 2 == 0 || kw % 2 == 0) {
    throw ConfigError("conv2d: kernel must be odd, got " + std::to_string(kh) +
                      "x" + std::to_string(kw));
  }
  if (stride <= 0 || pad < 0) {
    throw ConfigError("conv2d: invalid stride/pad");
  }
  if (kernel.size() != static_cast<std::size_t>(out_c) * in_c_per_group * kh * kw ||
      (!bias.empty() && bias.size() != static_cast<std::size_t>(out_c))) {
    throw ShapeError("conv2d: kernel storage does not match declared dims");
  }
}

LayerNormParams::LayerNormParams(int channels, double eps_)
    : gamma(channels, 1.0), beta(channels, 0.0), eps(eps_) {}

int conv_out_size(int in, int k, int stride, int pad, int dilation) {
  return (in + 2 * pad - dilation * (k - 1) - 1) / stride + 1;
}

// ---------------------------------------------------------------- linear

Tensor4 linear_project(const Tensor4& x, const LinearWeights& w) {
  w.validate();
  if (x.c() != w.in_dim) {
    throw ShapeError("linear_project: input " + x.shape().str() +
                     " vs weights " + std::to_string(w.out_dim) + "x" +
                     std::to_string(w.in_dim));
  }
  Tensor4 out(Shape4{x.n(), w.out_dim, x.h(), x.w()});
  const std::size_t hw = x.shape().plane();
  for (int n = 0; n < x.n(); ++n) {
    for (int o = 0; o < w.out_dim; ++o) {
      double* dst = &out[out.index(n, o, 0, 0)];
      const double b = w.has_bias() ? w.bias[o] : 0.0;
      std::fill_n(dst, hw, b);
      for (int i = 0; i < w.in_dim; ++i) {
        const double coef = w.m(o, i);
        const double* src = &x[x.index(n, i, 0, 0)];
        for (std::size_t s = 0; s < hw; ++s) dst[s] += coef * src[s];
      }
    }
  }
  return out;
}

LinearGrads linear_project_backward(const Tensor4& x, const LinearWeights& w,
                                    const Tensor4& dy) {
  if (dy.shape() != Shape4{x.n(), w.out_dim, x.h(), x.w()}) {
    throw ShapeError("linear_project_backward: upstream " + dy.shape().str());
  }
  LinearGrads g{Tensor4(x.shape()), LinearWeights(w.in_dim, w.out_dim, w.has_bias())};
  const std::size_t hw = x.shape().plane();
  for (int n = 0; n < x.n(); ++n) {
    for (int o = 0; o < w.out_dim; ++o) {
      const double* up = &dy[dy.index(n, o, 0, 0)];
      if (w.has_bias()) {
        double s = 0.0;
        for (std::size_t k = 0; k < hw; ++k) s += up[k];
        g.dw.bias[o] += s;
      }
      for (int i = 0; i < w.in_dim; ++i) {
        const double* src = &x[x.index(n, i, 0, 0)];
        double* dxp = &g.dx[g.dx.index(n, i, 0, 0)];
        const double coef = w.m(o, i);
        double acc = 0.0;
        for (std::size_t k = 0; k < hw; ++k) {
          acc += up[k] * src[k];
          dxp[k] += coef * up[k];
        }
        g.dw.m(o, i) += acc;
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------- conv2d

Tensor4 conv2d(const Tensor4& x, const Conv2dWeights& w) {
  w.validate();
  if (x.c() != w.in_channels()) {
    throw ConfigError("conv2d: input " + x.shape().str() + " but weights expect " +
                      std::to_string(w.in_channels()) + " channels");
  }
  const int ho = conv_out_size(x.h(), w.kh, w.stride, w.pad);
  const int wo = conv_out_size(x.w(), w.kw, w.stride, w.pad);
  if (ho <= 0 || wo <= 0) {
    throw ShapeError("conv2d: input " + x.shape().str() + " too small");
  }
  Tensor4 out(Shape4{x.n(), w.out_c, ho, wo});
  const int out_per_group = w.out_c / w.groups;
  parallel_for(x.n() * w.out_c, [&](int job) {
    const int n = job / w.out_c;
    const int o = job % w.out_c;
    const int g = o / out_per_group;
    const double b = w.has_bias() ? w.bias[o] : 0.0;
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        double acc = b;
        for (int i = 0; i < w.in_c_per_group; ++i) {
          const int ic = g * w.in_c_per_group + i;
          for (int ky = 0; ky < w.kh; ++ky) {
            const int iy = oy * w.stride - w.pad + ky;
            if (iy < 0 || iy >= x.h()) continue;
            for (int kx = 0; kx < w.kw; ++kx) {
              const int ix = ox * w.stride - w.pad + kx;
              if (ix < 0 || ix >= x.w()) continue;
              acc += w.kernel[w.kernel_index(o, i, ky, kx)] * x.at(n, ic, iy, ix);
            }
          }
        }
        out.at(n, o, oy, ox) = acc;
      }
    }
  });
  return out;
}

Conv2dGrads conv2d_backward(const Tensor4& x, const Conv2dWeights& w,
                            const Tensor4& dy) {
  w.validate();
  const int ho = conv_out_size(x.h(), w.kh, w.stride, w.pad);
  const int wo = conv_out_size(x.w(), w.kw, w.stride, w.pad);
  if (dy.shape() != Shape4{x.n(), w.out_c, ho, wo}) {
    throw ShapeError("conv2d_backward: upstream " + dy.shape().str());
  }
  Conv2dGrads g{Tensor4(x.shape()), w};
  std::fill(g.dw.kernel.begin(), g.dw.kernel.end(), 0.0);
  std::fill(g.dw.bias.begin(), g.dw.bias.end(), 0.0);
  const int out_per_group = w.out_c / w.groups;
  for (int n = 0; n < x.n(); ++n) {
    for (int o = 0; o < w.out_c; ++o) {
      const int g_idx = o / out_per_group;
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
          const double up = dy.at(n, o, oy, ox);
          if (w.has_bias()) g.dw.bias[o] += up;
          for (int i = 0; i < w.in_c_per_group; ++i) {
            const int ic = g_idx * w.in_c_per_group + i;
            for (int ky = 0; ky < w.kh; ++ky) {
              const int iy = oy * w.stride - w.pad + ky;
              if (iy < 0 || iy >= x.h()) continue;
              for (int kx = 0; kx < w.kw; ++kx) {
                const int ix = ox * w.stride - w.pad + kx;
                if (ix < 0 || ix >= x.w()) continue;
                const std::size_t ki = w.kernel_index(o, i, ky, kx);
                g.dw.kernel[ki] += up * x.at(n, ic, iy, ix);
                g.dx.at(n, ic, iy, ix) += up * w.kernel[ki];
              }
            }
          }
        }
      }
    }
  }
  return g;
}

// ------------------------------------------------------------ layer norm

namespace {

void check_ln(const Tensor4& x, const LayerNormParams& p) {
  if (p.channels() != x.c() || p.beta.size() != p.gamma.size()) {
    throw ShapeError("layer_norm: gamma/beta of length " +
                     std::to_string(p.gamma.size()) + "/" +
                     std::to_string(p.beta.size()) + " for input " +
                     x.shape().str());
  }
}

}  // namespace

Tensor4 layer_norm(const Tensor4& x, const LayerNormParams& p) {
  check_ln(x, p);
  Tensor4 out(x.shape());
  const int C = x.c();
  for (int n = 0; n < x.n(); ++n) {
    for (int y = 0; y < x.h(); ++y) {
      for (int xx = 0; xx < x.w(); ++xx) {
        double mean = 0.0;
        for (int c = 0; c < C; ++c) mean += x.at(n, c, y, xx);
        mean /= C;
        double var = 0.0;
        for (int c = 0; c < C; ++c) {
          const double d = x.at(n, c, y, xx) - mean;
          var += d * d;
        }
        var /= C;
        const double inv = 1.0 / std::sqrt(var + p.eps);
        for (int c = 0; c < C; ++c) {
          out.at(n, c, y, xx) = p.gamma[c] * ((x.at(n, c, y, xx) - mean) * inv) + p.beta[c];
        }
      }
    }
  }
  return out;
}

LayerNormGrads layer_norm_backward(const Tensor4& x, const LayerNormParams& p,
                                   const Tensor4& dy) {
  check_ln(x, p);
  require_same_shape(x, dy, "layer_norm_backward");
  LayerNormGrads g{Tensor4(x.shape()), LayerNormParams(x.c(), p.eps)};
  std::fill(g.dp.gamma.begin(), g.dp.gamma.end(), 0.0);
  const int C = x.c();
  std::vector<double> xhat(C), dxhat(C);
  for (int n = 0; n < x.n(); ++n) {
    for (int y = 0; y < x.h(); ++y) {
      for (int xx = 0; xx < x.w(); ++xx) {
        double mean = 0.0;
        for (int c = 0; c < C; ++c) mean += x.at(n, c, y, xx);
        mean /= C;
        double var = 0.0;
        for (int c = 0; c < C; ++c) {
          const double d = x.at(n, c, y, xx) - mean;
          var += d * d;
        }
        var /= C;
        const double inv = 1.0 / std::sqrt(var + p.eps);
        double mean_dxhat = 0.0;
        double mean_dxhat_xhat = 0.0;
        for (int c = 0; c < C; ++c) {
          xhat[c] = (x.at(n, c, y, xx) - mean) * inv;
          const double up = dy.at(n, c, y, xx);
          g.dp.gamma[c] += up * xhat[c];
          g.dp.beta[c] += up;
          dxhat[c] = up * p.gamma[c];
          mean_dxhat += dxhat[c];
          mean_dxhat_xhat += dxhat[c] * xhat[c];
        }
        mean_dxhat /= C;
        mean_dxhat_xhat /= C;
        for (int c = 0; c < C; ++c) {
          g.dx.at(n, c, y, xx) = inv * (dxhat[c] - mean_dxhat - xhat[c] * mean_dxhat_xhat);
        }
      }
    }
  }
  return g;
}

// ------------------------------------------------------------------ gelu

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2);
  return cdf + x * pdf;
}

Tensor4 gelu(const Tensor4& x) {
  Tensor4 out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = gelu(x[i]);
  return out;
}

Tensor4 gelu_backward(const Tensor4& x, const Tensor4& dy) {
  require_same_shape(x, dy, "gelu_backward");
  Tensor4 out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = dy[i] * gelu_grad(x[i]);
  return out;
}

// --------------------------------------------------------------- softmax

void softmax_axis(std::span<const double> logits, std::span<double> out) {
  if (logits.empty() || out.size() != logits.size()) {
    throw ShapeError("softmax_axis: need K >= 1 and matching output length");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = std::exp(logits[k] - mx);
    sum += out[k];
  }
  const double inv = 1.0 / sum;
  for (auto& v : out) v *= inv;
}

std::vector<double> softmax_axis(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  softmax_axis(logits, out);
  return out;
}

void softmax_axis_backward(std::span<const double> m, std::span<const double> dm,
                           std::span<double> dlogits) {
  double dot = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) dot += m[k] * dm[k];
  for (std::size_t k = 0; k < m.size(); ++k) dlogits[k] = m[k] * (dm[k] - dot);
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------- pooling

Tensor4 global_avg_pool(const Tensor4& x) {
  Tensor4 out(Shape4{x.n(), x.c(), 1, 1});
  const std::size_t hw = x.shape().plane();
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const auto p = x.plane(n, c);
      double s = 0.0;
      for (double v : p) s += v;
      out.at(n, c, 0, 0) = s / static_cast<double>(hw);
    }
  }
  return out;
}

Tensor4 global_avg_pool_backward(const Shape4& input, const Tensor4& dy) {
  if (dy.shape() != Shape4{input.n, input.c, 1, 1}) {
    throw ShapeError("global_avg_pool_backward: upstream " + dy.shape().str());
  }
  Tensor4 out(input);
  const double inv = 1.0 / static_cast<double>(input.plane());
  for (int n = 0; n < input.n; ++n) {
    for (int c = 0; c < input.c; ++c) {
      const double v = dy.at(n, c, 0, 0) * inv;
      for (auto& d : out.plane(n, c)) d = v;
    }
  }
  return out;
}

}  // namespace internimage
