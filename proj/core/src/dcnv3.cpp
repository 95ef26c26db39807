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

#include "internimage/dcnv3.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "internimage/errors.hpp"
#include "internimage/parallel.hpp"

namespace internimage {

void DcnConfig::validate() const {
  if (channels <= 0 || groups <= 0) {
    throw ConfigError("dcn: channels and groups must be positive");
  }
  if (channels % effective_groups() != 0) {
    throw ConfigError("dcn: channels " + std::to_string(channels) +
                      " not divisible by groups " +
                      std::to_string(effective_groups()));
  }
  if (kernel <= 0 || kernel % 2 == 0) {
    throw ConfigError("dcn: kernel side must be odd, got " + std::to_string(kernel));
  }
  if (stride <= 0 || pad < 0 || dilation <= 0) {
    throw ConfigError("dcn: invalid stride/pad/dilation");
  }
}

DcnConfig dcnv2_config(int channels, int kernel) {
  DcnConfig cfg;
  cfg.channels = channels;
  cfg.groups = 1;
  cfg.kernel = kernel;
  cfg.pad = kernel / 2;
  cfg.shared_weights = false;
  cfg.multi_group = false;
  cfg.normalization = Normalization::kSigmoid;
  return cfg;
}

DcnWeights DcnWeights::zeros(const DcnConfig& cfg) {
  DcnWeights w;
  if (cfg.shared_weights) {
    w.proj = LinearWeights(cfg.channels, cfg.channels, true);
  } else {
    w.per_point.assign(cfg.points(), LinearWeights(cfg.channels, cfg.channels, false));
  }
  return w;
}

DcnWeights DcnWeights::identity(const DcnConfig& cfg) {
  DcnWeights w = zeros(cfg);
  auto set_eye = [&](LinearWeights& lw) {
    for (int i = 0; i < cfg.channels; ++i) lw.m(i, i) = 1.0;
  };
  if (cfg.shared_weights) {
    set_eye(w.proj);
  } else {
    for (auto& lw : w.per_point) set_eye(lw);
  }
  return w;
}

void DcnWeights::validate(const DcnConfig& cfg) const {
  auto check = [&](const LinearWeights& lw) {
    lw.validate();
    if (lw.in_dim != cfg.channels || lw.out_dim != cfg.channels) {
      throw ShapeError("dcn: projection " + std::to_string(lw.out_dim) + "x" +
                       std::to_string(lw.in_dim) + " for " +
                       std::to_string(cfg.channels) + " channels");
    }
  };
  if (cfg.shared_weights) {
    if (!per_point.empty()) throw ConfigError("dcn: per-point weights set in shared mode");
    check(proj);
  } else {
    if (static_cast<int>(per_point.size()) != cfg.points()) {
      throw ConfigError("dcn: expected " + std::to_string(cfg.points()) +
                        " per-point projections, got " +
                        std::to_string(per_point.size()));
    }
    for (const auto& lw : per_point) check(lw);
  }
}

SamplingField SamplingField::zeros(int n, const DcnConfig& cfg, int h_out, int w_out) {
  const int kg = cfg.points() * cfg.effective_groups();
  return SamplingField{Tensor4(Shape4{n, 2 * kg, h_out, w_out}),
                       Tensor4(Shape4{n, kg, h_out, w_out})};
}

// -------------------------------------------------------------- bilinear

BilinearTaps bilinear_taps(double y, double x, int h, int w) {
  BilinearTaps t;
  const double fy = std::floor(y);
  const double fx = std::floor(x);
  t.ly = y - fy;
  t.lx = x - fx;
  t.hy = 1.0 - t.ly;
  t.hx = 1.0 - t.lx;
  t.weight[0] = t.hy * t.hx;
  t.weight[1] = t.hy * t.lx;
  t.weight[2] = t.ly * t.hx;
  t.weight[3] = t.ly * t.lx;
  // Anything beyond one pixel outside the map has no valid corner.
  if (fy < -1.0 || fy > h - 1 || fx < -1.0 || fx > w - 1) return t;
  t.y0 = static_cast<int>(fy);
  t.x0 = static_cast<int>(fx);
  for (int i = 0; i < 4; ++i) {
    const int cy = t.corner_y(i);
    const int cx = t.corner_x(i);
    t.valid[i] = cy >= 0 && cy < h && cx >= 0 && cx < w;
  }
  return t;
}

namespace {

inline double corner_value(std::span<const double> map, int w, const BilinearTaps& t, int i) {
  return t.valid[i] ? map[static_cast<std::size_t>(t.corner_y(i)) * w + t.corner_x(i)] : 0.0;
}

}  // namespace

double bilinear_sample(std::span<const double> map, int h, int w, double y, double x) {
  const BilinearTaps t = bilinear_taps(y, x, h, w);
  const double v0 = corner_value(map, w, t, 0);
  const double v1 = corner_value(map, w, t, 1);
  const double v2 = corner_value(map, w, t, 2);
  const double v3 = corner_value(map, w, t, 3);
  return t.weight[0] * v0 + t.weight[1] * v1 + t.weight[2] * v2 + t.weight[3] * v3;
}

BilinearSample bilinear_sample_grad(std::span<const double> map, int h, int w,
                                    double y, double x) {
  BilinearSample s;
  s.taps = bilinear_taps(y, x, h, w);
  const auto& t = s.taps;
  const double v0 = corner_value(map, w, t, 0);
  const double v1 = corner_value(map, w, t, 1);
  const double v2 = corner_value(map, w, t, 2);
  const double v3 = corner_value(map, w, t, 3);
  s.value = t.weight[0] * v0 + t.weight[1] * v1 + t.weight[2] * v2 + t.weight[3] * v3;
  s.d_dy = t.hx * (v2 - v0) + t.lx * (v3 - v1);
  s.d_dx = t.hy * (v1 - v0) + t.ly * (v3 - v2);
  return s;
}

// ------------------------------------------------------------- helpers

namespace {

struct Dims {
  int n, c, h, w, groups, group_dim, points, ksize, ho, wo;
};

Dims check_inputs(const Tensor4& x, const SamplingField& field,
                  const DcnWeights& w, const DcnConfig& cfg) {
  cfg.validate();
  w.validate(cfg);
  if (x.c() != cfg.channels) {
    throw ConfigError("dcn: input " + x.shape().str() + " but config has " +
                      std::to_string(cfg.channels) + " channels");
  }
  Dims d{x.n(), x.c(), x.h(), x.w(), cfg.effective_groups(), cfg.group_dim(),
         cfg.points(), cfg.kernel, cfg.out_size(x.h()), cfg.out_size(x.w())};
  if (d.ho <= 0 || d.wo <= 0) {
    throw ShapeError("dcn: input " + x.shape().str() + " too small for kernel");
  }
  const Shape4 off{d.n, 2 * d.points * d.groups, d.ho, d.wo};
  const Shape4 msk{d.n, d.points * d.groups, d.ho, d.wo};
  if (field.offsets.shape() != off || field.mask_logits.shape() != msk) {
    throw ConfigError("dcn: sampling field " + field.offsets.shape().str() +
                      " / " + field.mask_logits.shape().str() + ", expected " +
                      off.str() + " / " + msk.str());
  }
  if (!field.offsets.all_finite()) throw InputError("dcn: non-finite sampling offsets");
  if (!field.mask_logits.all_finite()) throw InputError("dcn: non-finite mask logits");
  return d;
}

void normalize(std::span<const double> logits, Normalization mode, std::span<double> m) {
  if (mode == Normalization::kSoftmax) {
    softmax_axis(logits, m);
  } else {
    for (std::size_t k = 0; k < logits.size(); ++k) m[k] = sigmoid(logits[k]);
  }
}

void gather_logits(const SamplingField& f, int n, int g, int points, int oy, int ox,
                   std::span<double> out) {
  for (int k = 0; k < points; ++k) {
    out[k] = f.mask_logits.at(n, SamplingField::mask_channel(g, k, points), oy, ox);
  }
}

}  // namespace

Tensor4 modulation_scalars(const SamplingField& field, const DcnConfig& cfg) {
  cfg.validate();
  const int K = cfg.points();
  const int G = cfg.effective_groups();
  const auto& ml = field.mask_logits;
  if (ml.c() != K * G) {
    throw ShapeError("modulation_scalars: logits " + ml.shape().str());
  }
  Tensor4 out(ml.shape());
  std::vector<double> logits(K), m(K);
  for (int n = 0; n < ml.n(); ++n)
    for (int oy = 0; oy < ml.h(); ++oy)
      for (int ox = 0; ox < ml.w(); ++ox)
        for (int g = 0; g < G; ++g) {
          gather_logits(field, n, g, K, oy, ox, logits);
          normalize(logits, cfg.normalization, m);
          for (int k = 0; k < K; ++k) {
            out.at(n, SamplingField::mask_channel(g, k, K), oy, ox) = m[k];
          }
        }
  return out;
}

// ------------------------------------------------------------- forward

Tensor4 dcnv3_forward(const Tensor4& x, const SamplingField& field,
                      const DcnWeights& w, const DcnConfig& cfg) {
  const Dims d = check_inputs(x, field, w, cfg);
  const bool shared = cfg.shared_weights;
  const int slots = shared ? 1 : d.points;

  // Channel-last copy so each tap reads C' contiguous values.
  std::vector<double> xt(x.size());
  for (int n = 0; n < d.n; ++n)
    for (int c = 0; c < d.c; ++c)
      for (int y = 0; y < d.h; ++y)
        for (int xx = 0; xx < d.w; ++xx)
          xt[((static_cast<std::size_t>(n) * d.h + y) * d.w + xx) * d.c + c] = x.at(n, c, y, xx);
  const std::vector<double> zeros(d.group_dim, 0.0);

  Tensor4 out(Shape4{d.n, d.c, d.ho, d.wo});
  parallel_for(d.n * d.ho, [&](int row) {
    const int n = row / d.ho;
    const int oy = row % d.ho;
    // agg[(slot * C + j) * W_out + ox]
    std::vector<double> agg(static_cast<std::size_t>(slots) * d.c * d.wo);
    std::vector<double> site(static_cast<std::size_t>(slots) * d.c);
    std::vector<double> logits(d.points), m(d.points);

    for (int ox = 0; ox < d.wo; ++ox) {
      std::fill(site.begin(), site.end(), 0.0);
      for (int g = 0; g < d.groups; ++g) {
        gather_logits(field, n, g, d.points, oy, ox, logits);
        normalize(logits, cfg.normalization, m);
        for (int k = 0; k < d.points; ++k) {
          const int ky = k / d.ksize;
          const int kx = k % d.ksize;
          const double sy = (oy * cfg.stride - cfg.pad + ky * cfg.dilation) +
              field.offsets.at(n, SamplingField::offset_channel(g, k, 0, d.points), oy, ox);
          const double sx = (ox * cfg.stride - cfg.pad + kx * cfg.dilation) +
              field.offsets.at(n, SamplingField::offset_channel(g, k, 1, d.points), oy, ox);
          const BilinearTaps t = bilinear_taps(sy, sx, d.h, d.w);
          const double* p[4];
          for (int i = 0; i < 4; ++i) {
            p[i] = t.valid[i]
                ? &xt[((static_cast<std::size_t>(n) * d.h + t.corner_y(i)) * d.w + t.corner_x(i)) * d.c +
                      static_cast<std::size_t>(g) * d.group_dim]
                : zeros.data();
          }
          const double w0 = t.weight[0], w1 = t.weight[1], w2 = t.weight[2], w3 = t.weight[3];
          const double mk = m[k];
          if (shared) {
            double* dst = &site[static_cast<std::size_t>(g) * d.group_dim];
            for (int c = 0; c < d.group_dim; ++c) {
              const double v = w0 * p[0][c] + w1 * p[1][c] + w2 * p[2][c] + w3 * p[3][c];
              dst[c] += mk * v;
            }
          } else {
            double* dst = &site[static_cast<std::size_t>(k) * d.c +
                                static_cast<std::size_t>(g) * d.group_dim];
            for (int c = 0; c < d.group_dim; ++c) {
              const double v = w0 * p[0][c] + w1 * p[1][c] + w2 * p[2][c] + w3 * p[3][c];
              dst[c] = mk * v;
            }
          }
        }
      }
      for (std::size_t j = 0; j < site.size(); ++j) agg[j * d.wo + ox] = site[j];
    }

    for (int o = 0; o < d.c; ++o) {
      double* dst = &out[out.index(n, o, oy, 0)];
      if (shared) {
        std::fill_n(dst, d.wo, w.proj.has_bias() ? w.proj.bias[o] : 0.0);
        for (int j = 0; j < d.c; ++j) {
          const double coef = w.proj.m(o, j);
          const double* a = &agg[static_cast<std::size_t>(j) * d.wo];
          for (int ox = 0; ox < d.wo; ++ox) dst[ox] += coef * a[ox];
        }
      } else {
        std::fill_n(dst, d.wo, 0.0);
        for (int k = 0; k < d.points; ++k) {
          const auto& lw = w.per_point[k];
          if (lw.has_bias()) {
            for (int ox = 0; ox < d.wo; ++ox) dst[ox] += lw.bias[o];
          }
          for (int j = 0; j < d.c; ++j) {
            const double coef = lw.m(o, j);
            const double* a = &agg[(static_cast<std::size_t>(k) * d.c + j) * d.wo];
            for (int ox = 0; ox < d.wo; ++ox) dst[ox] += coef * a[ox];
          }
        }
      }
    }
  });
  return out;
}

Tensor4 dcnv3_naive_forward(const Tensor4& x, const SamplingField& field,
                            const DcnWeights& w, const DcnConfig& cfg) {
  const Dims d = check_inputs(x, field, w, cfg);
  const bool shared = cfg.shared_weights;
  Tensor4 out(Shape4{d.n, d.c, d.ho, d.wo});
  std::vector<double> logits(d.points), m(d.points);
  std::vector<double> agg(static_cast<std::size_t>(shared ? 1 : d.points) * d.c);

  for (int n = 0; n < d.n; ++n) {
    for (int oy = 0; oy < d.ho; ++oy) {
      for (int ox = 0; ox < d.wo; ++ox) {
        for (int g = 0; g < d.groups; ++g) {
          gather_logits(field, n, g, d.points, oy, ox, logits);
          normalize(logits, cfg.normalization, m);
          for (int c = 0; c < d.group_dim; ++c) {
            const int j = g * d.group_dim + c;
            const auto plane = x.plane(n, j);
            double sum = 0.0;
            for (int k = 0; k < d.points; ++k) {
              const double sy = (oy * cfg.stride - cfg.pad + (k / d.ksize) * cfg.dilation) +
                  field.offsets.at(n, SamplingField::offset_channel(g, k, 0, d.points), oy, ox);
              const double sx = (ox * cfg.stride - cfg.pad + (k % d.ksize) * cfg.dilation) +
                  field.offsets.at(n, SamplingField::offset_channel(g, k, 1, d.points), oy, ox);
              const double sample = bilinear_sample(plane, d.h, d.w, sy, sx);
              if (shared) {
                sum += m[k] * sample;
              } else {
                agg[static_cast<std::size_t>(k) * d.c + j] = m[k] * sample;
              }
            }
            if (shared) agg[j] = sum;
          }
        }
        for (int o = 0; o < d.c; ++o) {
          double acc;
          if (shared) {
            acc = w.proj.has_bias() ? w.proj.bias[o] : 0.0;
            for (int j = 0; j < d.c; ++j) acc += w.proj.m(o, j) * agg[j];
          } else {
            acc = 0.0;
            for (int k = 0; k < d.points; ++k) {
              const auto& lw = w.per_point[k];
              if (lw.has_bias()) acc += lw.bias[o];
              for (int j = 0; j < d.c; ++j) {
                acc += lw.m(o, j) * agg[static_cast<std::size_t>(k) * d.c + j];
              }
            }
          }
          out.at(n, o, oy, ox) = acc;
        }
      }
    }
  }
  return out;
}

namespace {

void require_dcnv2(const DcnConfig& cfg) {
  if (cfg.shared_weights || cfg.normalization != Normalization::kSigmoid ||
      cfg.effective_groups() != 1) {
    throw ConfigError(
        "dcnv2: requires per-point weights, sigmoid modulation and one group");
  }
}

}  // namespace

Tensor4 dcnv2_forward(const Tensor4& x, const SamplingField& field,
                      const DcnWeights& w, const DcnConfig& cfg) {
  require_dcnv2(cfg);
  return dcnv3_forward(x, field, w, cfg);
}

Tensor4 dcnv2_naive_forward(const Tensor4& x, const SamplingField& field,
                            const DcnWeights& w, const DcnConfig& cfg) {
  require_dcnv2(cfg);
  return dcnv3_naive_forward(x, field, w, cfg);
}

// ------------------------------------------------------------ backward

DcnGrads dcnv3_backward(const Tensor4& dy, const Tensor4& x,
                        const SamplingField& field, const DcnWeights& w,
                        const DcnConfig& cfg) {
  const Dims d = check_inputs(x, field, w, cfg);
  if (dy.shape() != Shape4{d.n, d.c, d.ho, d.wo}) {
    throw ShapeError("dcnv3_backward: upstream " + dy.shape().str());
  }
  const bool shared = cfg.shared_weights;
  const int slots = shared ? 1 : d.points;

  DcnGrads g{Tensor4(x.shape()),
             SamplingField{Tensor4(field.offsets.shape()), Tensor4(field.mask_logits.shape())},
             DcnWeights::zeros(cfg)};
  if (shared && !w.proj.has_bias()) g.dw.proj.bias.clear();
  if (!shared) {
    for (int k = 0; k < d.points; ++k) {
      if (w.per_point[k].has_bias()) g.dw.per_point[k].bias.assign(d.c, 0.0);
    }
  }

  std::vector<double> logits(d.points), m(d.points), dm(d.points), dl(d.points);
  std::vector<BilinearSample> samples(static_cast<std::size_t>(d.points) * d.c);
  std::vector<double> agg(static_cast<std::size_t>(slots) * d.c);
  std::vector<double> dagg(static_cast<std::size_t>(slots) * d.c);
  std::vector<double> up(d.c);
  std::vector<double> mods(static_cast<std::size_t>(d.groups) * d.points);

  for (int n = 0; n < d.n; ++n) {
    for (int oy = 0; oy < d.ho; ++oy) {
      for (int ox = 0; ox < d.wo; ++ox) {
        // Recompute samples and aggregates for this site.
        for (int gi = 0; gi < d.groups; ++gi) {
          gather_logits(field, n, gi, d.points, oy, ox, logits);
          normalize(logits, cfg.normalization, std::span<double>(mods).subspan(
                                                    static_cast<std::size_t>(gi) * d.points, d.points));
          for (int k = 0; k < d.points; ++k) {
            const double sy = (oy * cfg.stride - cfg.pad + (k / d.ksize) * cfg.dilation) +
                field.offsets.at(n, SamplingField::offset_channel(gi, k, 0, d.points), oy, ox);
            const double sx = (ox * cfg.stride - cfg.pad + (k % d.ksize) * cfg.dilation) +
                field.offsets.at(n, SamplingField::offset_channel(gi, k, 1, d.points), oy, ox);
            for (int c = 0; c < d.group_dim; ++c) {
              const int j = gi * d.group_dim + c;
              samples[static_cast<std::size_t>(k) * d.c + j] =
                  bilinear_sample_grad(x.plane(n, j), d.h, d.w, sy, sx);
            }
          }
        }
        std::fill(agg.begin(), agg.end(), 0.0);
        for (int gi = 0; gi < d.groups; ++gi) {
          for (int k = 0; k < d.points; ++k) {
            const double mk = mods[static_cast<std::size_t>(gi) * d.points + k];
            for (int c = 0; c < d.group_dim; ++c) {
              const int j = gi * d.group_dim + c;
              const double v = mk * samples[static_cast<std::size_t>(k) * d.c + j].value;
              if (shared) {
                agg[j] += v;
              } else {
                agg[static_cast<std::size_t>(k) * d.c + j] = v;
              }
            }
          }
        }
        for (int o = 0; o < d.c; ++o) up[o] = dy.at(n, o, oy, ox);

        // Projection pullback.
        std::fill(dagg.begin(), dagg.end(), 0.0);
        for (int s = 0; s < slots; ++s) {
          const LinearWeights& lw = shared ? w.proj : w.per_point[s];
          LinearWeights& dlw = shared ? g.dw.proj : g.dw.per_point[s];
          const double* a = &agg[static_cast<std::size_t>(s) * d.c];
          double* da = &dagg[static_cast<std::size_t>(s) * d.c];
          for (int o = 0; o < d.c; ++o) {
            const double u = up[o];
            if (dlw.has_bias()) dlw.bias[o] += u;
            for (int j = 0; j < d.c; ++j) {
              dlw.m(o, j) += u * a[j];
              da[j] += lw.m(o, j) * u;
            }
          }
        }

        // Sampling / modulation pullback.
        for (int gi = 0; gi < d.groups; ++gi) {
          std::span<const double> mg(&mods[static_cast<std::size_t>(gi) * d.points], d.points);
          for (int k = 0; k < d.points; ++k) {
            const std::size_t s = shared ? 0 : static_cast<std::size_t>(k);
            double dmk = 0.0;
            double doy = 0.0;
            double dox = 0.0;
            for (int c = 0; c < d.group_dim; ++c) {
              const int j = gi * d.group_dim + c;
              const BilinearSample& bs = samples[static_cast<std::size_t>(k) * d.c + j];
              const double dprod = dagg[s * d.c + j];
              dmk += dprod * bs.value;
              const double ds = dprod * mg[k];
              doy += ds * bs.d_dy;
              dox += ds * bs.d_dx;
              auto dplane = g.dx.plane(n, j);
              for (int i = 0; i < 4; ++i) {
                if (bs.taps.valid[i]) {
                  dplane[static_cast<std::size_t>(bs.taps.corner_y(i)) * d.w + bs.taps.corner_x(i)] +=
                      ds * bs.taps.weight[i];
                }
              }
            }
            dm[k] = dmk;
            g.dfield.offsets.at(n, SamplingField::offset_channel(gi, k, 0, d.points), oy, ox) = doy;
            g.dfield.offsets.at(n, SamplingField::offset_channel(gi, k, 1, d.points), oy, ox) = dox;
          }
          if (cfg.normalization == Normalization::kSoftmax) {
            softmax_axis_backward(mg, dm, dl);
          } else {
            for (int k = 0; k < d.points; ++k) dl[k] = dm[k] * mg[k] * (1.0 - mg[k]);
          }
          for (int k = 0; k < d.points; ++k) {
            g.dfield.mask_logits.at(n, SamplingField::mask_channel(gi, k, d.points), oy, ox) = dl[k];
          }
        }
      }
    }
  }
  return g;
}

}  // namespace internimage
