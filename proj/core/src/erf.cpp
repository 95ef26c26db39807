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

#include "internimage/erf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "internimage/errors.hpp"
#include "internimage/random.hpp"

namespace internimage {

std::vector<RfLayer> static_rf_layers(const ModelConfig& cfg, Tap tap) {
  std::vector<RfLayer> layers{{3, 2, 1}, {3, 2, 1}};
  const int stop = static_cast<int>(tap);
  const int stages = std::min(stop, kNumStages);
  for (int s = 0; s < stages; ++s) {
    if (s > 0) layers.push_back({3, 2, 1});
    for (int b = 0; b < cfg.stack.depths[s]; ++b) {
      layers.push_back({cfg.kernel, 1, cfg.kernel / 2});
    }
  }
  return layers;
}

PixelBox static_receptive_field(const std::vector<RfLayer>& layers, int fy, int fx,
                                int height, int width) {
  // Walk from the feature back to the input: an output range [a, b] reads
  // inputs [a*s - p, b*s - p + k - 1].
  long ya = fy, yb = fy, xa = fx, xb = fx;
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    ya = ya * it->stride - it->pad;
    yb = yb * it->stride - it->pad + it->kernel - 1;
    xa = xa * it->stride - it->pad;
    xb = xb * it->stride - it->pad + it->kernel - 1;
  }
  return PixelBox{static_cast<int>(std::max(0L, ya)), static_cast<int>(std::min<long>(height - 1, yb)),
                  static_cast<int>(std::max(0L, xa)), static_cast<int>(std::min<long>(width - 1, xb))};
}

std::pair<int, int> feature_for_pixel(const std::vector<RfLayer>& layers, int y, int x,
                                      int feature_h, int feature_w) {
  // Center of feature o on the input: start + jump * o.
  double jump = 1.0;
  double start = 0.0;
  for (const auto& l : layers) {
    start += ((l.kernel - 1) / 2.0 - l.pad) * jump;
    jump *= l.stride;
  }
  auto pick = [&](int p, int extent) {
    const long o = std::lround((p - start) / jump);
    return static_cast<int>(std::clamp<long>(o, 0, extent - 1));
  };
  return {pick(y, feature_h), pick(x, feature_w)};
}

ErfMap compute_erf(const Model& m, const Tensor4& image, int y, int x, Tap tap,
                   ErfAggregation agg) {
  if (image.n() != 1) throw InputError("erf: expected a single image, got " + image.shape().str());
  if (y < 0 || y >= image.h() || x < 0 || x >= image.w()) {
    throw InputError("erf: pixel (" + std::to_string(y) + ", " + std::to_string(x) +
                     ") outside " + std::to_string(image.h()) + "x" + std::to_string(image.w()));
  }
  if (tap == Tap::kLogits) throw InputError("erf: tap must be the stem or a stage");
  ModelCache cache;
  const Tensor4 feat = model_forward_to(m, image, tap, &cache);
  const auto layers = static_rf_layers(m.config, tap);
  const auto [fy, fx] = feature_for_pixel(layers, y, x, feat.h(), feat.w());

  ErfMap map;
  map.height = image.h();
  map.width = image.w();
  map.tap = tap;
  map.feature_y = fy;
  map.feature_x = fx;
  map.values.assign(static_cast<std::size_t>(map.height) * map.width, 0.0);

  auto accumulate = [&](const Tensor4& upstream) {
    const ModelGrads g = model_backward(m, cache, upstream);
    for (int c = 0; c < image.c(); ++c) {
      for (int i = 0; i < map.height; ++i) {
        for (int j = 0; j < map.width; ++j) {
          map.values[static_cast<std::size_t>(i) * map.width + j] += std::abs(g.dx.at(0, c, i, j));
        }
      }
    }
  };
  Tensor4 upstream(feat.shape());
  if (agg == ErfAggregation::kChannelSum) {
    for (int c = 0; c < feat.c(); ++c) upstream.at(0, c, fy, fx) = 1.0;
    accumulate(upstream);
  } else {
    for (int c = 0; c < feat.c(); ++c) {
      upstream.at(0, c, fy, fx) = 1.0;
      accumulate(upstream);
      upstream.at(0, c, fy, fx) = 0.0;
    }
  }
  return map;
}

std::string erf_to_pgm(const ErfMap& map) {
  std::ostringstream os;
  os << "P5\n" << map.width << " " << map.height << "\n255\n";
  const double mx = map.values.empty() ? 0.0 : *std::max_element(map.values.begin(), map.values.end());
  std::string out = os.str();
  out.reserve(out.size() + map.values.size());
  for (double v : map.values) {
    const long q = mx > 0 ? std::lround(255.0 * v / mx) : 0;
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp<long>(q, 0, 255))));
  }
  return out;
}

std::string erf_to_csv(const ErfMap& map) {
  std::ostringstream os;
  os.precision(17);
  os << "y,x,value\n";
  for (int i = 0; i < map.height; ++i) {
    for (int j = 0; j < map.width; ++j) os << i << "," << j << "," << map.at(i, j) << "\n";
  }
  return os.str();
}

Tensor4 synthetic_image(int channels, int height, int width, std::uint64_t seed) {
  Rng rng(seed);
  return rng.uniform_tensor(Shape4{1, channels, height, width}, 0.0, 1.0);
}

}  // namespace internimage
