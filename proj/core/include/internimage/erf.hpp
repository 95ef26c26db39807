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

#include <string>
#include <vector>

#include "internimage/model.hpp"

namespace internimage {

/// Per-input-pixel gradient magnitude, summed over input channels.
struct ErfMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // row-major, all >= 0
  Tap tap = Tap::kStage1;
  int feature_y = 0;
  int feature_x = 0;

  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Inclusive pixel box.
struct PixelBox {
  int y0 = 0, y1 = -1, x0 = 0, x1 = -1;

  bool contains(int y, int x) const { return y >= y0 && y <= y1 && x >= x0 && x <= x1; }
};

/// One convolution-like layer for receptive-field arithmetic.
struct RfLayer {
  int kernel = 1;
  int stride = 1;
  int pad = 0;
};

/// Layers between the input and `tap` as seen by a model whose offsets are
/// all zero: stem convs, one k x k layer per block, downsample convs.
std::vector<RfLayer> static_rf_layers(const ModelConfig& cfg, Tap tap);

/// Input pixels that can influence feature (fy, fx), clipped to the image.
PixelBox static_receptive_field(const std::vector<RfLayer>& layers, int fy, int fx,
                                int height, int width);

/// Feature index whose receptive-field center is nearest the input pixel.
std::pair<int, int> feature_for_pixel(const std::vector<RfLayer>& layers, int y, int x,
                                      int feature_h, int feature_w);

/// How the feature channels at the chosen location are activated.
enum class ErfAggregation {
  /// One backward pass with a one-hot in every channel at once. Degenerate
  /// right after a LayerNorm with uniform gamma: the channel sum of a
  /// normalized vector is constant, so the map is zero up to round-off.
  kChannelSum,
  /// One backward pass per channel, summing |grad|. Never degenerate.
  kPerChannel,
};

/// Backpropagates a one-hot gradient at the feature location mapped from
/// pixel (y, x) at `tap` and sums |grad| over input channels. `image` must
/// be a single image.
ErfMap compute_erf(const Model& m, const Tensor4& image, int y, int x, Tap tap,
                   ErfAggregation agg = ErfAggregation::kPerChannel);

/// P5 binary PGM, 8-bit, values scaled so the maximum maps to 255.
std::string erf_to_pgm(const ErfMap& map);
/// "y,x,value" rows with a header line.
std::string erf_to_csv(const ErfMap& map);

/// Deterministic synthetic image in [0, 1] for ERF runs without an input.
Tensor4 synthetic_image(int channels, int height, int width, std::uint64_t seed);

}  // namespace internimage
