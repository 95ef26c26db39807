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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace internimage {

struct Shape4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::string str() const;

  friend bool operator==(const Shape4&, const Shape4&) = default;
};

/// Dense (n, c, h, w) array of doubles, row-major with w fastest.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(Shape4 shape, double fill = 0.0);
  Tensor4(Shape4 shape, std::vector<double> data);
  Tensor4(int n, int c, int h, int w, double fill = 0.0)
      : Tensor4(Shape4{n, c, h, w}, fill) {}

  const Shape4& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int c() const { return shape_.c; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) *
               shape_.w +
           x;
  }
  double& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  const double& at(int n, int c, int y, int x) const {
    return data_[index(n, c, y, x)];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  const double& operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  /// One (h, w) slice.
  std::span<double> plane(int n, int c) {
    return std::span<double>(data_).subspan(index(n, c, 0, 0), shape_.plane());
  }
  std::span<const double> plane(int n, int c) const {
    return std::span<const double>(data_).subspan(index(n, c, 0, 0),
                                                  shape_.plane());
  }

  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Tensor4&, const Tensor4&) = default;

 private:
  Shape4 shape_{};
  std::vector<double> data_;
};

/// Elementwise a + b; shapes must match.
Tensor4 add(const Tensor4& a, const Tensor4& b);

/// Per-channel scale: out[n,c,y,x] = x[n,c,y,x] * s[c].
Tensor4 scale_channels(const Tensor4& x, std::span<const double> s);

/// Channels [begin, begin + count) of x.
Tensor4 slice_channels(const Tensor4& x, int begin, int count);

/// Batch element i as a batch of one.
Tensor4 batch_item(const Tensor4& x, int i);

/// Concatenate along the batch axis.
Tensor4 concat_batch(std::span<const Tensor4> parts);

void require_same_shape(const Tensor4& a, const Tensor4& b, const char* what);

}  // namespace internimage
