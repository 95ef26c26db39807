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

#include "internimage/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "internimage/errors.hpp"

namespace internimage {

std::string Shape4::str() const {
  std::ostringstream os;
  os << "(" << n << ", " << c << ", " << h << ", " << w << ")";
  return os.str();
}

Tensor4::Tensor4(Shape4 shape, double fill) : shape_(shape) {
  if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
    throw ShapeError("negative tensor dimension " + shape.str());
  }
  data_.assign(shape.numel(), fill);
}

Tensor4::Tensor4(Shape4 shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape.numel()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape.str());
  }
}

void Tensor4::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor4::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Tensor4& a, const Tensor4& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape " + a.shape().str() +
                     " vs " + b.shape().str());
  }
}

Tensor4 add(const Tensor4& a, const Tensor4& b) {
  require_same_shape(a, b, "add");
  Tensor4 out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Tensor4 scale_channels(const Tensor4& x, std::span<const double> s) {
  if (static_cast<int>(s.size()) != x.c()) {
    throw ShapeError("scale_channels: " + std::to_string(s.size()) +
                     " scales for input " + x.shape().str());
  }
  Tensor4 out(x.shape());
  const std::size_t hw = x.shape().plane();
  for (int n = 0; n < x.n(); ++n) {
    for (int c = 0; c < x.c(); ++c) {
      const std::size_t base = x.index(n, c, 0, 0);
      for (std::size_t i = 0; i < hw; ++i) out[base + i] = x[base + i] * s[c];
    }
  }
  return out;
}

Tensor4 slice_channels(const Tensor4& x, int begin, int count) {
  if (begin < 0 || count < 0 || begin + count > x.c()) {
    throw ShapeError("slice_channels: [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of " +
                     x.shape().str());
  }
  Tensor4 out(Shape4{x.n(), count, x.h(), x.w()});
  const std::size_t hw = x.shape().plane();
  for (int n = 0; n < x.n(); ++n) {
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(x.index(n, begin, 0, 0)),
                hw * count,
                out.data().begin() + static_cast<std::ptrdiff_t>(out.index(n, 0, 0, 0)));
  }
  return out;
}

Tensor4 batch_item(const Tensor4& x, int i) {
  if (i < 0 || i >= x.n()) {
    throw ShapeError("batch_item: index " + std::to_string(i) + " out of " +
                     x.shape().str());
  }
  const std::size_t len = static_cast<std::size_t>(x.c()) * x.shape().plane();
  std::vector<double> data(x.vec().begin() + static_cast<std::ptrdiff_t>(len * i),
                           x.vec().begin() + static_cast<std::ptrdiff_t>(len * (i + 1)));
  return Tensor4(Shape4{1, x.c(), x.h(), x.w()}, std::move(data));
}

Tensor4 concat_batch(std::span<const Tensor4> parts) {
  if (parts.empty()) return Tensor4();
  Shape4 s = parts.front().shape();
  int total = 0;
  for (const auto& p : parts) {
    if (p.c() != s.c || p.h() != s.h || p.w() != s.w) {
      throw ShapeError("concat_batch: " + p.shape().str() + " vs " + s.str());
    }
    total += p.n();
  }
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(total) * s.c * s.h * s.w);
  for (const auto& p : parts) data.insert(data.end(), p.vec().begin(), p.vec().end());
  s.n = total;
  return Tensor4(s, std::move(data));
}

}  // namespace internimage
