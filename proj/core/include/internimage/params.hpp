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

#include <concepts>
#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

#include "internimage/dcnv3.hpp"
#include "internimage/ops.hpp"

namespace internimage {

using Dims = std::vector<std::int64_t>;

/// Matches both T and const T, so one visitor serves reads and writes.
template <class W, class T>
concept ParamsOf = std::same_as<std::remove_const_t<W>, T>;

// Visitors call fn(name, data, dims) for every learnable tensor, where data is
// a (possibly const) std::vector<double>&. Order is fixed and is the
// serialization order.

template <ParamsOf<LinearWeights> W, class Fn>
void visit_params(W& w, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".weight", w.matrix, Dims{w.out_dim, w.in_dim});
  if (w.has_bias()) fn(prefix + ".bias", w.bias, Dims{w.out_dim});
}

template <ParamsOf<Conv2dWeights> W, class Fn>
void visit_params(W& w, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".weight", w.kernel, Dims{w.out_c, w.in_c_per_group, w.kh, w.kw});
  if (w.has_bias()) fn(prefix + ".bias", w.bias, Dims{w.out_c});
}

template <ParamsOf<LayerNormParams> W, class Fn>
void visit_params(W& w, const std::string& prefix, Fn&& fn) {
  fn(prefix + ".gamma", w.gamma, Dims{w.channels()});
  fn(prefix + ".beta", w.beta, Dims{w.channels()});
}

template <ParamsOf<DcnWeights> W, class Fn>
void visit_params(W& w, const std::string& prefix, Fn&& fn) {
  if (w.per_point.empty()) {
    visit_params(w.proj, prefix + ".proj", fn);
  } else {
    for (std::size_t k = 0; k < w.per_point.size(); ++k) {
      visit_params(w.per_point[k], prefix + ".proj" + std::to_string(k), fn);
    }
  }
}

/// Total scalar count of everything a visitor reaches.
template <class P>
std::int64_t enumerate_param_count(const P& p) {
  std::int64_t total = 0;
  visit_params(p, "", [&](const std::string&, const std::vector<double>& data, const Dims&) {
    total += static_cast<std::int64_t>(data.size());
  });
  return total;
}

/// Sets every learnable scalar to zero; used to build gradient accumulators.
template <class P>
void zero_params(P& p) {
  visit_params(p, "", [](const std::string&, std::vector<double>& data, const Dims&) {
    std::fill(data.begin(), data.end(), 0.0);
  });
}

}  // namespace internimage
