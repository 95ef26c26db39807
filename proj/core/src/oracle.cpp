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

#include "internimage/oracle.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "internimage/gradcheck.hpp"
#include "internimage/params.hpp"

namespace internimage {

namespace {

// Maps doubles onto a monotone unsigned line so ulp distance is a subtraction.
std::uint64_t ordered(double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  constexpr std::uint64_t kSign = 0x8000000000000000ull;
  return (bits & kSign) ? kSign - (bits & ~kSign) : kSign + bits;
}

}  // namespace

std::uint64_t ulp_distance(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) return std::numeric_limits<std::uint64_t>::max();
  const auto oa = ordered(a);
  const auto ob = ordered(b);
  return oa > ob ? oa - ob : ob - oa;
}

std::uint64_t max_ulp_distance(const Tensor4& a, const Tensor4& b) {
  require_same_shape(a, b, "max_ulp_distance");
  std::uint64_t m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, ulp_distance(a[i], b[i]));
  return m;
}

DcnInstance random_dcn_instance(Rng& rng, const DcnConfig& toggles) {
  DcnInstance inst;
  DcnConfig& cfg = inst.cfg;
  cfg = toggles;
  const int groups = toggles.multi_group ? rng.uniform_int(1, 2) : 1;
  const int group_dim = rng.uniform_int(1, 8 / groups);
  cfg.channels = groups * group_dim;
  cfg.groups = groups;
  cfg.kernel = 3;
  cfg.stride = rng.uniform_int(1, 2);
  cfg.dilation = rng.uniform_int(1, 2);
  cfg.pad = cfg.dilation;
  const int n = rng.uniform_int(1, 2);
  const int h = rng.uniform_int(3, 7);
  const int w = rng.uniform_int(3, 7);
  inst.x = rng.uniform_tensor(Shape4{n, cfg.channels, h, w}, -1.0, 1.0);
  inst.field = SamplingField::zeros(n, cfg, cfg.out_size(h), cfg.out_size(w));
  rng.fill_uniform(inst.field.offsets.vec(), -2.0, 2.0);
  rng.fill_uniform(inst.field.mask_logits.vec(), -3.0, 3.0);
  inst.weights = DcnWeights::zeros(cfg);
  visit_params(inst.weights, "", [&](const std::string&, std::vector<double>& d, const Dims&) {
    rng.fill_uniform(d, -1.0, 1.0);
  });
  return inst;
}

OracleReport run_oracle(std::uint64_t seed, int trials, OracleMode mode) {
  Rng rng(seed);
  OracleReport rep;
  const auto& rows = ablation_rows();
  for (int t = 0; t < trials; ++t) {
    DcnConfig toggles;
    switch (mode) {
      case OracleMode::kDcnv3:
        break;
      case OracleMode::kDcnv2:
        toggles = dcnv2_config(1);
        break;
      case OracleMode::kAllRows:
        toggles = apply_row(toggles, rows[t % rows.size()]);
        break;
    }
    const DcnInstance inst = random_dcn_instance(rng, toggles);
    Tensor4 fast, slow;
    if (mode == OracleMode::kDcnv2) {
      fast = dcnv2_forward(inst.x, inst.field, inst.weights, inst.cfg);
      slow = dcnv2_naive_forward(inst.x, inst.field, inst.weights, inst.cfg);
    } else {
      fast = dcnv3_forward(inst.x, inst.field, inst.weights, inst.cfg);
      slow = dcnv3_naive_forward(inst.x, inst.field, inst.weights, inst.cfg);
    }
    const auto ulps = max_ulp_distance(fast, slow);
    for (std::size_t i = 0; i < fast.size(); ++i) {
      rep.max_abs_diff = std::max(rep.max_abs_diff, std::abs(fast[i] - slow[i]));
    }
    if (ulps > rep.max_ulps || rep.worst_trial < 0) {
      rep.max_ulps = std::max(rep.max_ulps, ulps);
      rep.worst_trial = t;
    }
    ++rep.trials;
  }
  return rep;
}

}  // namespace internimage
