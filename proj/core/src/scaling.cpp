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

#include "internimage/scaling.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "internimage/errors.hpp"

namespace internimage {

double check_constraint(double alpha, double beta) {
  return alpha * std::pow(beta, kWidthExponent) - 2.0;
}

double ScaleFactors::residual() const { return check_constraint(alpha, beta); }

ContinuousScale scale_continuous(ContinuousScale origin, const ScaleFactors& f) {
  return ContinuousScale{std::pow(f.alpha, f.phi) * origin.depth,
                         std::pow(f.beta, f.phi) * origin.c1};
}

ScaledConfig scale_config(const StackConfig& origin, const ScaleFactors& f, bool strict) {
  if (!validate_stack(origin).empty()) throw ConfigError("scale_config: origin stack is invalid");
  if (!(f.alpha >= 1.0) || !(f.beta >= 1.0)) {
    throw ConfigError("scale_config: alpha and beta must be >= 1");
  }
  const double residual = f.residual();
  if (strict && std::abs(residual) > kConstraintTolerance) {
    std::ostringstream os;
    os << "scale_config: alpha*beta^1.99 - 2 = " << residual << " exceeds tolerance "
       << kConstraintTolerance;
    throw ConfigError(os.str());
  }

  ScaledConfig out;
  out.continuous = scale_continuous({static_cast<double>(origin.depth()),
                                     static_cast<double>(origin.c1)}, f);

  const int cp = origin.cprime;
  const int units = std::max(1, static_cast<int>(std::floor(out.continuous.c1 / cp + 0.5)));
  const int c1 = units * cp;

  const double target_l1 = std::pow(f.alpha, f.phi) * origin.l1();
  int best_l1 = 1;
  int best_l3 = 1;
  double best_depth_err = std::numeric_limits<double>::infinity();
  double best_l1_err = std::numeric_limits<double>::infinity();
  // Every integer depth >= 4 is reachable, so the optimum is within 0.5 of
  // D'; scanning depths up to ceil(D') + 1 covers it.
  const int max_depth = std::max(4, static_cast<int>(std::ceil(out.continuous.depth)) + 1);
  for (int l1 = 1; 4 * l1 <= max_depth; ++l1) {
    for (int l3 = l1; 3 * l1 + l3 <= max_depth; ++l3) {
      const double depth_err = std::abs(3 * l1 + l3 - out.continuous.depth);
      const double l1_err = std::abs(l1 - target_l1);
      constexpr double kEps = 1e-12;
      if (depth_err < best_depth_err - kEps ||
          (std::abs(depth_err - best_depth_err) <= kEps && l1_err < best_l1_err - kEps)) {
        best_depth_err = depth_err;
        best_l1_err = l1_err;
        best_l1 = l1;
        best_l3 = l3;
      }
    }
  }
  out.snapped = StackConfig::from(c1, cp, best_l1, best_l3);
  out.c1_delta = c1 - out.continuous.c1;
  out.depth_delta = out.snapped.depth() - out.continuous.depth;
  return out;
}

std::vector<SearchEntry> enumerate_search_space(const SearchSpaceOptions& opt) {
  const double cap = opt.budget * (1.0 + opt.tolerance);
  auto count = [&](const StackConfig& s) {
    return count_params(s, opt.ffn_ratio, opt.num_classes, /*enumerate=*/false).closed_form_total;
  };
  std::vector<SearchEntry> out;
  for (int c1 : opt.c1_values) {
    for (int l1 : opt.l1_values) {
      for (int cp : opt.cprime_values) {
        StackConfig s = StackConfig::from(c1, cp, l1, l1);
        SearchEntry e;
        e.violations = validate_stack(s);
        if (!e.valid()) {
          e.stack = s;
          out.push_back(std::move(e));
          continue;
        }
        while (true) {
          const StackConfig next = StackConfig::from(c1, cp, l1, s.l3() + 1);
          if (static_cast<double>(count(next)) > cap) break;
          s = next;
        }
        e.stack = s;
        e.params = count(s);
        e.within_budget =
            std::abs(static_cast<double>(e.params) - opt.budget) <= opt.tolerance * opt.budget;
        out.push_back(std::move(e));
      }
    }
  }
  return out;
}

std::string search_space_csv(const std::vector<SearchEntry>& entries) {
  std::ostringstream os;
  os << "c1,cprime,l1,l3,params\n";
  for (const auto& e : entries) {
    os << e.stack.c1 << "," << e.stack.cprime << "," << e.stack.l1() << "," << e.stack.l3()
       << "," << e.params << "\n";
  }
  return os.str();
}

}  // namespace internimage
