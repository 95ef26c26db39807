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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "internimage/errors.hpp"
#include "internimage/scaling.hpp"

namespace ii = internimage;
using ii::ScaleFactors;
using ii::StackConfig;

namespace {
const StackConfig kOrigin = StackConfig::from(64, 16, 4, 18);
}

// Residuals: tests/oracles/derive.py.
TEST(Constraint, PublishedPairs) {
  EXPECT_NEAR(ii::check_constraint(1.09, 1.36), 0.009874, 5e-7);
  EXPECT_NEAR(ii::check_constraint(1.0, std::pow(2.0, 1 / 1.99)), 0.0, 1e-12);
  const std::vector<std::pair<double, double>> grid{
      {1.03, 1.40}, {1.06, 1.38}, {1.09, 1.36}, {1.12, 1.34}, {1.15, 1.32}};
  for (const auto& [a, b] : grid) EXPECT_LE(std::abs(ii::check_constraint(a, b)), 0.05) << a;
  EXPECT_EQ((ScaleFactors{1.09, 1.36, 1}.residual()), ii::check_constraint(1.09, 1.36));
}

TEST(ScaleConfig, PhiZeroIsIdentity) {
  const auto sc = ii::scale_config(kOrigin, {1.09, 1.36, 0});
  EXPECT_EQ(sc.snapped, kOrigin);
  EXPECT_EQ(sc.c1_delta, 0);
  EXPECT_EQ(sc.depth_delta, 0);
}

TEST(ScaleConfig, PhiOneReproducesS) {
  const auto sc = ii::scale_config(kOrigin, {1.09, 1.36, 1});
  EXPECT_NEAR(sc.continuous.c1, 87.04, 1e-12);
  EXPECT_NEAR(sc.continuous.depth, 32.7, 1e-12);
  EXPECT_EQ(sc.snapped, StackConfig::from(80, 16, 4, 21));
  EXPECT_EQ(sc.snapped, ii::find_variant("S")->stack);
  EXPECT_NEAR(sc.c1_delta, -7.04, 1e-12);
  EXPECT_NEAR(sc.depth_delta, 0.3, 1e-12);
}

TEST(ScaleConfig, PhiTwoReproducesBWidth) {
  const auto sc = ii::scale_config(kOrigin, {1.09, 1.36, 2});
  EXPECT_NEAR(sc.continuous.c1, 118.3744, 1e-12);
  EXPECT_NEAR(sc.continuous.depth, 35.643, 1e-12);
  EXPECT_EQ(sc.snapped.c1, ii::find_variant("B")->stack.c1);
  EXPECT_EQ(sc.snapped.depth(), 36);
  EXPECT_EQ(sc.snapped, StackConfig::from(112, 16, 5, 21));
  EXPECT_NE(sc.snapped.depth(), ii::find_variant("B")->stack.depth());
  EXPECT_NEAR(sc.depth_delta, 0.357, 1e-12);
}

TEST(ScaleConfig, StrictModeRejectsLargeResidual) {
  try {
    ii::scale_config(kOrigin, {1.5, 1.5, 1});
    FAIL() << "expected ConfigError";
  } catch (const ii::ConfigError& e) {
    const double r = ii::check_constraint(1.5, 1.5);
    std::ostringstream os;
    os << r;
    EXPECT_NE(std::string(e.what()).find(os.str()), std::string::npos) << e.what();
  }
  EXPECT_NO_THROW(ii::scale_config(kOrigin, {1.5, 1.5, 1}, false));
  EXPECT_THROW(ii::scale_config(kOrigin, {0.9, 1.5, 1}, false), ii::ConfigError);
  EXPECT_THROW(ii::scale_config(StackConfig::from(64, 16, 5, 4), {1.09, 1.36, 1}), ii::ConfigError);
}

TEST(ScaleConfig, MonotoneValidAndBoundedDeltas) {
  const std::vector<std::pair<double, double>> grid{
      {1.03, 1.40}, {1.06, 1.38}, {1.09, 1.36}, {1.12, 1.34}, {1.15, 1.32}};
  for (const auto& v : ii::variant_registry()) {
    for (const auto& [a, b] : grid) {
      ii::ContinuousScale prev{-1, -1};
      for (double phi = 0; phi <= 4.0; phi += 0.25) {
        const auto sc = ii::scale_config(v.stack, {a, b, phi});
        EXPECT_TRUE(ii::validate_stack(sc.snapped).empty()) << v.name << " phi=" << phi;
        EXPECT_LE(std::abs(sc.c1_delta), v.stack.cprime / 2.0);
        EXPECT_LE(std::abs(sc.depth_delta), 2.0);
        EXPECT_GT(sc.continuous.c1, prev.c1);
        EXPECT_GT(sc.continuous.depth, prev.depth);
        prev = sc.continuous;
      }
    }
  }
}

TEST(ScaleConfig, CompositionOfContinuousScales) {
  const ii::ContinuousScale o{30, 64};
  for (double a : {0.5, 1.0, 1.7}) {
    for (double b : {0.25, 1.0, 2.3}) {
      const ScaleFactors fa{1.09, 1.36, a}, fb{1.09, 1.36, b}, fab{1.09, 1.36, a + b};
      const auto two = ii::scale_continuous(ii::scale_continuous(o, fa), fb);
      const auto one = ii::scale_continuous(o, fab);
      EXPECT_NEAR(two.c1 / one.c1, 1.0, 1e-12);
      EXPECT_NEAR(two.depth / one.depth, 1.0, 1e-12);
    }
  }
}

// Counts and L3 values: tests/oracles/derive.py.
TEST(SearchSpace, ThirtyCombinations) {
  const auto entries = ii::enumerate_search_space();
  ASSERT_EQ(entries.size(), 30u);
  int invalid = 0;
  for (const auto& e : entries) {
    EXPECT_EQ(e.valid(), ii::validate_stack(e.stack).empty());
    EXPECT_LE(e.stack.l1(), e.stack.l3());
    if (!e.valid()) {
      ++invalid;
      // Only C' = 32 with C1 in {48, 80} gives fractional groups.
      EXPECT_EQ(e.stack.cprime, 32);
      EXPECT_NE(e.stack.c1, 64);
      EXPECT_EQ(e.params, -1);
      EXPECT_FALSE(e.within_budget);
      EXPECT_EQ(e.violations.front().rule, "C1 divisible by C'");
    }
  }
  EXPECT_EQ(invalid, 10);
}

TEST(SearchSpace, OriginRowAndBudget) {
  const auto entries = ii::enumerate_search_space();
  int outside = 0;
  for (const auto& e : entries) {
    if (e.stack.c1 == 64 && e.stack.cprime == 16 && e.stack.l1() == 4) {
      EXPECT_EQ(e.stack.l3(), 24);
      EXPECT_EQ(e.params, 31170040);
    }
    if (e.stack.c1 == 80 && e.stack.cprime == 16 && e.stack.l1() == 5) {
      EXPECT_EQ(e.stack.l3(), 5);
      EXPECT_EQ(e.params, 32293925);
      EXPECT_FALSE(e.within_budget);
    }
    if (!e.valid()) continue;
    EXPECT_EQ(e.within_budget, std::abs(e.params - 30e6) <= 1.5e6);
    outside += !e.within_budget;
  }
  EXPECT_EQ(outside, 1);
}

TEST(SearchSpace, CsvSchema) {
  const auto entries = ii::enumerate_search_space();
  std::istringstream is(ii::search_space_csv(entries));
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "c1,cprime,l1,l3,params");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    int c1, cp, l1, l3;
    long long p;
    ASSERT_EQ(std::sscanf(line.c_str(), "%d,%d,%d,%d,%lld", &c1, &cp, &l1, &l3, &p), 5) << line;
    EXPECT_EQ(StackConfig::from(c1, cp, l1, l3), entries[rows].stack);
    EXPECT_EQ(p, entries[rows].params);
    ++rows;
  }
  EXPECT_EQ(rows, 30u);
}

TEST(SearchSpace, DerivedDepthsForValidCombinations) {
  // (c1, cprime, l1) -> (l3, params)
  const std::vector<std::tuple<int, int, int, int, std::int64_t>> want{
      {48, 16, 1, 71, 31248175}, {48, 16, 2, 67, 31366090}, {48, 16, 3, 63, 31484005},
      {48, 16, 4, 58, 31203772}, {48, 16, 5, 54, 31321687}, {64, 16, 1, 37, 31240188},
      {64, 16, 2, 33, 31452128}, {64, 16, 3, 28, 30958100}, {64, 16, 4, 24, 31170040},
      {64, 16, 5, 20, 31381980}, {64, 32, 1, 40, 30898554}, {64, 32, 2, 36, 31093484},
      {64, 32, 3, 32, 31288414}, {64, 32, 4, 28, 31483344}, {64, 32, 5, 23, 31027818},
      {80, 16, 1, 21, 30960625}, {80, 16, 2, 17, 31293950}, {80, 16, 3, 12, 30525935},
      {80, 16, 4, 8, 30859260},  {80, 16, 5, 5, 32293925}};
  const auto entries = ii::enumerate_search_space();
  std::size_t matched = 0;
  for (const auto& [c1, cp, l1, l3, params] : want) {
    for (const auto& e : entries) {
      if (e.stack.c1 == c1 && e.stack.cprime == cp && e.stack.l1() == l1) {
        EXPECT_EQ(e.stack.l3(), l3) << c1 << "," << cp << "," << l1;
        EXPECT_EQ(e.params, params) << c1 << "," << cp << "," << l1;
        ++matched;
      }
    }
  }
  EXPECT_EQ(matched, want.size());
}
