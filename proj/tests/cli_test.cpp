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

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "internimage/erf.hpp"
#include "internimage/model.hpp"
#include "internimage/serialize.hpp"
#include "internimage/train.hpp"
#include "internimage_cli/cli.hpp"

namespace ii = internimage;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "internimage");
  std::ostringstream out, err;
  Outcome r;
  r.code = ii::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "internimage_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

TEST(ConfigCommand, VariantTWritesRegistryStack) {
  const auto path = scratch("t.cfg");
  const Outcome r = invoke({"config", "--variant", "T", "-o", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "valid: yes"));
  const ii::ModelConfig cfg = ii::load_config(path.string());
  EXPECT_EQ(cfg.stack, ii::StackConfig::from(64, 16, 4, 18));
  const std::string text = slurp(path);
  for (const char* kv : {"c1=64", "cprime=16", "l1=4", "l3=18"}) {
    EXPECT_TRUE(contains(text, kv)) << kv;
  }
}

TEST(ConfigCommand, DepthOrderingViolationExitsNonzero) {
  const Outcome r = invoke({"config", "--c1", "64", "--cprime", "16", "--l1", "5", "--l3", "4"});
  EXPECT_NE(r.code, 0);
  EXPECT_TRUE(contains(r.err, "L1 <= L3 violated")) << r.err;
}

TEST(ConfigCommand, UnknownVariantExitsNonzero) {
  const Outcome r = invoke({"config", "--variant", "Q"});
  EXPECT_NE(r.code, 0);
  EXPECT_TRUE(contains(r.err, "unknown variant"));
}

TEST(ConfigCommand, ScaleFromTPhiOneMatchesS) {
  const Outcome r = invoke({"config", "--scale-from", "T", "--phi", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "snapped: c1=80 depth=33 (l1=4, l3=21)")) << r.out;
}

TEST(ParamsCommand, VariantsWithinTolerance) {
  const Outcome t = invoke({"params", "--variant", "T"});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_TRUE(contains(t.out, "30M target")) << t.out;
  EXPECT_TRUE(contains(t.out, "within 15%"));
  EXPECT_TRUE(contains(t.out, "exact match"));

  const Outcome h = invoke({"params", "--variant", "H", "--no-enumerate"});
  ASSERT_EQ(h.code, 0) << h.err;
  EXPECT_TRUE(contains(h.out, "1.08B target")) << h.out;
  EXPECT_TRUE(contains(h.out, "within 15%"));
}

TEST(ParamsCommand, ToyConfigEnumerationMatches) {
  const auto path = scratch("toy.cfg");
  ASSERT_EQ(invoke({"config", "--c1", "16", "--cprime", "16", "--l1", "1", "--l3", "1",
                 "--num-classes", "10", "-o", path.string()})
                .code,
            0);
  const Outcome r = invoke({"params", "--config", path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "closed-form total: 337935")) << r.out;
  EXPECT_TRUE(contains(r.out, "exact match"));
}

TEST(SearchCommand, CsvHasThirtyRowsAndReportsOutliers) {
  const auto path = scratch("search.csv");
  const Outcome r = invoke({"search", "-o", path.string()});
  // Ten combinations are invalid stacks and one valid one is over budget.
  EXPECT_EQ(r.code, 1);
  const auto rows = parse_csv(slurp(path));
  ASSERT_EQ(rows.size(), 31u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i].size(), rows[0].size());
  EXPECT_TRUE(contains(r.out, "configs: 30, outside budget tolerance: 11")) << r.out;
}

TEST(GradcheckCommand, SingleRowPasses) {
  const Outcome r = invoke({"gradcheck", "--rows", "dcnv3", "--targets", "dcnv3,block"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "gradcheck passed"));
  EXPECT_TRUE(contains(r.out, "max_rel_error="));
}

TEST(GradcheckCommand, LargeStepWarns) {
  const Outcome r = invoke({"gradcheck", "--step", "1e-2", "--rows", "dcnv3", "--targets", "dcnv3"});
  EXPECT_TRUE(contains(r.err, "truncation error")) << r.err;
  if (r.code != 0) {
    EXPECT_TRUE(contains(r.err, "worst offender"));
  }
}

TEST(GradcheckCommand, UnknownRowRejected) {
  EXPECT_EQ(invoke({"gradcheck", "--rows", "nonsense"}).code, 2);
}

TEST(OracleCommand, ReproducibleAndWithinUlps) {
  const Outcome a = invoke({"oracle", "--seed", "3", "--trials", "10"});
  const Outcome b = invoke({"oracle", "--seed", "3", "--trials", "10"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_TRUE(contains(a.out, "PASS"));
}

TEST(OracleCommand, Dcnv2Toggle) {
  const Outcome r = invoke({"oracle", "--trials", "10", "--toggles", "dcnv2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "toggles=dcnv2"));
}

TEST(BenchCommand, CsvRowsWithThroughputAndSpeedup) {
  const auto path = scratch("bench.csv");
  const Outcome r = invoke({"bench", "--op", "dcnv3", "--shape", "1,64,28,28", "--groups", "4", "-o",
                     path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(slurp(path));
  ASSERT_EQ(rows.size(), 3u);
  const auto& header = rows[0];
  ASSERT_EQ(header.back(), "speedup");
  const auto col = [&](const std::string& name) {
    return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) -
                                    header.begin());
  };
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ASSERT_EQ(rows[i].size(), header.size());
    EXPECT_GT(std::stod(rows[i][col("images_per_s")]), 0);
    EXPECT_GE(std::stoi(rows[i][col("reps")]), 5);
    EXPECT_GE(std::stoi(rows[i][col("warmups")]), 2);
  }
  EXPECT_EQ(rows[1][col("op")], "dcnv3");
  EXPECT_GE(std::stod(rows[1][col("speedup")]), 1.0);
}

TEST(BenchCommand, MalformedShapeRejected) {
  EXPECT_EQ(invoke({"bench", "--shape", "1,64,56"}).code, 2);
}

class ErfCommand : public ::testing::TestWithParam<std::string> {};

TEST_P(ErfCommand, SupportInsideStaticReceptiveField) {
  const std::string stage = GetParam();
  const auto prefix = scratch("erf_" + stage);
  const Outcome r = invoke({"erf", "--toy", "--size", "64", "--pixel", "30,30", "--stage", stage, "-o",
                     prefix.string()});
  ASSERT_EQ(r.code, 0) << r.err;

  const ii::ModelConfig cfg = ii::toy_config();
  const ii::Tap tap = stage == "stem" ? ii::Tap::kStem : static_cast<ii::Tap>(std::stoi(stage));
  const auto layers = ii::static_rf_layers(cfg, tap);

  const auto rows = parse_csv(slurp(prefix.string() + ".csv"));
  ASSERT_EQ(rows[0], (std::vector<std::string>{"y", "x", "value"}));
  ASSERT_EQ(rows.size(), 1u + 64 * 64);

  // The feature location is not printed in the CSV; recover it from stdout.
  const auto fpos = r.out.find("feature=(");
  ASSERT_NE(fpos, std::string::npos);
  int fy = 0, fx = 0;
  ASSERT_EQ(std::sscanf(r.out.c_str() + fpos, "feature=(%d,%d)", &fy, &fx), 2);
  const ii::PixelBox rf = ii::static_receptive_field(layers, fy, fx, 64, 64);

  int nonzero = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const int y = std::stoi(rows[i][0]);
    const int x = std::stoi(rows[i][1]);
    const double v = std::stod(rows[i][2]);
    EXPECT_GE(v, 0.0);
    if (v > 0) {
      ++nonzero;
      EXPECT_TRUE(rf.contains(y, x)) << "(" << y << "," << x << ") outside static RF";
    }
  }
  EXPECT_GT(nonzero, 0);
  EXPECT_TRUE(rf.contains(30, 30));

  const std::string pgm = slurp(prefix.string() + ".pgm");
  EXPECT_EQ(pgm.rfind("P5\n64 64\n255\n", 0), 0u);
  EXPECT_EQ(pgm.size(), std::string("P5\n64 64\n255\n").size() + 64 * 64);
}

INSTANTIATE_TEST_SUITE_P(Stages, ErfCommand, ::testing::Values("stem", "1", "2"));

TEST(ErfCommandErrors, OutOfBoundsPixel) {
  const Outcome r = invoke({"erf", "--toy", "--size", "32", "--pixel", "32,0", "-o",
                     scratch("erf_oob").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST(ErfCommandErrors, ReadsNetpbmInput) {
  const auto img = scratch("in.pgm");
  {
    std::ofstream f(img, std::ios::binary);
    f << "P5\n# comment\n32 32\n255\n";
    for (int i = 0; i < 32 * 32; ++i) f.put(static_cast<char>(i % 251));
  }
  const Outcome r = invoke({"erf", "--toy", "--input", img.string(), "--pixel", "5,7", "--stage", "stem",
                     "-o", scratch("erf_in").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(contains(r.out, "map=32x32"));
}

TEST(TrainToyCommand, ZeroLearningRateKeepsLossConstant) {
  const Outcome r = invoke({"train-toy", "--steps", "3", "--lr", "0", "--per-class", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = parse_csv(r.out.substr(0, r.out.find("params:")));
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 2; i < rows.size(); ++i) EXPECT_EQ(rows[i][1], rows[1][1]);
}

TEST(TrainToyCommand, SameSeedSameCurveAndLossDrops) {
  const std::vector<std::string> args{"train-toy", "--steps", "15", "--per-class", "1",
                                      "--seed", "4"};
  const Outcome a = invoke(args);
  const Outcome b = invoke(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto rows = parse_csv(a.out.substr(0, a.out.find("params:")));
  ASSERT_EQ(rows.size(), 17u);
  EXPECT_LT(std::stod(rows.back()[1]), std::stod(rows[1][1]));
}

TEST(TrainToyCommand, RefusesLargeConfig) {
  const auto path = scratch("big.cfg");
  ASSERT_EQ(invoke({"config", "--variant", "T", "-o", path.string()}).code, 0);
  const Outcome r = invoke({"train-toy", "--config", path.string(), "--steps", "1"});
  EXPECT_NE(r.code, 0);
  EXPECT_TRUE(contains(r.err, "2000000") || contains(r.err, "limit")) << r.err;
}

TEST(Cli, NoSubcommandIsBadInput) { EXPECT_EQ(invoke({}).code, 2); }
