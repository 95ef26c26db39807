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

#include "internimage/blocks.hpp"
#include "internimage/errors.hpp"
#include "internimage/gradcheck.hpp"
#include "test_support.hpp"

namespace ii = internimage;
using ii::Shape4;
using ii::Tensor4;
using ii::testing::max_fd_error;
using ii::testing::weighted_sum;

namespace {

ii::BlockOptions options(int c, int g, bool layer_scale = false) {
  ii::BlockOptions opt;
  opt.channels = c;
  opt.groups = g;
  opt.layer_scale = layer_scale;
  return opt;
}

}  // namespace

TEST(Predictor, ZeroInitGivesZeroField) {
  ii::Rng rng(1);
  ii::BlockParams p = ii::make_block(options(16, 4));
  ii::init_block(p, rng);
  const Tensor4 x = rng.uniform_tensor({1, 16, 6, 6}, -1, 1);
  const auto field = ii::predict_field(x, p.predictor, p.dcn_cfg);
  EXPECT_EQ(field.offsets.c() + field.mask_logits.c(), 3 * 9 * 4);
  for (double v : field.offsets.vec()) EXPECT_EQ(v, 0.0);
  for (double v : field.mask_logits.vec()) EXPECT_EQ(v, 0.0);
}

TEST(Predictor, ConstantInputGivesConstantInteriorField) {
  ii::Rng rng(2);
  ii::BlockParams p = ii::make_block(options(8, 2));
  ii::randomize_predictor(p, rng);
  rng.fill_uniform(p.predictor.depthwise.kernel, -1, 1);
  const Tensor4 x(1, 8, 7, 7, 0.75);
  const auto field = ii::predict_field(x, p.predictor, p.dcn_cfg);
  for (const Tensor4* t : {&field.offsets, &field.mask_logits})
    for (int c = 0; c < t->c(); ++c)
      for (int i = 1; i < 6; ++i)
        for (int j = 1; j < 6; ++j) EXPECT_NEAR(t->at(0, c, i, j), t->at(0, c, 3, 3), 1e-14);
}

TEST(BasicBlock, DeadBranchesReduceToTwoNorms) {
  ii::Rng rng(3);
  const ii::BlockParams p = ii::make_block(options(16, 4));
  const Tensor4 x = rng.uniform_tensor({2, 16, 5, 5}, -1, 1);
  const Tensor4 expected = ii::layer_norm(ii::layer_norm(x, p.ln1), p.ln2);
  const Tensor4 z = ii::basic_block(x, p);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_NEAR(z[i], expected[i], 1e-14);
}

TEST(BasicBlock, FirstForwardUsesZeroOffsetsAndUniformMasks) {
  ii::Rng rng(4);
  ii::BlockParams p = ii::make_block(options(16, 4));
  ii::init_block(p, rng);
  ii::BlockCache cache;
  (void)ii::basic_block(rng.uniform_tensor({1, 16, 5, 5}, -1, 1), p, &cache);
  for (double v : cache.field.offsets.vec()) EXPECT_EQ(v, 0.0);
  const Tensor4 m = ii::modulation_scalars(cache.field, p.dcn_cfg);
  for (double v : m.vec()) EXPECT_DOUBLE_EQ(v, 1.0 / 9);
}

TEST(BasicBlock, PreservesShapeAcrossRandomConfigs) {
  ii::Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const int g = rng.uniform_int(1, 4);
    const int cp = rng.uniform_int(1, 4);
    auto opt = options(g * cp, g, rng.uniform_int(0, 1) == 1);
    opt.kernel = 2 * rng.uniform_int(0, 2) + 3;
    opt.ffn_ratio = rng.uniform_int(1, 4);
    ii::BlockParams p = ii::make_block(opt);
    ii::init_block(p, rng);
    ii::randomize_predictor(p, rng);
    const Shape4 s{rng.uniform_int(1, 2), opt.channels, rng.uniform_int(3, 8), rng.uniform_int(3, 8)};
    EXPECT_EQ(ii::basic_block(rng.uniform_tensor(s, -1, 1), p).shape(), s);
  }
}

TEST(BasicBlock, LayerScaleParameters) {
  const ii::BlockParams off = ii::make_block(options(8, 2, false));
  const ii::BlockParams on = ii::make_block(options(8, 2, true));
  EXPECT_FALSE(off.has_layer_scale());
  ASSERT_TRUE(on.has_layer_scale());
  for (double v : on.scale1) EXPECT_EQ(v, 1e-5);
  EXPECT_EQ(ii::enumerate_param_count(on) - ii::enumerate_param_count(off), 16);
}

class BlockGradRows : public ::testing::TestWithParam<std::string> {};

TEST_P(BlockGradRows, MatchesFiniteDifferences) {
  const ii::AblationRow* row = ii::find_ablation_row(GetParam());
  ASSERT_NE(row, nullptr);
  for (bool ls : {false, true}) {
    ii::GradCheckOptions opt;
    opt.seed = 31;
    const auto report = ii::gradcheck_block(*row, opt, Shape4{1, 16, 7, 7}, 4, ls);
    for (const auto& c : report.classes) EXPECT_LE(c.max_rel_error, 1e-5) << c.name << " ls=" << ls;
  }
}

INSTANTIATE_TEST_SUITE_P(AblationRows, BlockGradRows,
                         ::testing::Values("unshared", "single-group", "sigmoid", "dcnv3"),
                         [](const auto& info) {
                           std::string s = info.param;
                           std::replace(s.begin(), s.end(), '-', '_');
                           return s;
                         });

TEST(Stem, ReducesResolutionFourTimes) {
  ii::Rng rng(6);
  ii::StemParams p = ii::make_stem(3, 16);
  ii::init_stem(p, rng);
  EXPECT_EQ(ii::stem(Tensor4(1, 3, 224, 224), p).shape(), (Shape4{1, 16, 56, 56}));
  ii::StemParams p64 = ii::make_stem(3, 64);
  EXPECT_EQ(ii::stem(Tensor4(2, 3, 64, 64), p64).shape(), (Shape4{2, 64, 16, 16}));
  EXPECT_EQ(p64.conv1.out_c, 32);
}

TEST(Stem, ZeroWeightsGiveBeta) {
  ii::StemParams p = ii::make_stem(3, 8);
  for (int c = 0; c < 8; ++c) p.ln2.beta[c] = 0.1 * c;
  ii::Rng rng(7);
  const Tensor4 y = ii::stem(rng.uniform_tensor({1, 3, 16, 16}, -1, 1), p);
  for (int c = 0; c < 8; ++c)
    for (int i = 0; i < 16; ++i) EXPECT_EQ(y[y.index(0, c, 0, 0) + i], 0.1 * c);
}

TEST(Stem, OddWidthIsConfigError) { EXPECT_THROW(ii::make_stem(3, 15), ii::ConfigError); }

TEST(Stem, PullbackMatchesFiniteDifferences) {
  ii::Rng rng(8);
  ii::StemParams p = ii::make_stem(3, 8);
  ii::init_stem(p, rng);
  rng.fill_uniform(p.ln1.beta, -0.5, 0.5);
  Tensor4 x = rng.uniform_tensor({1, 3, 8, 8}, -1, 1);
  ii::StemCache cache;
  const Tensor4 y = ii::stem(x, p, &cache);
  const Tensor4 r = rng.uniform_tensor(y.shape(), -1, 1);
  const auto g = ii::stem_backward(cache, p, r);
  auto loss = [&] { return weighted_sum(r, ii::stem(x, p)); };
  EXPECT_LE(max_fd_error(x.vec(), g.dx.vec(), loss), 1e-6);
  EXPECT_LE(max_fd_error(p.conv1.kernel, g.dp.conv1.kernel, loss), 1e-6);
  EXPECT_LE(max_fd_error(p.ln1.gamma, g.dp.ln1.gamma, loss), 1e-6);
  EXPECT_LE(max_fd_error(p.conv2.bias, g.dp.conv2.bias, loss), 1e-6);
}

TEST(Downsample, HalvesAndDoubles) {
  const ii::DownsampleParams p = ii::make_downsample(4, 8);
  EXPECT_EQ(ii::downsample(Tensor4(1, 4, 56, 56), p).shape(), (Shape4{1, 8, 28, 28}));
  EXPECT_EQ(ii::downsample(Tensor4(1, 4, 7, 7), p).shape(), (Shape4{1, 8, 4, 4}));
}

TEST(Downsample, PullbackMatchesFiniteDifferences) {
  ii::Rng rng(9);
  ii::DownsampleParams p = ii::make_downsample(4, 8);
  ii::init_downsample(p, rng);
  Tensor4 x = rng.uniform_tensor({2, 4, 7, 7}, -1, 1);
  ii::DownsampleCache cache;
  const Tensor4 y = ii::downsample(x, p, &cache);
  const Tensor4 r = rng.uniform_tensor(y.shape(), -1, 1);
  const auto g = ii::downsample_backward(cache, p, r);
  auto loss = [&] { return weighted_sum(r, ii::downsample(x, p)); };
  EXPECT_LE(max_fd_error(x.vec(), g.dx.vec(), loss), 1e-6);
  EXPECT_LE(max_fd_error(p.conv.kernel, g.dp.conv.kernel, loss), 1e-6);
  EXPECT_LE(max_fd_error(p.ln.beta, g.dp.ln.beta, loss), 1e-6);
}

TEST(Head, ZeroWeightsGiveBias) {
  ii::HeadParams p = ii::make_head(4, 3);
  p.fc.bias = {1, -2, 0.5};
  ii::Rng rng(10);
  const Tensor4 logits = ii::head(rng.uniform_tensor({2, 4, 3, 3}, -1, 1), p);
  EXPECT_EQ(logits.shape(), (Shape4{2, 3, 1, 1}));
  for (int n = 0; n < 2; ++n) {
    EXPECT_EQ(logits.at(n, 0, 0, 0), 1);
    EXPECT_EQ(logits.at(n, 1, 0, 0), -2);
    EXPECT_EQ(logits.at(n, 2, 0, 0), 0.5);
  }
}

TEST(Head, ConstantFeatureUsesRowSums) {
  ii::Rng rng(11);
  ii::HeadParams p = ii::make_head(4, 3);
  ii::init_head(p, rng);
  rng.fill_uniform(p.fc.bias, -1, 1);
  const double v = 1.25;
  const Tensor4 logits = ii::head(Tensor4(1, 4, 2, 2, v), p);
  for (int j = 0; j < 3; ++j) {
    double s = 0;
    for (int i = 0; i < 4; ++i) s += p.fc.m(j, i);
    EXPECT_NEAR(logits.at(0, j, 0, 0), v * s + p.fc.bias[j], 1e-14);
  }
}

TEST(Head, PullbackMatchesFiniteDifferences) {
  ii::Rng rng(12);
  ii::HeadParams p = ii::make_head(4, 3);
  ii::init_head(p, rng);
  Tensor4 x = rng.uniform_tensor({2, 4, 3, 3}, -1, 1);
  const Tensor4 r = rng.uniform_tensor({2, 3, 1, 1}, -1, 1);
  const auto g = ii::head_backward(x, p, r);
  auto loss = [&] { return weighted_sum(r, ii::head(x, p)); };
  EXPECT_LE(max_fd_error(x.vec(), g.dx.vec(), loss), 1e-6);
  EXPECT_LE(max_fd_error(p.fc.matrix, g.dp.fc.matrix, loss), 1e-6);
}
