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

#include <benchmark/benchmark.h>

#include "internimage/blocks.hpp"
#include "internimage/dcnv3.hpp"
#include "internimage/model.hpp"
#include "internimage/random.hpp"

namespace ii = internimage;

namespace {

struct DcnFixture {
  ii::DcnConfig cfg;
  ii::Tensor4 x;
  ii::SamplingField field;
  ii::DcnWeights w;

  DcnFixture(int channels, int size, int groups) {
    cfg.channels = channels;
    cfg.groups = groups;
    ii::Rng rng(11);
    x = rng.uniform_tensor(ii::Shape4{1, channels, size, size}, -1, 1);
    field = ii::SamplingField::zeros(1, cfg, size, size);
    rng.fill_uniform(field.offsets.vec(), -1.5, 1.5);
    rng.fill_uniform(field.mask_logits.vec(), -2, 2);
    w = ii::DcnWeights::zeros(cfg);
    rng.fill_uniform(w.proj.matrix, -0.1, 0.1);
  }
};

void BM_Dcnv3Optimized(benchmark::State& state) {
  DcnFixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(ii::dcnv3_forward(f.x, f.field, f.w, f.cfg));
  state.SetItemsProcessed(state.iterations());
}

void BM_Dcnv3Naive(benchmark::State& state) {
  DcnFixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(ii::dcnv3_naive_forward(f.x, f.field, f.w, f.cfg));
  state.SetItemsProcessed(state.iterations());
}

void BM_Dcnv3Backward(benchmark::State& state) {
  DcnFixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 4);
  const ii::Tensor4 dy(f.x.shape(), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(ii::dcnv3_backward(dy, f.x, f.field, f.w, f.cfg));
}

void BM_BasicBlock(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int s = static_cast<int>(state.range(1));
  ii::BlockOptions opt;
  opt.channels = c;
  opt.groups = c / 16;
  ii::BlockParams p = ii::make_block(opt);
  ii::Rng rng(5);
  ii::init_block(p, rng);
  const ii::Tensor4 x = rng.uniform_tensor(ii::Shape4{1, c, s, s}, -1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(ii::basic_block(x, p, nullptr));
}

void BM_ModelForwardT(benchmark::State& state) {
  const int s = static_cast<int>(state.range(0));
  const ii::Model m = ii::build_model(ii::config_for_variant(*ii::find_variant("T")), 0);
  ii::Rng rng(3);
  const ii::Tensor4 x = rng.uniform_tensor(ii::Shape4{1, 3, s, s}, 0, 1);
  for (auto _ : state) benchmark::DoNotOptimize(ii::model_forward(m, x));
  state.SetItemsProcessed(state.iterations());
}

}  // namespace

BENCHMARK(BM_Dcnv3Optimized)->Args({64, 56})->Args({128, 28})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dcnv3Naive)->Args({64, 56})->Args({128, 28})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dcnv3Backward)->Args({64, 28})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BasicBlock)->Args({64, 28})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ModelForwardT)->Arg(64)->Arg(224)->Unit(benchmark::kMillisecond)->Iterations(3);
BENCHMARK_MAIN();
