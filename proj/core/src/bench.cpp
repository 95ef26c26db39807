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

#include "internimage/bench.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <sstream>

#include "internimage/dcnv3.hpp"
#include "internimage/random.hpp"

namespace internimage {

BenchResult time_op(const std::string& op, Shape4 shape, int reps, const std::function<void()>& fn,
                    int warmups) {
  BenchResult r;
  r.op = op;
  r.shape = shape;
  r.warmups = std::max(warmups, kMinWarmups);
  r.reps = std::max(reps, kMinReps);
  for (int i = 0; i < r.warmups; ++i) fn();
  std::vector<double> times;
  times.reserve(r.reps);
  for (int i = 0; i < r.reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  r.min_s = times.front();
  const std::size_t mid = times.size() / 2;
  r.median_s = times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
  r.mean_s = std::accumulate(times.begin(), times.end(), 0.0) / times.size();
  r.images_per_s = r.median_s > 0 ? shape.n / r.median_s : 0.0;
  return r;
}

std::vector<BenchResult> bench_dcnv3(Shape4 shape, int groups, int reps, std::uint64_t seed) {
  DcnConfig cfg;
  cfg.channels = shape.c;
  cfg.groups = groups;
  cfg.validate();
  Rng rng(seed);
  const Tensor4 x = rng.uniform_tensor(shape, -1.0, 1.0);
  SamplingField field = SamplingField::zeros(shape.n, cfg, shape.h, shape.w);
  rng.fill_uniform(field.offsets.vec(), -1.5, 1.5);
  rng.fill_uniform(field.mask_logits.vec(), -2.0, 2.0);
  DcnWeights w = DcnWeights::zeros(cfg);
  visit_params(w, "", [&](const std::string&, std::vector<double>& d, const Dims&) {
    rng.fill_uniform(d, -0.1, 0.1);
  });

  BenchResult opt = time_op("dcnv3", shape, reps, [&] { (void)dcnv3_forward(x, field, w, cfg); });
  BenchResult naive =
      time_op("dcnv3_naive", shape, reps, [&] { (void)dcnv3_naive_forward(x, field, w, cfg); });
  opt.speedup = opt.median_s > 0 ? naive.median_s / opt.median_s : 0.0;
  naive.speedup = 1.0;
  return {opt, naive};
}

BenchResult bench_model(const ModelConfig& cfg, Shape4 shape, int reps, std::uint64_t seed) {
  const Model m = build_model(cfg, seed);
  Rng rng(seed + 1);
  const Tensor4 x = rng.uniform_tensor(shape, 0.0, 1.0);
  return time_op("model_" + cfg.name, shape, reps, [&] { (void)model_forward(m, x); });
}

std::string bench_csv_header() {
  return "op,n,c,h,w,warmups,reps,min_s,median_s,mean_s,images_per_s,speedup";
}

std::string bench_csv_row(const BenchResult& r) {
  std::ostringstream os;
  os.precision(9);
  os << r.op << "," << r.shape.n << "," << r.shape.c << "," << r.shape.h << "," << r.shape.w << ","
     << r.warmups << "," << r.reps << "," << r.min_s << "," << r.median_s << "," << r.mean_s << ","
     << r.images_per_s << "," << r.speedup;
  return os.str();
}

}  // namespace internimage
