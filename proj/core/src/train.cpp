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

#include "internimage/train.hpp"

#include <cmath>
#include <sstream>

#include "internimage/errors.hpp"
#include "internimage/random.hpp"

namespace internimage {

ToyDataset make_toy_dataset(int per_class, std::uint64_t seed) {
  if (per_class < 1) throw ConfigError("toy dataset: per_class must be >= 1");
  constexpr int S = kToyImageSize;
  const int n = per_class * kToyClasses;
  Rng rng(seed);
  ToyDataset ds;
  ds.images = rng.uniform_tensor(Shape4{n, 3, S, S}, 0.0, 0.3);
  ds.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const int cls = i % kToyClasses;
    ds.labels[i] = cls;
    // Colour from the class's bit pattern; position on a ring.
    const double rgb[3] = {(cls & 1) ? 1.0 : 0.2, (cls & 2) ? 1.0 : 0.2,
                           (cls & 4) ? 1.0 : (cls >= 8 ? 0.6 : 0.2)};
    const double angle = 2.0 * M_PI * cls / kToyClasses;
    const double cy = S / 2.0 + 9.0 * std::sin(angle) + rng.uniform(-1.5, 1.5);
    const double cx = S / 2.0 + 9.0 * std::cos(angle) + rng.uniform(-1.5, 1.5);
    const double sigma = 3.5;
    for (int y = 0; y < S; ++y) {
      for (int x = 0; x < S; ++x) {
        const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
        const double blob = std::exp(-d2 / (2 * sigma * sigma));
        for (int c = 0; c < 3; ++c) ds.images.at(i, c, y, x) += rgb[c] * blob;
      }
    }
  }
  return ds;
}

ModelConfig toy_config() {
  ModelConfig cfg;
  cfg.name = "toy";
  cfg.stack = StackConfig::from(16, 8, 1, 1);
  cfg.num_classes = kToyClasses;
  cfg.seed = 7;
  return cfg;
}

CrossEntropy cross_entropy(const Tensor4& logits, const std::vector<int>& labels) {
  const int n = logits.n();
  const int k = logits.c();
  if (logits.h() != 1 || logits.w() != 1 || static_cast<int>(labels.size()) != n) {
    throw ShapeError("cross_entropy: logits " + logits.shape().str() + " vs " +
                     std::to_string(labels.size()) + " labels");
  }
  CrossEntropy out;
  out.dlogits = Tensor4(logits.shape());
  long double total = 0;
  std::vector<double> row(k);
  for (int i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= k) throw InputError("cross_entropy: label out of range");
    double mx = logits.at(i, 0, 0, 0);
    for (int c = 1; c < k; ++c) mx = std::max(mx, logits.at(i, c, 0, 0));
    double z = 0;
    for (int c = 0; c < k; ++c) z += std::exp(logits.at(i, c, 0, 0) - mx);
    const double lse = mx + std::log(z);
    total += lse - logits.at(i, labels[i], 0, 0);
    for (int c = 0; c < k; ++c) {
      const double p = std::exp(logits.at(i, c, 0, 0) - lse);
      out.dlogits.at(i, c, 0, 0) = (p - (c == labels[i] ? 1.0 : 0.0)) / n;
    }
  }
  out.loss = static_cast<double>(total / n);
  return out;
}

TrainResult train_toy(const ModelConfig& cfg, const TrainOptions& opt) {
  const ParamReport report = count_params(cfg, false);
  if (report.closed_form_total > kToyParamLimit) {
    throw ConfigError("train-toy: refusing config with " + std::to_string(report.closed_form_total) +
                      " parameters (limit " + std::to_string(kToyParamLimit) + ")");
  }
  if (cfg.num_classes != kToyClasses) {
    throw ConfigError("train-toy: num_classes must be " + std::to_string(kToyClasses));
  }
  if (cfg.in_channels != 3) throw ConfigError("train-toy: in_channels must be 3");
  if (opt.steps < 0) throw ConfigError("train-toy: steps must be >= 0");

  Model model = build_model(cfg, opt.seed);
  const ToyDataset data = make_toy_dataset(opt.per_class, opt.seed + 1);

  TrainResult result;
  result.params = report.closed_form_total;
  result.losses.reserve(opt.steps + 1);
  for (int step = 0;; ++step) {
    ModelCache cache;
    const Tensor4 logits = model_forward_to(model, data.images, Tap::kLogits, &cache);
    const CrossEntropy ce = cross_entropy(logits, data.labels);
    result.losses.push_back(ce.loss);
    if (step == opt.steps) break;

    ModelGrads g = model_backward(model, cache, ce.dlogits);
    std::vector<const std::vector<double>*> grads;
    visit_params(g.dmodel, "", [&](const std::string&, const std::vector<double>& d, const Dims&) {
      grads.push_back(&d);
    });
    std::size_t idx = 0;
    visit_params(model, "", [&](const std::string&, std::vector<double>& w, const Dims&) {
      const std::vector<double>& d = *grads[idx++];
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= opt.lr * d[i];
    });
  }
  return result;
}

std::string loss_curve_csv(const std::vector<double>& losses) {
  std::ostringstream os;
  os.precision(17);
  os << "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) os << i << "," << losses[i] << "\n";
  return os.str();
}

}  // namespace internimage
