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

#include "internimage/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "internimage/errors.hpp"
#include "internimage/random.hpp"

namespace internimage {

const std::vector<AblationRow>& ablation_rows() {
  static const std::vector<AblationRow> rows = {
      {"unshared", false, true, Normalization::kSoftmax},
      {"single-group", true, false, Normalization::kSoftmax},
      {"sigmoid", true, true, Normalization::kSigmoid},
      {"dcnv3", true, true, Normalization::kSoftmax},
  };
  return rows;
}

const AblationRow* find_ablation_row(std::string_view name) {
  for (const auto& r : ablation_rows()) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

DcnConfig apply_row(DcnConfig cfg, const AblationRow& row) {
  cfg.shared_weights = row.shared_weights;
  cfg.multi_group = row.multi_group;
  cfg.normalization = row.normalization;
  return cfg;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

double central_difference(const std::function<double()>& loss, double& param, double step) {
  const double orig = param;
  param = orig + step;
  const double plus = loss();
  param = orig - step;
  const double minus = loss();
  param = orig;
  return (plus - minus) / (2.0 * step);
}

double GradCheckReport::max_error() const {
  double m = 0;
  for (const auto& c : classes) m = std::max(m, c.max_rel_error);
  return m;
}

const ParamClassResult* GradCheckReport::worst() const {
  const ParamClassResult* w = nullptr;
  for (const auto& c : classes) {
    if (w == nullptr || c.max_rel_error > w->max_rel_error) w = &c;
  }
  return w;
}

namespace {

// Weighted output sum; long double keeps the reduction from adding
// round-off on top of the finite-difference noise.
double weighted_sum(const Tensor4& y, const Tensor4& r) {
  long double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) s += static_cast<long double>(y[i]) * r[i];
  return static_cast<double>(s);
}

std::vector<std::size_t> probe_indices(std::size_t size, int max_probes, Rng& rng) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), 0);
  if (max_probes <= 0 || static_cast<std::size_t>(max_probes) >= size) return idx;
  // Partial Fisher-Yates with the project RNG for reproducibility.
  for (int i = 0; i < max_probes; ++i) {
    const int j = rng.uniform_int(i, static_cast<int>(size) - 1);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(max_probes);
  std::sort(idx.begin(), idx.end());
  return idx;
}

ParamClassResult check_tensor(const std::string& name, std::vector<double>& data,
                              const std::vector<double>& analytic,
                              const std::vector<std::size_t>& indices,
                              const std::function<double()>& loss, const GradCheckOptions& opt) {
  ParamClassResult res;
  res.name = name;
  for (std::size_t i : indices) {
    const double numeric = central_difference(loss, data[i], opt.step);
    const double err = relative_error(analytic[i], numeric, opt.floor);
    ++res.probes;
    if (res.probes == 1 || err > res.max_rel_error) {
      res.max_rel_error = err;
      res.worst_index = i;
      res.analytic_at_worst = analytic[i];
      res.numeric_at_worst = numeric;
    }
  }
  return res;
}

}  // namespace

GradCheckReport gradcheck_dcnv3(const AblationRow& row, const GradCheckOptions& opt,
                                Shape4 shape, int groups) {
  Rng rng(opt.seed);
  DcnConfig cfg;
  cfg.channels = shape.c;
  cfg.groups = groups;
  cfg = apply_row(cfg, row);
  cfg.validate();

  Tensor4 x = rng.uniform_tensor(shape, -1.0, 1.0);
  const int ho = cfg.out_size(shape.h);
  const int wo = cfg.out_size(shape.w);
  SamplingField field = SamplingField::zeros(shape.n, cfg, ho, wo);
  rng.fill_uniform(field.offsets.vec(), 0.1, 0.4);
  rng.fill_uniform(field.mask_logits.vec(), -1.0, 1.0);
  DcnWeights w = DcnWeights::zeros(cfg);
  visit_params(w, "", [&](const std::string&, std::vector<double>& d, const Dims&) {
    rng.fill_uniform(d, -0.5, 0.5);
  });
  const Tensor4 r = rng.uniform_tensor(Shape4{shape.n, shape.c, ho, wo}, -1.0, 1.0);

  auto loss = [&] { return weighted_sum(dcnv3_forward(x, field, w, cfg), r); };
  const DcnGrads g = dcnv3_backward(r, x, field, w, cfg);

  GradCheckReport rep{"dcnv3", row.name, kOpTolerance, {}};
  GradCheckOptions all = opt;
  all.max_probes_per_tensor = 0;
  auto every = [&](std::size_t n) { return probe_indices(n, 0, rng); };
  rep.classes.push_back(check_tensor("input", x.vec(), g.dx.vec(), every(x.size()), loss, all));
  rep.classes.push_back(check_tensor("offsets", field.offsets.vec(), g.dfield.offsets.vec(),
                                     every(field.offsets.size()), loss, all));
  rep.classes.push_back(check_tensor("mask_logits", field.mask_logits.vec(),
                                     g.dfield.mask_logits.vec(),
                                     every(field.mask_logits.size()), loss, all));
  std::vector<std::pair<std::string, std::vector<double>*>> params;
  visit_params(w, "proj", [&](const std::string& n, std::vector<double>& d, const Dims&) {
    params.emplace_back(n, &d);
  });
  std::vector<const std::vector<double>*> grads;
  visit_params(g.dw, "proj", [&](const std::string&, const std::vector<double>& d, const Dims&) {
    grads.push_back(&d);
  });
  for (std::size_t i = 0; i < params.size(); ++i) {
    rep.classes.push_back(check_tensor(params[i].first, *params[i].second, *grads[i],
                                       every(params[i].second->size()), loss, all));
  }
  return rep;
}

void randomize_predictor(BlockParams& b, Rng& rng) {
  rng.fill_uniform(b.predictor.depthwise.kernel, -0.3, 0.3);
  rng.fill_uniform(b.predictor.depthwise.bias, -0.1, 0.1);
  rng.fill_uniform(b.predictor.linear.matrix, -0.02, 0.02);
  const int kg = b.dcn_cfg.points() * b.dcn_cfg.effective_groups();
  for (int i = 0; i < 3 * kg; ++i) {
    b.predictor.linear.bias[i] = i < 2 * kg ? rng.uniform(0.1, 0.4) : rng.uniform(-1.0, 1.0);
  }
}

void randomize_predictors(Model& m, Rng& rng) {
  for (auto& stage : m.stages) {
    for (auto& b : stage) randomize_predictor(b, rng);
  }
}

GradCheckReport gradcheck_block(const AblationRow& row, const GradCheckOptions& opt,
                                Shape4 shape, int groups, bool layer_scale) {
  Rng rng(opt.seed);
  BlockOptions bo;
  bo.channels = shape.c;
  bo.groups = groups;
  bo.layer_scale = layer_scale;
  bo.shared_weights = row.shared_weights;
  bo.multi_group = row.multi_group;
  bo.normalization = row.normalization;
  BlockParams p = make_block(bo);
  init_block(p, rng);
  randomize_predictor(p, rng);
  rng.fill_uniform(p.ln1.gamma, 0.5, 1.5);
  rng.fill_uniform(p.ln1.beta, -0.2, 0.2);
  rng.fill_uniform(p.ln2.gamma, 0.5, 1.5);
  rng.fill_uniform(p.ln2.beta, -0.2, 0.2);
  if (layer_scale) {
    rng.fill_uniform(p.scale1, 0.2, 1.0);
    rng.fill_uniform(p.scale2, 0.2, 1.0);
  }
  Tensor4 x = rng.uniform_tensor(shape, -1.0, 1.0);
  const Tensor4 r = rng.uniform_tensor(shape, -1.0, 1.0);

  BlockCache cache;
  basic_block(x, p, &cache);
  const BlockGrads g = basic_block_backward(cache, p, r);
  auto loss = [&] { return weighted_sum(basic_block(x, p), r); };

  GradCheckReport rep{"block", row.name + (layer_scale ? "+layer-scale" : ""), kBlockTolerance, {}};
  rep.classes.push_back(check_tensor("input", x.vec(), g.dx.vec(),
                                     probe_indices(x.size(), opt.max_probes_per_tensor, rng),
                                     loss, opt));
  std::vector<std::pair<std::string, std::vector<double>*>> params;
  visit_params(p, "block", [&](const std::string& n, std::vector<double>& d, const Dims&) {
    params.emplace_back(n, &d);
  });
  std::vector<const std::vector<double>*> grads;
  visit_params(g.dp, "block", [&](const std::string&, const std::vector<double>& d, const Dims&) {
    grads.push_back(&d);
  });
  for (std::size_t i = 0; i < params.size(); ++i) {
    rep.classes.push_back(check_tensor(
        params[i].first, *params[i].second, *grads[i],
        probe_indices(params[i].second->size(), opt.max_probes_per_tensor, rng), loss, opt));
  }
  return rep;
}

GradCheckReport gradcheck_model(const AblationRow& row, const GradCheckOptions& opt, int probes) {
  Rng rng(opt.seed);
  ModelConfig cfg;
  cfg.name = "tiny";
  cfg.stack = StackConfig::from(16, 16, 1, 1);
  cfg.num_classes = 10;
  cfg.shared_weights = row.shared_weights;
  cfg.multi_group = row.multi_group;
  cfg.normalization = row.normalization;
  Model m = build_model(cfg, opt.seed);
  randomize_predictors(m, rng);

  Tensor4 x = rng.uniform_tensor(Shape4{1, 3, 32, 32}, -1.0, 1.0);
  const Tensor4 r = rng.uniform_tensor(Shape4{1, cfg.num_classes, 1, 1}, -1.0, 1.0);

  ModelCache cache;
  model_forward_to(m, x, Tap::kLogits, &cache);
  const ModelGrads g = model_backward(m, cache, r);
  auto loss = [&] { return weighted_sum(model_forward_to(m, x, Tap::kLogits), r); };

  std::vector<std::pair<std::string, std::vector<double>*>> params;
  visit_params(m, "", [&](const std::string& n, std::vector<double>& d, const Dims&) {
    params.emplace_back(n, &d);
  });
  std::vector<const std::vector<double>*> grads;
  visit_params(g.dmodel, "", [&](const std::string&, const std::vector<double>& d, const Dims&) {
    grads.push_back(&d);
  });

  GradCheckReport rep{"model", row.name, kModelTolerance, {}};
  ParamClassResult pr{"parameters"};
  for (int i = 0; i < probes; ++i) {
    const int t = rng.uniform_int(0, static_cast<int>(params.size()) - 1);
    const int k = rng.uniform_int(0, static_cast<int>(params[t].second->size()) - 1);
    auto one = check_tensor(params[t].first, *params[t].second, *grads[t],
                            {static_cast<std::size_t>(k)}, loss, opt);
    ++pr.probes;
    if (one.max_rel_error >= pr.max_rel_error) {
      pr.max_rel_error = one.max_rel_error;
      pr.worst_index = one.worst_index;
      pr.analytic_at_worst = one.analytic_at_worst;
      pr.numeric_at_worst = one.numeric_at_worst;
      pr.name = "parameters (worst: " + params[t].first + ")";
    }
  }
  rep.classes.push_back(pr);
  rep.classes.push_back(
      check_tensor("input", x.vec(), g.dx.vec(), probe_indices(x.size(), probes, rng), loss, opt));
  return rep;
}

}  // namespace internimage
