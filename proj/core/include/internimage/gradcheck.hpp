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

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "internimage/blocks.hpp"
#include "internimage/dcnv3.hpp"
#include "internimage/model.hpp"

namespace internimage {

/// One row of the operator ablation: which of the three DCNv3 changes
/// (shared projection, multiple groups, softmax masks) are enabled.
struct AblationRow {
  std::string name;
  bool shared_weights = true;
  bool multi_group = true;
  Normalization normalization = Normalization::kSoftmax;
};

/// The four rows in ablation order: "unshared", "single-group",
/// "sigmoid", "dcnv3".
const std::vector<AblationRow>& ablation_rows();
const AblationRow* find_ablation_row(std::string_view name);
DcnConfig apply_row(DcnConfig cfg, const AblationRow& row);

inline constexpr double kOpTolerance = 1e-5;
inline constexpr double kBlockTolerance = 1e-5;
inline constexpr double kModelTolerance = 1e-4;

/// |a - n| / max(|a|, |n|, floor). The floor keeps near-zero gradients from
/// turning finite-difference round-off into large relative errors.
double relative_error(double analytic, double numeric, double floor);

/// (loss(p + h) - loss(p - h)) / 2h; restores p exactly.
double central_difference(const std::function<double()>& loss, double& param, double step);

struct GradCheckOptions {
  double step = 1e-6;
  double floor = 1e-3;
  std::uint64_t seed = 0;
  int max_probes_per_tensor = 48;  // <= 0 probes every entry
};

struct ParamClassResult {
  std::string name;
  int probes = 0;
  double max_rel_error = 0;
  double analytic_at_worst = 0;
  double numeric_at_worst = 0;
  std::size_t worst_index = 0;
};

struct GradCheckReport {
  std::string target;  // "dcnv3", "block" or "model"
  std::string row;
  double tolerance = 0;
  std::vector<ParamClassResult> classes;

  double max_error() const;
  const ParamClassResult* worst() const;
  bool passed() const { return max_error() <= tolerance; }
};

/// Random operator instance, offsets drawn from U(0.1, 0.4) so no sample
/// sits on a bilinear kink. Every entry is probed.
GradCheckReport gradcheck_dcnv3(const AblationRow& row, const GradCheckOptions& opt,
                                Shape4 shape = {2, 16, 7, 7}, int groups = 2);

/// Random basic block with a non-degenerate predictor.
GradCheckReport gradcheck_block(const AblationRow& row, const GradCheckOptions& opt,
                                Shape4 shape = {1, 16, 7, 7}, int groups = 4,
                                bool layer_scale = false);

/// Tiny model (C1 = 16, C' = 16, depths 1-1-1-1, 32x32 input, 10 classes),
/// `probes` randomly chosen parameters plus `probes` input entries.
GradCheckReport gradcheck_model(const AblationRow& row, const GradCheckOptions& opt,
                                int probes = 20);

/// Randomizes every block predictor so offsets are non-zero (biases in
/// U(0.1, 0.4)) while staying small.
void randomize_predictors(Model& m, Rng& rng);
void randomize_predictor(BlockParams& b, Rng& rng);

}  // namespace internimage
