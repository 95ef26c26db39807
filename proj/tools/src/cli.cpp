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

#include "internimage_cli/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>

#include "internimage/bench.hpp"
#include "internimage/erf.hpp"
#include "internimage/errors.hpp"
#include "internimage/gradcheck.hpp"
#include "internimage/model.hpp"
#include "internimage/oracle.hpp"
#include "internimage/scaling.hpp"
#include "internimage/serialize.hpp"
#include "internimage/train.hpp"

namespace internimage::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitBadInput = 2;

std::string format_count(double v) {
  char buf[32];
  if (v >= 1e9) {
    std::snprintf(buf, sizeof buf, "%.2fB", v / 1e9);
  } else {
    std::snprintf(buf, sizeof buf, "%gM", v / 1e6);
  }
  return buf;
}

std::string format_percent(double frac) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.2f%%", 100.0 * frac);
  return buf;
}

std::vector<int> parse_int_list(const std::string& text, std::size_t expected, const char* what) {
  std::vector<int> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError(std::string(what) + ": not an integer: '" + item + "'");
    }
  }
  if (values.size() != expected) {
    throw InputError(std::string(what) + ": expected " + std::to_string(expected) +
                     " comma-separated integers, got '" + text + "'");
  }
  return values;
}

/// How a subcommand selects its model configuration.
struct ModelSelector {
  std::string variant;
  std::string config_path;
  bool toy = false;

  void add_to(CLI::App* app, bool allow_toy) {
    auto* v = app->add_option("--variant", variant, "Registry variant (T, S, B, L, XL, H)");
    auto* c = app->add_option("--config", config_path, "Key-value config file");
    v->excludes(c);
    if (allow_toy) {
      auto* t = app->add_flag("--toy", toy, "Built-in toy config (default)");
      t->excludes(v)->excludes(c);
    }
  }

  ModelConfig resolve(const ModelConfig& fallback) const {
    if (!variant.empty()) {
      const VariantSpec* known = find_variant(variant);
      if (!known) throw ConfigError("unknown variant '" + variant + "'");
      return config_for_variant(*known);
    }
    if (!config_path.empty()) return load_config(config_path);
    return fallback;
  }
};

// ---------------------------------------------------------------- config

struct ConfigArgs {
  std::string variant;
  std::optional<int> c1, cprime, l1, l3;
  int ffn_ratio = 4;
  bool layer_scale = false;
  int num_classes = 1000;
  std::uint64_t seed = 0;
  int kernel = 3;
  std::string scale_from;
  double phi = 0;
  double alpha = 1.09;
  double beta = 1.36;
  bool lenient = false;
  std::string name = "custom";
  std::string out_path;
};

void print_violations(const std::vector<StackViolation>& v, std::ostream& err) {
  for (const auto& x : v) err << "error: " << x.rule << " violated: " << x.detail << "\n";
}

int cmd_config(const ConfigArgs& a, std::ostream& out, std::ostream& err) {
  const int selectors = !a.variant.empty() + !a.scale_from.empty() + a.c1.has_value();
  if (selectors != 1) {
    err << "error: choose exactly one of --variant, --scale-from, or --c1/--cprime/--l1/--l3\n";
    return kExitBadInput;
  }
  ModelConfig cfg;
  if (!a.variant.empty()) {
    const VariantSpec* known = find_variant(a.variant);
    if (!known) {
      err << "error: unknown variant '" << a.variant << "'\n";
      return kExitBadInput;
    }
    cfg = config_for_variant(*known);
  } else if (!a.scale_from.empty()) {
    const VariantSpec* known = find_variant(a.scale_from);
    if (!known) {
      err << "error: unknown variant '" << a.scale_from << "'\n";
      return kExitBadInput;
    }
    const ScaleFactors f{a.alpha, a.beta, a.phi};
    const ScaledConfig sc = scale_config(known->stack, f, !a.lenient);
    out << "scale: alpha=" << f.alpha << " beta=" << f.beta << " phi=" << f.phi
        << " residual=" << f.residual() << "\n";
    out << "continuous: c1=" << sc.continuous.c1 << " depth=" << sc.continuous.depth << "\n";
    out << "snapped: c1=" << sc.snapped.c1 << " depth=" << sc.snapped.depth() << " (l1="
        << sc.snapped.l1() << ", l3=" << sc.snapped.l3() << ")\n";
    out << "delta: c1=" << sc.c1_delta << " depth=" << sc.depth_delta << "\n";
    cfg = config_for_variant(*known);
    cfg.name = known->name + "-scaled";
    cfg.stack = sc.snapped;
  } else {
    if (!a.cprime || !a.l1 || !a.l3) {
      err << "error: --c1 requires --cprime, --l1 and --l3\n";
      return kExitBadInput;
    }
    cfg.name = a.name;
    cfg.stack = StackConfig::from(*a.c1, *a.cprime, *a.l1, *a.l3);
    cfg.ffn_ratio = a.ffn_ratio;
    cfg.layer_scale = a.layer_scale;
    cfg.num_classes = a.num_classes;
    cfg.seed = a.seed;
    cfg.kernel = a.kernel;
  }

  const auto violations = validate_stack(cfg.stack);
  if (!violations.empty()) {
    print_violations(violations, err);
    return kExitBadInput;
  }
  const ParamReport report = count_params(cfg, false);
  const std::string text = format_config(cfg);
  if (a.out_path.empty()) {
    out << text;
  } else {
    save_config(a.out_path, cfg);
    out << "wrote " << a.out_path << "\n";
  }
  out << "valid: yes\n";
  out << "closed-form params: " << report.closed_form_total << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- params

struct ParamsArgs {
  ModelSelector model;
  bool no_enumerate = false;
};

int cmd_params(const ParamsArgs& a, std::ostream& out, std::ostream& err) {
  if (a.model.variant.empty() && a.model.config_path.empty()) {
    err << "error: params needs --variant or --config\n";
    return kExitBadInput;
  }
  const ModelConfig cfg = a.model.resolve(ModelConfig{});
  const auto violations = validate_stack(cfg.stack);
  if (!violations.empty()) {
    print_violations(violations, err);
    return kExitBadInput;
  }
  const ParamReport r = count_params(cfg, !a.no_enumerate);
  out << "config: " << cfg.name << " (c1=" << cfg.stack.c1 << ", cprime=" << cfg.stack.cprime
      << ", depths=" << cfg.stack.depths[0] << "-" << cfg.stack.depths[1] << "-"
      << cfg.stack.depths[2] << "-" << cfg.stack.depths[3] << ")\n";
  out << "  stem:         " << r.stem << "\n";
  for (int s = 0; s < kNumStages; ++s) {
    out << "  stage " << s + 1 << ":      " << r.stage_blocks[s] << "\n";
  }
  out << "  downsamplers: " << r.downsamplers << "\n";
  out << "  head:         " << r.head << "\n";
  out << "closed-form total: " << r.closed_form_total << "\n";

  int status = kExitOk;
  if (r.enumerated_total >= 0) {
    out << "enumerated total:  " << r.enumerated_total << " ("
        << (r.exact_match() ? "exact match" : "MISMATCH") << ")\n";
    if (!r.exact_match()) status = kExitCheckFailed;
  }
  if (const VariantSpec* known = find_variant(cfg.name); known && known->stack == cfg.stack) {
    const double dev = (r.closed_form_total - known->expected_params) / known->expected_params;
    const bool ok = std::abs(dev) <= 0.15;
    out << format_count(known->expected_params) << " target, deviation " << format_percent(dev)
        << ", " << (ok ? "within 15%" : "OUTSIDE 15%") << "\n";
    if (!ok) status = kExitCheckFailed;
  }
  return status;
}

// ---------------------------------------------------------------- search

struct SearchArgs {
  double budget = 30e6;
  std::string out_path;
};

int cmd_search(const SearchArgs& a, std::ostream& out, std::ostream&) {
  SearchSpaceOptions opt;
  opt.budget = a.budget;
  const auto entries = enumerate_search_space(opt);
  const std::string csv = search_space_csv(entries);
  int outside = 0;
  for (const auto& e : entries) outside += !e.within_budget;
  if (a.out_path.empty()) {
    out << csv;
  } else {
    write_file(a.out_path, csv);
  }
  out << "configs: " << entries.size() << ", outside budget tolerance: " << outside << "\n";
  return outside == 0 ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- gradcheck

struct GradcheckArgs {
  std::uint64_t seed = 0;
  double step = 1e-6;
  double floor = 1e-3;
  std::string rows = "all";
  std::string targets = "dcnv3,block,model";
  int probes = 20;
};

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out, std::ostream& err) {
  if (!(a.step > 0)) {
    err << "error: --step must be positive\n";
    return kExitBadInput;
  }
  if (a.step >= 1e-4) {
    err << "warning: step " << a.step
        << " is large; the O(step^2) truncation error of the central difference dominates and "
           "failures are expected\n";
  } else if (a.step < 1e-9) {
    err << "warning: step " << a.step << " is small; floating-point cancellation dominates\n";
  }

  std::vector<AblationRow> rows;
  if (a.rows == "all") {
    rows = ablation_rows();
  } else {
    for (const auto& name : split(a.rows)) {
      const AblationRow* row = find_ablation_row(name);
      if (!row) {
        err << "error: unknown toggle row '" << name << "'\n";
        return kExitBadInput;
      }
      rows.push_back(*row);
    }
  }
  const auto targets = split(a.targets);
  for (const auto& t : targets) {
    if (t != "dcnv3" && t != "block" && t != "model") {
      err << "error: unknown target '" << t << "'\n";
      return kExitBadInput;
    }
  }

  GradCheckOptions opt;
  opt.step = a.step;
  opt.floor = a.floor;
  opt.seed = a.seed;

  const GradCheckReport* worst_fail = nullptr;
  std::vector<GradCheckReport> reports;
  reports.reserve(rows.size() * targets.size());
  for (const auto& row : rows) {
    for (const auto& t : targets) {
      if (t == "dcnv3") reports.push_back(gradcheck_dcnv3(row, opt));
      if (t == "block") reports.push_back(gradcheck_block(row, opt));
      if (t == "model") reports.push_back(gradcheck_model(row, opt, a.probes));
      const GradCheckReport& r = reports.back();
      for (const auto& c : r.classes) {
        out << r.target << " row=" << r.row << " class=" << c.name << " probes=" << c.probes
            << " max_rel_error=" << c.max_rel_error << "\n";
      }
      out << r.target << " row=" << r.row << " tolerance=" << r.tolerance
          << " max=" << r.max_error() << " " << (r.passed() ? "PASS" : "FAIL") << "\n";
      if (!r.passed() && (!worst_fail || r.max_error() / r.tolerance >
                                             worst_fail->max_error() / worst_fail->tolerance)) {
        worst_fail = &r;
      }
    }
  }
  if (worst_fail) {
    const ParamClassResult* c = worst_fail->worst();
    err << "gradcheck FAILED; worst offender: " << worst_fail->target << " row=" << worst_fail->row
        << " class=" << c->name << " index=" << c->worst_index << " analytic=" << c->analytic_at_worst
        << " numeric=" << c->numeric_at_worst << " rel_error=" << c->max_rel_error << "\n";
    return kExitCheckFailed;
  }
  out << "gradcheck passed\n";
  return kExitOk;
}

// ---------------------------------------------------------------- oracle

struct OracleArgs {
  std::uint64_t seed = 0;
  int trials = 100;
  std::string toggles = "dcnv3";
};

int cmd_oracle(const OracleArgs& a, std::ostream& out, std::ostream& err) {
  OracleMode mode;
  if (a.toggles == "dcnv3") {
    mode = OracleMode::kDcnv3;
  } else if (a.toggles == "dcnv2") {
    mode = OracleMode::kDcnv2;
  } else if (a.toggles == "all") {
    mode = OracleMode::kAllRows;
  } else {
    err << "error: --toggles must be dcnv3, dcnv2 or all\n";
    return kExitBadInput;
  }
  if (a.trials < 1) {
    err << "error: --trials must be >= 1\n";
    return kExitBadInput;
  }
  const OracleReport r = run_oracle(a.seed, a.trials, mode);
  out << "oracle toggles=" << a.toggles << " seed=" << a.seed << " trials=" << r.trials
      << " max_ulps=" << r.max_ulps << " max_abs_diff=" << r.max_abs_diff
      << " worst_trial=" << r.worst_trial << " " << (r.passed() ? "PASS" : "FAIL") << "\n";
  if (!r.passed()) {
    err << "oracle FAILED: " << r.max_ulps << " ulps exceeds " << r.tolerance_ulps << "\n";
    return kExitCheckFailed;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string op = "dcnv3";
  std::string shape = "1,64,56,56";
  int groups = 4;
  int reps = 5;
  ModelSelector model;
  int image_size = 224;
  int batch = 1;
  std::uint64_t seed = 0;
  std::string out_path;
};

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<BenchResult> rows;
  if (a.op == "dcnv3") {
    const auto dims = parse_int_list(a.shape, 4, "--shape");
    rows = bench_dcnv3(Shape4{dims[0], dims[1], dims[2], dims[3]}, a.groups, a.reps, a.seed);
  } else if (a.op == "model") {
    ModelConfig fallback = config_for_variant(*find_variant("T"));
    const ModelConfig cfg = a.model.resolve(fallback);
    rows.push_back(bench_model(cfg, Shape4{a.batch, cfg.in_channels, a.image_size, a.image_size},
                               a.reps, a.seed));
  } else {
    err << "error: --op must be dcnv3 or model\n";
    return kExitBadInput;
  }
  std::ostringstream csv;
  csv << bench_csv_header() << "\n";
  for (const auto& r : rows) csv << bench_csv_row(r) << "\n";
  if (a.out_path.empty()) {
    out << csv.str();
  } else {
    write_file(a.out_path, csv.str());
    out << "wrote " << a.out_path << "\n";
  }
  for (const auto& r : rows) {
    out << r.op << ": median " << r.median_s << " s, " << r.images_per_s << " images/s";
    if (r.op == "dcnv3") out << ", speedup over naive " << r.speedup << "x";
    out << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- erf

struct ErfArgs {
  ModelSelector model;
  std::string weights;
  std::string input;
  int size = 64;
  std::uint64_t seed = 0;
  std::string pixel;
  std::string stage = "1";
  std::string out_prefix;
  bool channel_sum = false;
};

/// Reads a binary 8-bit PGM (P5) or PPM (P6) into [0, 1].
Tensor4 read_netpbm(const std::string& path, int channels) {
  const std::string bytes = read_file(path);
  std::istringstream is(bytes);
  std::string magic;
  is >> magic;
  if (magic != "P5" && magic != "P6") throw FormatError(path + ": expected a P5 or P6 image");
  auto next_int = [&] {
    is >> std::ws;
    while (is.peek() == '#') {
      std::string line;
      std::getline(is, line);
      is >> std::ws;
    }
    int v = -1;
    is >> v;
    if (!is) throw FormatError(path + ": malformed header");
    return v;
  };
  const int w = next_int();
  const int h = next_int();
  const int maxval = next_int();
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw FormatError(path + ": unsupported dimensions or depth");
  }
  is.get();
  const int file_c = magic == "P6" ? 3 : 1;
  const std::size_t offset = static_cast<std::size_t>(is.tellg());
  const std::size_t need = static_cast<std::size_t>(w) * h * file_c;
  if (bytes.size() < offset + need) throw FormatError(path + ": truncated pixel data");
  Tensor4 t(Shape4{1, channels, h, w});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        const int src_c = file_c == 1 ? 0 : c % file_c;
        const auto v = static_cast<unsigned char>(
            bytes[offset + (static_cast<std::size_t>(y) * w + x) * file_c + src_c]);
        t.at(0, c, y, x) = v / static_cast<double>(maxval);
      }
    }
  }
  return t;
}

int cmd_erf(const ErfArgs& a, std::ostream& out, std::ostream& err) {
  Tap tap;
  if (a.stage == "stem" || a.stage == "0") {
    tap = Tap::kStem;
  } else if (a.stage.size() == 1 && a.stage[0] >= '1' && a.stage[0] <= '4') {
    tap = static_cast<Tap>(a.stage[0] - '0');
  } else {
    err << "error: --stage must be stem, 1, 2, 3 or 4\n";
    return kExitBadInput;
  }
  const ModelConfig cfg = a.model.resolve(toy_config());
  const Model m = a.weights.empty() ? build_model(cfg) : load_weights(a.weights, cfg);
  const Tensor4 image = a.input.empty() ? synthetic_image(cfg.in_channels, a.size, a.size, a.seed)
                                        : read_netpbm(a.input, cfg.in_channels);
  const auto px = parse_int_list(a.pixel, 2, "--pixel");
  const ErfMap map = compute_erf(
      m, image, px[0], px[1], tap,
      a.channel_sum ? ErfAggregation::kChannelSum : ErfAggregation::kPerChannel);

  write_file(a.out_prefix + ".pgm", erf_to_pgm(map));
  write_file(a.out_prefix + ".csv", erf_to_csv(map));

  PixelBox support{map.height, -1, map.width, -1};
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      if (map.at(y, x) > 0) {
        support.y0 = std::min(support.y0, y);
        support.y1 = std::max(support.y1, y);
        support.x0 = std::min(support.x0, x);
        support.x1 = std::max(support.x1, x);
      }
    }
  }
  const PixelBox rf = static_receptive_field(static_rf_layers(cfg, tap), map.feature_y,
                                             map.feature_x, map.height, map.width);
  out << "erf stage=" << a.stage << " pixel=(" << px[0] << "," << px[1] << ") feature=("
      << map.feature_y << "," << map.feature_x << ") map=" << map.height << "x" << map.width << "\n";
  out << "support rows " << support.y0 << ".." << support.y1 << " cols " << support.x0 << ".."
      << support.x1 << "; static receptive field rows " << rf.y0 << ".." << rf.y1 << " cols "
      << rf.x0 << ".." << rf.x1 << "\n";
  out << "wrote " << a.out_prefix << ".pgm and " << a.out_prefix << ".csv\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train-toy

struct TrainArgs {
  std::string config_path;
  int steps = 200;
  double lr = 0.05;
  std::uint64_t seed = 0;
  int per_class = 4;
  std::string out_path;
};

int cmd_train_toy(const TrainArgs& a, std::ostream& out, std::ostream&) {
  const ModelConfig cfg = a.config_path.empty() ? toy_config() : load_config(a.config_path);
  TrainOptions opt;
  opt.steps = a.steps;
  opt.lr = a.lr;
  opt.seed = a.seed;
  opt.per_class = a.per_class;
  const TrainResult r = train_toy(cfg, opt);
  const std::string csv = loss_curve_csv(r.losses);
  if (a.out_path.empty()) {
    out << csv;
  } else {
    write_file(a.out_path, csv);
    out << "wrote " << a.out_path << "\n";
  }
  const double first = r.losses.front();
  const double last = r.losses.back();
  out << "params: " << r.params << ", initial loss " << first << ", final loss " << last
      << ", ratio " << last / first << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"DCNv3 / InternImage reference toolkit"};
  app.require_subcommand(1);

  ConfigArgs config_args;
  auto* config = app.add_subcommand("config", "Write a model config");
  config->add_option("--variant", config_args.variant, "Registry variant");
  config->add_option("--c1", config_args.c1, "Stage-1 width");
  config->add_option("--cprime", config_args.cprime, "Channels per group");
  config->add_option("--l1", config_args.l1, "Depth of stages 1, 2 and 4");
  config->add_option("--l3", config_args.l3, "Depth of stage 3");
  config->add_option("--ffn-ratio", config_args.ffn_ratio, "FFN expansion ratio");
  config->add_flag("--layer-scale", config_args.layer_scale, "Enable layer scale");
  config->add_option("--num-classes", config_args.num_classes, "Classifier outputs");
  config->add_option("--seed", config_args.seed, "Initialization seed");
  config->add_option("--kernel", config_args.kernel, "DCN kernel size (3, 5 or 7)");
  config->add_option("--name", config_args.name, "Config name");
  config->add_option("--scale-from", config_args.scale_from, "Origin variant for scaling");
  config->add_option("--phi", config_args.phi, "Compound scaling factor");
  config->add_option("--alpha", config_args.alpha, "Depth factor");
  config->add_option("--beta", config_args.beta, "Width factor");
  config->add_flag("--lenient", config_args.lenient, "Accept a constraint residual above 0.05");
  config->add_option("-o,--out", config_args.out_path, "Output file (stdout if omitted)");

  ParamsArgs params_args;
  auto* params = app.add_subcommand("params", "Parameter-count audit");
  params_args.model.add_to(params, false);
  params->add_flag("--no-enumerate", params_args.no_enumerate, "Skip the enumeration check");

  SearchArgs search_args;
  auto* search = app.add_subcommand("search", "Enumerate the 30-config stacking search space");
  search->add_option("--budget", search_args.budget, "Parameter budget");
  search->add_option("-o,--out", search_args.out_path, "CSV output file");

  GradcheckArgs gc_args;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--seed", gc_args.seed, "Random seed");
  gradcheck->add_option("--step", gc_args.step, "Central-difference step");
  gradcheck->add_option("--floor", gc_args.floor, "Relative-error denominator floor");
  gradcheck->add_option("--rows", gc_args.rows,
                        "Toggle rows: all or a list of unshared,single-group,sigmoid,dcnv3");
  gradcheck->add_option("--targets", gc_args.targets, "Subset of dcnv3,block,model");
  gradcheck->add_option("--probes", gc_args.probes, "Model-level parameter probes");

  OracleArgs oracle_args;
  auto* oracle = app.add_subcommand("oracle", "Optimized vs naive kernel comparison");
  oracle->add_option("--seed", oracle_args.seed, "Random seed");
  oracle->add_option("--trials", oracle_args.trials, "Random instances");
  oracle->add_option("--toggles", oracle_args.toggles, "dcnv3, dcnv2 or all");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Wall-time benchmark, CSV output");
  bench->add_option("--op", bench_args.op, "dcnv3 or model");
  bench->add_option("--shape", bench_args.shape, "n,c,h,w for --op dcnv3");
  bench->add_option("--groups", bench_args.groups, "Groups for --op dcnv3");
  bench->add_option("--reps", bench_args.reps, "Timed repetitions (at least 5)");
  bench_args.model.add_to(bench, false);
  bench->add_option("--image-size", bench_args.image_size, "Square input size for --op model");
  bench->add_option("--batch", bench_args.batch, "Batch for --op model");
  bench->add_option("--seed", bench_args.seed, "Random seed");
  bench->add_option("-o,--out", bench_args.out_path, "CSV output file");

  ErfArgs erf_args;
  auto* erf = app.add_subcommand("erf", "Effective receptive field map");
  erf_args.model.add_to(erf, true);
  erf->add_option("--weights", erf_args.weights, "Weights file matching the config");
  erf->add_option("--input", erf_args.input, "P5/P6 image (synthetic if omitted)");
  erf->add_option("--size", erf_args.size, "Synthetic image size");
  erf->add_option("--seed", erf_args.seed, "Synthetic image seed");
  erf->add_option("--pixel", erf_args.pixel, "y,x")->required();
  erf->add_option("--stage", erf_args.stage, "stem, 1, 2, 3 or 4");
  erf->add_flag("--channel-sum", erf_args.channel_sum,
                 "Single backward pass with an all-channel one-hot");
  erf->add_option("-o,--out", erf_args.out_prefix, "Output prefix for .pgm and .csv")->required();

  TrainArgs train_args;
  auto* train = app.add_subcommand("train-toy", "SGD smoke test on a synthetic task");
  train->add_option("--config", train_args.config_path, "Config file (built-in toy if omitted)");
  train->add_option("--steps", train_args.steps, "SGD steps");
  train->add_option("--lr", train_args.lr, "Learning rate");
  train->add_option("--seed", train_args.seed, "Seed for weights and data");
  train->add_option("--per-class", train_args.per_class, "Images per class");
  train->add_option("-o,--out", train_args.out_path, "Loss CSV output file");

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (config->parsed()) return cmd_config(config_args, out, err);
    if (params->parsed()) return cmd_params(params_args, out, err);
    if (search->parsed()) return cmd_search(search_args, out, err);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_args, out, err);
    if (oracle->parsed()) return cmd_oracle(oracle_args, out, err);
    if (bench->parsed()) return cmd_bench(bench_args, out, err);
    if (erf->parsed()) return cmd_erf(erf_args, out, err);
    if (train->parsed()) return cmd_train_toy(train_args, out, err);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitBadInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  return kExitBadInput;
}

}  // namespace internimage::cli
