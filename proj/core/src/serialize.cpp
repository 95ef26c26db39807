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

#include "internimage/serialize.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "internimage/errors.hpp"

namespace internimage {

// ----------------------------------------------------------------- config

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw FormatError("config: bad value for '" + std::string(key) + "': '" + std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw FormatError("config: bad boolean for '" + std::string(key) + "': '" + std::string(v) + "'");
}

const char* bool_str(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string format_config(const ModelConfig& cfg) {
  std::ostringstream os;
  os << "name=" << cfg.name << "\n"
     << "c1=" << cfg.stack.c1 << "\n"
     << "cprime=" << cfg.stack.cprime << "\n"
     << "l1=" << cfg.stack.depths[0] << "\n"
     << "l2=" << cfg.stack.depths[1] << "\n"
     << "l3=" << cfg.stack.depths[2] << "\n"
     << "l4=" << cfg.stack.depths[3] << "\n"
     << "ffn_ratio=" << cfg.ffn_ratio << "\n"
     << "layer_scale=" << bool_str(cfg.layer_scale) << "\n"
     << "num_classes=" << cfg.num_classes << "\n"
     << "seed=" << cfg.seed << "\n";
  const ModelConfig d;
  if (cfg.kernel != d.kernel) os << "kernel=" << cfg.kernel << "\n";
  if (cfg.in_channels != d.in_channels) os << "in_channels=" << cfg.in_channels << "\n";
  if (cfg.shared_weights != d.shared_weights) os << "shared_weights=" << bool_str(cfg.shared_weights) << "\n";
  if (cfg.multi_group != d.multi_group) os << "multi_group=" << bool_str(cfg.multi_group) << "\n";
  if (cfg.normalization != d.normalization) {
    os << "normalization=" << (cfg.normalization == Normalization::kSoftmax ? "softmax" : "sigmoid") << "\n";
  }
  return os.str();
}

ModelConfig parse_config(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("config: line " + std::to_string(line_no) + " has no '='");
    }
    const std::string key(trim(line.substr(0, eq)));
    if (!kv.emplace(key, std::string(trim(line.substr(eq + 1)))).second) {
      throw FormatError("config: duplicate key '" + key + "'");
    }
  }

  ModelConfig cfg;
  auto take = [&](std::string_view key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto require = [&](std::string_view key) -> const std::string& {
    const auto* v = take(key);
    if (v == nullptr) throw FormatError("config: missing key '" + std::string(key) + "'");
    return *v;
  };

  if (const auto* v = take("name")) cfg.name = *v;
  cfg.stack.c1 = parse_number<int>("c1", require("c1"));
  cfg.stack.cprime = parse_number<int>("cprime", require("cprime"));
  const int l1 = parse_number<int>("l1", require("l1"));
  const int l3 = parse_number<int>("l3", require("l3"));
  const auto* l2 = take("l2");
  const auto* l4 = take("l4");
  cfg.stack.depths = {l1, l2 ? parse_number<int>("l2", *l2) : l1, l3,
                      l4 ? parse_number<int>("l4", *l4) : l1};
  if (const auto* v = take("ffn_ratio")) cfg.ffn_ratio = parse_number<int>("ffn_ratio", *v);
  if (const auto* v = take("layer_scale")) cfg.layer_scale = parse_bool("layer_scale", *v);
  if (const auto* v = take("num_classes")) cfg.num_classes = parse_number<int>("num_classes", *v);
  if (const auto* v = take("seed")) cfg.seed = parse_number<std::uint64_t>("seed", *v);
  if (const auto* v = take("kernel")) cfg.kernel = parse_number<int>("kernel", *v);
  if (const auto* v = take("in_channels")) cfg.in_channels = parse_number<int>("in_channels", *v);
  if (const auto* v = take("shared_weights")) cfg.shared_weights = parse_bool("shared_weights", *v);
  if (const auto* v = take("multi_group")) cfg.multi_group = parse_bool("multi_group", *v);
  if (const auto* v = take("normalization")) {
    if (*v == "softmax") {
      cfg.normalization = Normalization::kSoftmax;
    } else if (*v == "sigmoid") {
      cfg.normalization = Normalization::kSigmoid;
    } else {
      throw FormatError("config: normalization must be softmax or sigmoid");
    }
  }

  static const char* known[] = {"name", "c1", "cprime", "l1", "l2", "l3", "l4",
                                "ffn_ratio", "layer_scale", "num_classes", "seed",
                                "kernel", "in_channels", "shared_weights",
                                "multi_group", "normalization"};
  for (const auto& [k, v] : kv) {
    if (std::find(std::begin(known), std::end(known), k) == std::end(known)) {
      throw FormatError("config: unknown key '" + k + "'");
    }
  }
  return cfg;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

void save_config(const std::filesystem::path& path, const ModelConfig& cfg) {
  write_file(path, format_config(cfg));
}

ModelConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

// ---------------------------------------------------------------- weights

namespace {

template <class U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  explicit Reader(std::string_view b) : bytes_(b) {}
  bool done() const { return pos_ == bytes_.size(); }

  template <class U>
  U le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return v;
  }
  std::string_view take(std::size_t n) {
    need(n);
    const auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("weights: truncated file");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_weights(const std::vector<NamedTensor>& tensors) {
  std::string out(kWeightsMagic, sizeof(kWeightsMagic));
  out.push_back(static_cast<char>(kWeightsVersion));
  for (const auto& t : tensors) {
    std::int64_t numel = 1;
    for (auto d : t.dims) numel *= d;
    if (numel != static_cast<std::int64_t>(t.data.size())) {
      throw ShapeError("weights: tensor '" + t.name + "' dims do not match data length");
    }
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(d));
    for (double v : t.data) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

std::vector<NamedTensor> decode_weights(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(sizeof(kWeightsMagic)) != std::string_view(kWeightsMagic, sizeof(kWeightsMagic))) {
    throw FormatError("weights: bad magic");
  }
  const auto version = r.le<std::uint8_t>();
  if (version != kWeightsVersion) {
    throw FormatError("weights: unsupported version " + std::to_string(version));
  }
  std::vector<NamedTensor> out;
  while (!r.done()) {
    NamedTensor t;
    t.name = std::string(r.take(r.le<std::uint32_t>()));
    const auto rank = r.le<std::uint32_t>();
    std::uint64_t numel = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const auto d = r.le<std::uint64_t>();
      t.dims.push_back(static_cast<std::int64_t>(d));
      numel *= d;
    }
    if (numel > bytes.size() / sizeof(double)) throw FormatError("weights: truncated file");
    t.data.resize(numel);
    for (auto& v : t.data) v = std::bit_cast<double>(r.le<std::uint64_t>());
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<NamedTensor> model_tensors(const Model& m) {
  std::vector<NamedTensor> out;
  visit_params(m, "", [&](const std::string& name, const std::vector<double>& data, const Dims& dims) {
    out.push_back(NamedTensor{name, dims, data});
  });
  return out;
}

void load_model_tensors(Model& m, const std::vector<NamedTensor>& tensors) {
  std::size_t i = 0;
  visit_params(m, "", [&](const std::string& name, std::vector<double>& data, const Dims& dims) {
    if (i >= tensors.size()) throw FormatError("weights: missing tensor '" + name + "'");
    const auto& t = tensors[i++];
    if (t.name != name || t.dims != dims) {
      throw FormatError("weights: expected '" + name + "', found '" + t.name + "'");
    }
    data = t.data;
  });
  if (i != tensors.size()) throw FormatError("weights: extra tensors in file");
}

void save_weights(const std::filesystem::path& path, const Model& m) {
  write_file(path, encode_weights(model_tensors(m)));
}

Model load_weights(const std::filesystem::path& path, const ModelConfig& cfg) {
  Model m = assemble_model(cfg);
  load_model_tensors(m, decode_weights(read_file(path)));
  return m;
}

}  // namespace internimage
