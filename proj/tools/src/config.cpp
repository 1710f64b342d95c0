// Copyright 2026 The divergescope Authors
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

#include "divergescope/cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include <fmt/format.h>

#include "divergescope/error.hpp"

namespace divergescope::cli {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

Config::Config() {
  entries_ = {
      {"output_dir", "divergescope_out"},
      {"threads", "1"},

      // Two-file corpus; when both are empty a cipher corpus is generated.
      {"corpus.source", ""},
      {"corpus.target", ""},
      {"cipher.pairs", "2000"},
      {"cipher.vocab", "50"},
      {"cipher.min_length", "3"},
      {"cipher.max_length", "12"},
      {"cipher.noise", "0.1"},
      {"cipher.seed", "1"},

      {"split.dev_fraction", "0.1"},
      {"split.test_fraction", "0.1"},
      {"split.seed", "1"},

      {"align.ibm1_iterations", "5"},
      {"align.ibm2_iterations", "5"},
      {"dict.threshold", "0.5"},

      {"datagen.positives", "5000"},
      {"datagen.dev_positives", "100"},
      {"datagen.test_positives", "100"},
      {"datagen.ratio", "5"},
      {"datagen.max_length_ratio", "2"},
      {"datagen.min_coverage", "0.5"},
      {"datagen.bidirectional", "true"},
      {"datagen.window", "1000"},
      {"datagen.seed", "1"},

      {"embed.dim", "200"},
      {"embed.epochs", "5"},
      {"embed.window", "5"},
      {"embed.negatives", "5"},
      {"embed.learning_rate", "0.025"},
      {"embed.seed", "1"},

      {"vdpwi.preset", "full"},
      {"vdpwi.hidden", ""},
      {"vdpwi.grid", ""},
      {"vdpwi.max_length", ""},
      {"vdpwi.cnn", ""},
      {"vdpwi.fc_dim", ""},
      {"vdpwi.focus", ""},
      {"vdpwi.focus_low_weight", ""},
      {"vdpwi.epochs", ""},
      {"vdpwi.batch_size", ""},
      {"vdpwi.learning_rate", ""},
      {"vdpwi.seed", "1"},

      {"feat.heuristics", "all"},
      {"feat.l2", "1e-4"},
      {"feat.learning_rate", "0.1"},
      {"feat.epochs", "500"},
      {"feat.seed", "1"},

      {"eval.overall_f", "weighted"},

      {"select.model", "vdpwi"},
      {"select.keep_fraction", "0.9"},
      {"select.seed", "1"},
  };
}

void Config::load(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw UsageError(fmt::format("{}:{}: expected key = value", source, line_no));
    const auto key = trim(std::string_view(text).substr(0, eq));
    if (!entries_.contains(key)) throw UsageError(fmt::format("{}:{}: unknown key '{}'", source, line_no, key));
    entries_[key] = trim(std::string_view(text).substr(eq + 1));
  }
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError(fmt::format("cannot open config {}", path.string()));
  load(in, path.string());
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw UsageError(fmt::format("--set expects key=value, got '{}'", assignment));
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string& key, std::string value) {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw UsageError(fmt::format("unknown config key '{}'", key));
  it->second = std::move(value);
}

const std::string& Config::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw UsageError(fmt::format("unknown config key '{}'", key));
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const auto& v = get(key);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw UsageError(fmt::format("config {}: '{}' is not a finite number", key, v));
  }
  return out;
}

std::int64_t Config::get_int(const std::string& key) const {
  const auto& v = get(key);
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw UsageError(fmt::format("config {}: '{}' is not an integer", key, v));
  }
  return out;
}

std::size_t Config::get_size(const std::string& key) const {
  const auto v = get_int(key);
  if (v < 0) throw UsageError(fmt::format("config {}: must be non-negative", key));
  return static_cast<std::size_t>(v);
}

std::uint64_t Config::get_seed(const std::string& key) const {
  const auto& v = get(key);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw UsageError(fmt::format("config {}: '{}' is not a seed", key, v));
  }
  return out;
}

bool Config::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError(fmt::format("config {}: '{}' is not a boolean", key, v));
}

std::string Config::dump() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += fmt::format("{} = {}\n", k, v);
  return out;
}

std::filesystem::path Config::output_dir() const { return get("output_dir"); }

unsigned Config::threads() const {
  const auto t = get_size("threads");
  if (t == 0) throw UsageError("threads must be at least 1");
  return static_cast<unsigned>(t);
}

CipherOptions Config::cipher_options() const {
  CipherOptions o;
  o.pairs = get_size("cipher.pairs");
  o.vocab = get_size("cipher.vocab");
  o.min_length = get_size("cipher.min_length");
  o.max_length = get_size("cipher.max_length");
  o.noise = get_double("cipher.noise");
  o.seed = get_seed("cipher.seed");
  return o;
}

NegativeOptions Config::negative_options() const {
  NegativeOptions o;
  o.max_length_ratio = get_double("datagen.max_length_ratio");
  o.min_coverage = get_double("datagen.min_coverage");
  o.bidirectional_coverage = get_bool("datagen.bidirectional");
  o.window = get_size("datagen.window");
  o.threads = threads();
  return o;
}

EmbeddingOptions Config::embedding_options() const {
  EmbeddingOptions o;
  o.dim = get_size("embed.dim");
  o.epochs = get_size("embed.epochs");
  o.window = get_size("embed.window");
  o.negatives = get_size("embed.negatives");
  o.learning_rate = get_double("embed.learning_rate");
  o.seed = get_seed("embed.seed");
  return o;
}

VdpwiConfig Config::vdpwi_config() const {
  const auto dim = get_size("embed.dim");
  const auto& preset = get("vdpwi.preset");
  VdpwiConfig c;
  if (preset == "desk") {
    c = VdpwiConfig::desk(dim);
  } else if (preset == "full") {
    c.embedding_dim = dim;
  } else {
    throw UsageError(fmt::format("vdpwi.preset must be full or desk, got '{}'", preset));
  }
  auto has = [&](const char* key) { return !get(key).empty(); };
  if (has("vdpwi.hidden")) c.lstm_hidden_dim = get_size("vdpwi.hidden");
  if (has("vdpwi.grid")) c.grid_size = get_size("vdpwi.grid");
  if (has("vdpwi.max_length")) c.max_sentence_length = get_size("vdpwi.max_length");
  if (has("vdpwi.cnn")) c.cnn = parse_cnn_spec(get("vdpwi.cnn"));
  if (has("vdpwi.fc_dim")) c.fc_dim = get_size("vdpwi.fc_dim");
  if (has("vdpwi.focus")) c.focus = get_bool("vdpwi.focus");
  if (has("vdpwi.focus_low_weight")) c.focus_low_weight = get_double("vdpwi.focus_low_weight");
  if (has("vdpwi.epochs")) c.epochs = get_size("vdpwi.epochs");
  if (has("vdpwi.batch_size")) c.batch_size = get_size("vdpwi.batch_size");
  if (has("vdpwi.learning_rate")) c.learning_rate = get_double("vdpwi.learning_rate");
  c.seed = get_seed("vdpwi.seed");
  c.validate();
  return c;
}

LinearOptions Config::linear_options() const {
  LinearOptions o;
  o.l2_strength = get_double("feat.l2");
  o.learning_rate = get_double("feat.learning_rate");
  o.epochs = get_size("feat.epochs");
  o.seed = get_seed("feat.seed");
  return o;
}

std::vector<Heuristic> Config::feature_heuristics() const {
  const auto& v = get("feat.heuristics");
  if (v == "all") return {std::begin(kAllHeuristics), std::end(kAllHeuristics)};
  std::vector<Heuristic> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto name = trim(std::string_view(v).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    out.push_back(parse_heuristic(name));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

OverallF Config::overall_f() const { return parse_overall_f(get("eval.overall_f")); }

}  // namespace divergescope::cli
