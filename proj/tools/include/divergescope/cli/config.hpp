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

// Flat `key = value` run configuration.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "divergescope/align.hpp"
#include "divergescope/cipher.hpp"
#include "divergescope/datagen.hpp"
#include "divergescope/embed.hpp"
#include "divergescope/eval.hpp"
#include "divergescope/features.hpp"
#include "divergescope/vdpwi.hpp"

namespace divergescope::cli {

class Config {
 public:
  // Every known key with its default. An empty value means "not set"; for
  // the vdpwi.* model keys that defers to the preset.
  Config();

  // `#` starts a comment; blank lines are skipped. Unknown keys are errors.
  void load(std::istream& in, std::string_view source = "config");
  void load_file(const std::filesystem::path& path);
  // "key=value".
  void apply_override(std::string_view assignment);
  void set(const std::string& key, std::string value);

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::size_t get_size(const std::string& key) const;
  std::uint64_t get_seed(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const { return entries_; }
  // Canonical `key = value` listing in key order.
  std::string dump() const;

  std::filesystem::path output_dir() const;
  unsigned threads() const;

  CipherOptions cipher_options() const;
  NegativeOptions negative_options() const;
  EmbeddingOptions embedding_options() const;
  VdpwiConfig vdpwi_config() const;
  LinearOptions linear_options() const;
  std::vector<Heuristic> feature_heuristics() const;
  OverallF overall_f() const;

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace divergescope::cli
