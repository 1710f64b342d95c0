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

#include "divergescope/scores.hpp"

#include <cstdlib>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "divergescope/error.hpp"

namespace divergescope {

void write_scores(std::ostream& out, const std::vector<ScoredPair>& scores) {
  for (const auto& s : scores) out << fmt::format("{}\t{:.6f}\n", s.pair_id, s.score);
}

void write_scores_file(const std::filesystem::path& path, const std::vector<ScoredPair>& scores) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(fmt::format("cannot write {}", path.string()));
  write_scores(out, scores);
}

double quantize_score(double score) {
  return std::strtod(fmt::format("{:.6f}", score).c_str(), nullptr);
}

}  // namespace divergescope
