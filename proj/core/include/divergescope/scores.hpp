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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace divergescope {

// Higher score = less divergent. The common currency between scorers, the
// threshold tuner, and corpus selection.
struct ScoredPair {
  std::uint64_t pair_id = 0;
  double score = 0.0;

  friend bool operator==(const ScoredPair&, const ScoredPair&) = default;
};

// `pair_id<TAB>score`, score in 6-decimal fixed point.
void write_scores(std::ostream& out, const std::vector<ScoredPair>& scores);
void write_scores_file(const std::filesystem::path& path, const std::vector<ScoredPair>& scores);

// Rounds a score to what the score file stores, so in-memory and on-disk
// consumers see the same values.
double quantize_score(double score);

}  // namespace divergescope
