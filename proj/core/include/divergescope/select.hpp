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

// Data selection: keep the least divergent fraction of a corpus.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "divergescope/corpus.hpp"
#include "divergescope/scores.hpp"

namespace divergescope {

// Reads `pair_id<TAB>score` lines. Every id must belong to `corpus` and
// appear once; scores must be finite.
std::vector<ScoredPair> ingest_scores(std::istream& in, std::span<const SentencePair> corpus);
std::vector<ScoredPair> ingest_scores_file(const std::filesystem::path& path, std::span<const SentencePair> corpus);

// ceil(keep_fraction * n), ignoring floating point noise just above an integer.
std::size_t kept_count(std::size_t n, double keep_fraction);

// The kept_count highest-scored pairs in corpus order. Ties at the cut go to
// the smaller id.
std::vector<SentencePair> select_top(const std::vector<SentencePair>& pairs, const std::vector<ScoredPair>& scores,
                                     double keep_fraction);

// Uniform [0, 1) scores; selecting on them is random downsampling.
std::vector<ScoredPair> random_scores(const std::vector<SentencePair>& pairs, std::uint64_t seed);

// Two-file corpus plus one kept id per line.
void write_selection(const std::filesystem::path& source_path, const std::filesystem::path& target_path,
                     const std::filesystem::path& ids_path, const std::vector<SentencePair>& kept);

}  // namespace divergescope
