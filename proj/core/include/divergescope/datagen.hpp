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

// Noisy synthetic supervision: parallel pairs are positives, filtered
// cross-pairings of their two sides are negatives.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "divergescope/align.hpp"
#include "divergescope/corpus.hpp"

namespace divergescope {

// Fraction of tokens on the `direction` source side with at least one
// dictionary translation present in the other side. Duplicates count
// individually; an empty source side gives 0.
double coverage(const Tokens& e_tokens, const Tokens& f_tokens, const BilingualDictionary& dictionary,
                Direction direction);

struct NegativeOptions {
  double max_length_ratio = 2.0;
  double min_coverage = 0.5;
  // When false only e->f coverage is required.
  bool bidirectional_coverage = true;
  // Each source sentence is paired with at most this many nearest target
  // sentences by corpus position; 0 means the full product.
  std::size_t window = 1000;
  unsigned threads = 1;
};

// Candidates (e_i, f_j), i != j, in (i, j) order, kept if the length ratio
// and coverage filters pass and the pair is not itself a positive. Ids are
// left at 0; assemble_dataset assigns them.
std::vector<SentencePair> generate_negatives(const std::vector<SentencePair>& positives,
                                             const BilingualDictionary& dictionary,
                                             const NegativeOptions& options = {});

struct SyntheticDataset {
  std::vector<LabeledPair> examples;
  std::size_t positive_count = 0;
  std::size_t negative_count = 0;
  std::uint64_t generation_seed = 0;
  // Non-empty when the pool could not supply the requested ratio.
  std::string warning;
};

// Labels positives Equivalent and a seeded uniform sample of
// ratio * |positives| pool pairs Divergent, then shuffles. Example ids are
// renumbered 0..N-1 in output order.
SyntheticDataset assemble_dataset(const std::vector<SentencePair>& positives,
                                  const std::vector<SentencePair>& negative_pool, std::size_t ratio,
                                  std::uint64_t seed);

// Seeded uniform sample of `count` pairs (all of them if fewer), in corpus order.
std::vector<SentencePair> sample_pairs(const std::vector<SentencePair>& pairs, std::size_t count,
                                       std::uint64_t seed);

}  // namespace divergescope
