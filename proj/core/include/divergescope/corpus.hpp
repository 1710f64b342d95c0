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

// Sentence-aligned parallel corpora: loading, tokenization, deduplication,
// splitting, and the two on-disk formats every other module consumes.
//
//   two-file:  corpus.e / corpus.f, one sentence per line, space separated
//   TSV:       id<TAB>e tokens<TAB>f tokens[<TAB>equivalent|divergent]

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace divergescope {

using Tokens = std::vector<std::string>;

struct SentencePair {
  std::uint64_t id = 0;
  Tokens e_tokens;
  Tokens f_tokens;

  friend bool operator==(const SentencePair&, const SentencePair&) = default;
};

enum class Label { kEquivalent, kDivergent };

std::string_view label_name(Label label);
// Accepts exactly "equivalent" or "divergent".
Label parse_label(std::string_view text);

struct LabeledPair {
  SentencePair pair;
  Label label = Label::kEquivalent;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

template <typename T>
struct CorpusSplit {
  std::vector<T> train;
  std::vector<T> dev;
  std::vector<T> test;
};

struct LoadResult {
  std::vector<SentencePair> pairs;
  std::size_t rejected = 0;  // lines with an empty side after tokenization
};

// Splits on Unicode whitespace and lowercases. No other normalization.
Tokens tokenize(std::string_view line);

// Line i of each file is paired with line i of the other. Accepted pairs get
// ids 0..n-1 in file order; rejected lines are counted, not numbered.
LoadResult load_parallel(const std::filesystem::path& source_path,
                         const std::filesystem::path& target_path);

struct DedupResult {
  std::vector<SentencePair> pairs;
  std::size_t removed = 0;
};

DedupResult deduplicate(const std::vector<SentencePair>& pairs);

// Shuffle (seeded) then cut. Dev and test sizes are floor(fraction * n);
// everything left over goes to train.
template <typename T>
CorpusSplit<T> split_corpus(const std::vector<T>& items, const std::array<double, 3>& fractions,
                            std::uint64_t seed);

extern template CorpusSplit<SentencePair> split_corpus(const std::vector<SentencePair>&,
                                                       const std::array<double, 3>&,
                                                       std::uint64_t);
extern template CorpusSplit<LabeledPair> split_corpus(const std::vector<LabeledPair>&,
                                                      const std::array<double, 3>&,
                                                      std::uint64_t);

std::string join_tokens(const Tokens& tokens);

// TSV format.
void write_tsv(std::ostream& out, const std::vector<SentencePair>& pairs);
void write_labeled_tsv(std::ostream& out, const std::vector<LabeledPair>& pairs);
std::vector<SentencePair> read_tsv(std::istream& in);
std::vector<LabeledPair> read_labeled_tsv(std::istream& in);

void write_tsv_file(const std::filesystem::path& path, const std::vector<SentencePair>& pairs);
void write_labeled_tsv_file(const std::filesystem::path& path,
                            const std::vector<LabeledPair>& pairs);
std::vector<SentencePair> read_tsv_file(const std::filesystem::path& path);
std::vector<LabeledPair> read_labeled_tsv_file(const std::filesystem::path& path);

// Two-file format. Ids are not stored; callers wanting them keep a sidecar.
void write_parallel(const std::filesystem::path& source_path,
                    const std::filesystem::path& target_path,
                    const std::vector<SentencePair>& pairs);

std::vector<SentencePair> unlabeled(const std::vector<LabeledPair>& pairs);

}  // namespace divergescope
