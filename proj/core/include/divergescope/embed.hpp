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

// Shared bilingual word vectors. Both languages live in one table; keys carry
// an "e:" or "f:" language tag.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "divergescope/align.hpp"
#include "divergescope/corpus.hpp"

namespace divergescope {

enum class Language { kE, kF };

std::string_view language_tag(Language language);  // "e:" or "f:"
std::string tagged(Language language, std::string_view word);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim);

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }

  // Key must be language-tagged and the vector finite with length dim().
  // Returns false if the key already existed (the new vector replaces it).
  bool insert(const std::string& key, std::vector<double> vector);
  const std::vector<double>* find(std::string_view key) const;
  const std::vector<double>* find(Language language, std::string_view word) const;
  const std::unordered_map<std::string, std::vector<double>>& vectors() const { return vectors_; }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

// `<count> <dim>` header, then `<tagged_token> v1 .. v_dim` per line with
// 6-decimal fixed point values. Rows are written in key order.
void save_embeddings(std::ostream& out, const EmbeddingTable& table);
void save_embeddings_file(const std::filesystem::path& path, const EmbeddingTable& table);
// Duplicate keys keep the last row and add a warning.
EmbeddingTable load_embeddings(std::istream& in, std::vector<std::string>* warnings = nullptr);
EmbeddingTable load_embeddings_file(const std::filesystem::path& path,
                                    std::vector<std::string>* warnings = nullptr);

struct EmbeddingOptions {
  std::size_t dim = 200;
  std::size_t epochs = 5;
  std::size_t window = 5;
  std::size_t negatives = 5;
  double learning_rate = 0.025;  // decays linearly to ~0 over training
  std::uint64_t seed = 1;
};

// Skip-gram with negative sampling over four streams: e->e and f->f
// monolingual windows, and e->f / f->e where the context window is projected
// through the alignment links of each pair. Without alignments only the
// monolingual streams run, and a warning is added.
EmbeddingTable train_bilingual_embeddings(const std::vector<SentencePair>& pairs,
                                          const std::vector<Alignment>& alignments,
                                          const EmbeddingOptions& options,
                                          std::vector<std::string>* warnings = nullptr);

struct SentenceEmbedding {
  std::vector<double> vector;
  bool all_oov = false;  // no token was in the table; vector is zero
};

// Mean of the in-vocabulary token vectors.
SentenceEmbedding sentence_embedding(const Tokens& tokens, const EmbeddingTable& table, Language language);

// Cosine between the two sentence means; 0 when either is the zero vector.
double cosine_score(const SentencePair& pair, const EmbeddingTable& table);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace divergescope
