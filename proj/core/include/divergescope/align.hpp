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

// IBM Model 1/2 word alignment trained by EM, Viterbi decoding, the three
// standard symmetrization heuristics, and bilingual dictionary extraction.
//
// Conventions: a model of direction kEtoF explains f given e, so its
// "source" side is e and its "target" side is f. Source position 0 is the
// NULL word; target positions are 0-based. Alignments are always stored in
// (e_index, f_index) space regardless of the direction that produced them.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "divergescope/corpus.hpp"

namespace divergescope {

enum class Direction { kEtoF, kFtoE };

std::string_view direction_name(Direction d);

class Vocabulary {
 public:
  static constexpr int kNull = 0;
  static constexpr std::string_view kNullWord = "<null>";

  Vocabulary();

  int add(std::string_view word);
  std::optional<int> find(std::string_view word) const;
  const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return words_.size(); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

// Lexical translation probabilities t(target | source). Row 0 is NULL.
struct TranslationTable {
  Vocabulary source;
  Vocabulary target;
  std::vector<std::unordered_map<int, double>> rows;

  double prob(int source_id, int target_id) const;
  // 0 for unknown words.
  double prob(std::string_view source_word, std::string_view target_word) const;
  // Largest-probability target word for a source word; ties go to the
  // lexicographically smaller word.
  std::optional<std::string> best_translation(std::string_view source_word) const;
};

struct AlignKey {
  int target_position;  // i, 0-based
  int source_length;    // l_src, excluding NULL
  int target_length;    // l_tgt

  friend auto operator<=>(const AlignKey&, const AlignKey&) = default;
};

struct Ibm2Model {
  TranslationTable table;
  // a(j | i, l_src, l_tgt) for j in 0..l_src; index 0 is NULL.
  std::map<AlignKey, std::vector<double>> align_prob;
  Direction direction = Direction::kEtoF;

  // Uniform 1/(l_src+1) for tuples never seen in training.
  double alignment_prob(int j, const AlignKey& key) const;
};

struct EmOptions {
  // Workers for the E-step. Counts are reduced in a fixed chunk order, so the
  // result is bit-identical for every thread count.
  std::size_t threads = 1;
};

struct Ibm1Result {
  TranslationTable table;
  // Corpus log-likelihood under the parameters after k iterations, k = 0..n.
  std::vector<double> log_likelihood;
};

struct Ibm2Result {
  Ibm2Model model;
  std::vector<double> log_likelihood;
};

Ibm1Result train_ibm1(const std::vector<SentencePair>& pairs, Direction direction,
                      int iterations, const EmOptions& options = {});

Ibm2Result train_ibm2(const std::vector<SentencePair>& pairs, Direction direction,
                      int iterations, const TranslationTable& init,
                      const EmOptions& options = {});

// Model 1 iterations followed by Model 2 iterations.
Ibm2Model train_aligner(const std::vector<SentencePair>& pairs, Direction direction,
                        int ibm1_iterations, int ibm2_iterations, const EmOptions& options = {});

double corpus_log_likelihood(const Ibm2Model& model, const std::vector<SentencePair>& pairs);

// Plain text: direction, both vocabularies in id order, then the nonzero
// lexical entries and the positional table, probabilities at full precision.
void save_ibm2(std::ostream& out, const Ibm2Model& model);
Ibm2Model load_ibm2(std::istream& in);
void save_ibm2_file(const std::filesystem::path& path, const Ibm2Model& model);
Ibm2Model load_ibm2_file(const std::filesystem::path& path);

struct Alignment {
  std::set<std::pair<int, int>> links;  // (e_index, f_index)
  int e_len = 0;
  int f_len = 0;

  friend bool operator==(const Alignment&, const Alignment&) = default;
};

struct ViterbiResult {
  Alignment alignment;
  std::size_t oov_tokens = 0;  // target-side tokens unknown to the model
};

ViterbiResult viterbi_align(const Ibm2Model& model, const SentencePair& pair);

enum class Heuristic { kUnion, kIntersection, kGrowDiagFinalAnd };

std::string_view heuristic_name(Heuristic h);
Heuristic parse_heuristic(std::string_view name);
inline constexpr Heuristic kAllHeuristics[] = {Heuristic::kUnion, Heuristic::kIntersection,
                                              Heuristic::kGrowDiagFinalAnd};

// `forward` comes from the e->f model, `reverse` from the f->e model; both
// are already in (e, f) space.
Alignment symmetrize(const Alignment& forward, const Alignment& reverse, Heuristic heuristic);

// Translation sets in both directions with their lexical probabilities.
struct BilingualDictionary {
  std::map<std::string, std::map<std::string, double>> e_to_f;
  std::map<std::string, std::map<std::string, double>> f_to_e;

  bool empty() const { return e_to_f.empty() && f_to_e.empty(); }
  std::size_t entry_count() const;
};

// Keeps t(w|s) >= prob_threshold from each model (NULL rows excluded).
BilingualDictionary extract_dictionary(const Ibm2Model& model_ef, const Ibm2Model& model_fe,
                                       double prob_threshold);

// `i-j` links, one pair per line.
void write_alignments(std::ostream& out, const std::vector<Alignment>& alignments);
std::vector<Alignment> read_alignments(std::istream& in, const std::vector<SentencePair>& pairs);
void write_alignments_file(const std::filesystem::path& path,
                           const std::vector<Alignment>& alignments);
std::vector<Alignment> read_alignments_file(const std::filesystem::path& path,
                                            const std::vector<SentencePair>& pairs);

// Dictionary files: `src<TAB>tgt<TAB>prob`, one file per direction.
void write_dictionary(const std::filesystem::path& e_to_f_path,
                      const std::filesystem::path& f_to_e_path,
                      const BilingualDictionary& dictionary);
BilingualDictionary read_dictionary(const std::filesystem::path& e_to_f_path,
                                    const std::filesystem::path& f_to_e_path);

// Everything the features and embedding stages need from an aligned corpus.
struct AlignedCorpus {
  std::vector<Alignment> forward;
  std::vector<Alignment> reverse;
  std::map<Heuristic, std::vector<Alignment>> symmetrized;
  std::size_t oov_tokens = 0;
};

AlignedCorpus align_corpus(const Ibm2Model& model_ef, const Ibm2Model& model_fe,
                           const std::vector<SentencePair>& pairs);

}  // namespace divergescope
