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

// Alignment and dictionary features for the parallel vs non-parallel
// baseline, and the logistic regression that scores them.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "divergescope/align.hpp"
#include "divergescope/corpus.hpp"
#include "divergescope/scores.hpp"

namespace divergescope {

// Per side and heuristic: unaligned count, unaligned ratio, three largest
// fertilities, longest unaligned run, longest aligned run.
inline constexpr std::size_t kSideFeatures = 7;

// 4 length features, 2 sides x kSideFeatures per heuristic, 2 coverages.
std::vector<std::string> feature_names(std::span<const Heuristic> heuristics);
std::size_t feature_count(std::span<const Heuristic> heuristics);

using Features = std::vector<double>;

Features extract_features(const SentencePair& pair, const std::map<Heuristic, Alignment>& alignments,
                          const BilingualDictionary& dictionary, std::span<const Heuristic> heuristics);

// Features for every pair; `aligned.symmetrized` must hold each heuristic.
std::vector<Features> extract_all(const std::vector<SentencePair>& pairs, const AlignedCorpus& aligned,
                                  const BilingualDictionary& dictionary, std::span<const Heuristic> heuristics,
                                  unsigned threads = 1);

struct LinearModel {
  std::vector<std::string> feature_names;
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> mean;
  std::vector<double> stddev;  // 1 for constant features
  double training_accuracy = 0.0;
  std::vector<double> loss_history;  // regularized loss after each epoch, starting with the initial loss
};

struct LinearOptions {
  double l2_strength = 1e-4;
  double learning_rate = 0.1;
  std::size_t epochs = 500;
  // Full-batch descent from zero weights draws no random numbers; the seed
  // is recorded for the run manifest only.
  std::uint64_t seed = 1;
};

// Logistic regression on standardized features; the positive class is
// Equivalent. A step that raises the loss is undone and the rate halved.
LinearModel train_linear(const std::vector<Features>& features, const std::vector<Label>& labels,
                         const std::vector<std::string>& names, const LinearOptions& options = {});

// Probability of Equivalent.
double score_linear(const LinearModel& model, const Features& features);

void save_linear_model(std::ostream& out, const LinearModel& model);
void save_linear_model_file(const std::filesystem::path& path, const LinearModel& model);
LinearModel load_linear_model(std::istream& in);
LinearModel load_linear_model_file(const std::filesystem::path& path);

// TSV: `pair_id` then one column per feature, with a header row.
void write_features(std::ostream& out, const std::vector<std::string>& names, const std::vector<SentencePair>& pairs,
                    const std::vector<Features>& features);

}  // namespace divergescope
