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

// Cross-lingual Very Deep Pairwise Word Interaction model.
//
//   embeddings -> shared BiLSTM -> 13-channel similarity cube -> focus
//   re-weighting -> CNN -> FC -> softmax over (divergent, equivalent)

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "divergescope/autodiff.hpp"
#include "divergescope/corpus.hpp"
#include "divergescope/embed.hpp"
#include "divergescope/scores.hpp"

namespace divergescope {

struct CnnStage {
  std::size_t filters = 128;
  std::size_t kernel = 3;  // odd; stride 1, "same" zero padding
  std::size_t pool = 2;    // maxpool window and stride

  friend bool operator==(const CnnStage&, const CnnStage&) = default;
};

struct VdpwiConfig {
  std::size_t embedding_dim = 200;
  std::size_t lstm_hidden_dim = 250;  // per direction
  std::size_t grid_size = 32;
  // Sentences are truncated to min(max_sentence_length, grid_size) tokens.
  std::size_t max_sentence_length = 48;
  std::vector<CnnStage> cnn{{128, 3, 2}, {128, 3, 2}, {128, 3, 2}, {128, 3, 2}, {128, 3, 2}};
  std::size_t fc_dim = 128;
  bool focus = true;
  double focus_low_weight = 0.1;
  std::size_t epochs = 25;
  std::size_t batch_size = 1;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;

  // Hidden 64, grid 16, two conv stages of 32 filters pooling by 4.
  static VdpwiConfig desk(std::size_t embedding_dim);

  // Throws UsageError unless dims are positive and the CNN maps the grid to 1x1.
  void validate() const;
  std::size_t clamp_length() const;

  friend bool operator==(const VdpwiConfig&, const VdpwiConfig&) = default;
};

// Channel layout of the similarity cube: for each representation in
// {forward, backward, concatenation, sum}, the channels {cosine, -L2, dot};
// channel 12 is the valid-cell indicator.
inline constexpr std::size_t kCubeChannels = 13;
inline constexpr std::size_t kConcatCosineChannel = 6;
inline constexpr std::size_t kConcatDotChannel = 8;

struct VdpwiModel {
  VdpwiConfig config;
  ad::NamedParameters parameters;

  // Fresh parameters drawn from config.seed.
  static VdpwiModel initialize(const VdpwiConfig& config);

  const ad::Tensor& parameter(const std::string& name) const;
  std::vector<ad::Tensor> tensors() const;
};

struct BiStates {
  ad::Tensor forward;   // (L, H)
  ad::Tensor backward;  // (L, H), row t is the backward state at position t
};

// Shared BiLSTM over a (L, embedding_dim) sequence with zero initial states.
BiStates contextualize(const VdpwiModel& model, const ad::Tensor& sequence);

// (13, |e|, |f|).
ad::Tensor build_similarity_cube(const BiStates& e, const BiStates& f);

// Row-major (|e|, |f|) weights in {1, low}: two greedy matching passes, by
// the concatenation cosine then the concatenation dot channel, ties broken
// row-major.
std::vector<double> focus_mask(const ad::Tensor& cube, double low_weight = 0.1);
ad::Tensor apply_focus(const ad::Tensor& cube, double low_weight = 0.1);

// Pads to the grid and runs CNN + FC + softmax; returns (divergent, equivalent).
ad::Tensor cnn_score(const VdpwiModel& model, const ad::Tensor& focus_cube);

// Token sequence as a (L, embedding_dim) constant, OOV rows zero, truncated.
ad::Tensor embed_sentence(const Tokens& tokens, const EmbeddingTable& table, Language language,
                          std::size_t max_length);

ad::Tensor forward(const VdpwiModel& model, const SentencePair& pair, const EmbeddingTable& embeddings);

// Equivalent-class probability.
double score_pair(const VdpwiModel& model, const SentencePair& pair, const EmbeddingTable& embeddings);
std::vector<ScoredPair> score_pairs(const VdpwiModel& model, const std::vector<SentencePair>& pairs,
                                    const EmbeddingTable& embeddings, unsigned threads = 1);

// Pairs with at least one side longer than the clamp length.
std::size_t count_truncated(const std::vector<SentencePair>& pairs, const VdpwiConfig& config);

// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_kl = 0.0;           // mean over the epoch's updates
  double validation_pearson = 0.0; // -1 when undefined
};

struct VdpwiTrainResult {
  VdpwiModel model;                  // snapshot of the selected epoch
  std::size_t selected_epoch = 0;    // 1-based
  double initial_train_kl = 0.0;     // mean training KL before any update
  std::vector<EpochRecord> history;
  std::vector<std::string> warnings;
};

struct VdpwiTrainOptions {
  // Called after each epoch with the current (not yet selected) model.
  std::function<void(std::size_t epoch, const VdpwiModel& model)> on_epoch;
};

VdpwiTrainResult train_vdpwi(const std::vector<LabeledPair>& train, const std::vector<LabeledPair>& validation,
                             const VdpwiConfig& config, const EmbeddingTable& embeddings,
                             const VdpwiTrainOptions& options = {});

// Header lines `# vdpwi <key> <value>` followed by the parameter container.
void save_vdpwi(std::ostream& out, const VdpwiModel& model);
void save_vdpwi_file(const std::filesystem::path& path, const VdpwiModel& model);
VdpwiModel load_vdpwi(std::istream& in);
VdpwiModel load_vdpwi_file(const std::filesystem::path& path);

std::string format_cnn_spec(const std::vector<CnnStage>& stages);  // "128x3x2,64x3x2"
std::vector<CnnStage> parse_cnn_spec(const std::string& text);

}  // namespace divergescope
