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

// Pipeline stages behind each subcommand. Stages talk to each other only
// through files in the output directory:
//
//   corpus.tsv                      loaded corpus with pair ids
//   aligner.e2f, aligner.f2e        directional IBM Model 2 parameters
//   corpus.align.<name>             forward, reverse and symmetrized links
//   dict.e2f.tsv, dict.f2e.tsv      bilingual dictionary
//   train.tsv, dev.tsv, test.tsv    synthetic labeled datasets
//   embeddings.txt                  bilingual word vectors
//   vdpwi.model, vdpwi.history.tsv  divergence model and its training curve
//   feat.model.json                 feature classifier
//   scores.<model>.<input>.tsv      pair_id<TAB>score
//   threshold.<model>.txt           tuned on dev
//   report.<model>.txt/.tsv         test-set evaluation
//   summary.tsv                     one line per scorer
//   selected.{e,f,ids}              data selection output
//   manifest.<subcommand>.json      config, seeds, input and output hashes

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "divergescope/cli/config.hpp"
#include "divergescope/corpus.hpp"
#include "divergescope/eval.hpp"
#include "divergescope/scores.hpp"

namespace divergescope::cli {

class Run {
 public:
  Run(Config config, std::string subcommand, std::ostream& log);

  const Config& config() const { return config_; }
  std::ostream& log() { return log_; }

  // Location of an artifact in the output directory.
  std::filesystem::path artifact(const std::string& name) const;
  // Records a file read or written by this run, returning it unchanged.
  const std::filesystem::path& input(const std::filesystem::path& path);
  const std::filesystem::path& output(const std::filesystem::path& path);

  // manifest.<subcommand>.json with config, seeds, versions, hashes.
  std::filesystem::path write_manifest();

 private:
  Config config_;
  std::string subcommand_;
  std::ostream& log_;
  std::set<std::filesystem::path> inputs_;
  std::set<std::filesystem::path> outputs_;
};

// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

std::vector<SentencePair> load_corpus(Run& run);

void stage_align(Run& run);
void stage_dict(Run& run);
void stage_datagen(Run& run);
void stage_train_embed(Run& run);
void stage_train_vdpwi(Run& run);
void stage_train_feat(Run& run);

// `input` is train, dev, test, corpus, or a path to an unlabeled TSV.
// `model` is vdpwi, feat, cosine or random; with `scores_file` it only
// names the output, and the file is validated and copied.
std::filesystem::path stage_score(Run& run, const std::string& model, const std::string& input,
                                  const std::optional<std::filesystem::path>& scores_file = std::nullopt);

ThresholdResult stage_tune(Run& run, const std::string& model);
EvalReport stage_eval(Run& run, const std::string& model);
KappaResult stage_kappa(Run& run, const std::filesystem::path& annotations);
std::vector<SentencePair> stage_select(Run& run, const std::string& model,
                                       const std::optional<std::filesystem::path>& scores_file = std::nullopt);

struct ScorerResult {
  std::string model;
  double threshold = 0.0;
  double dev_overall_f = 0.0;
  EvalReport test;
};

// Every stage in order; evaluates cosine, feat and vdpwi on the test set.
std::vector<ScorerResult> stage_pipeline(Run& run);

}  // namespace divergescope::cli
