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

// Threshold tuning, per-class precision/recall/F, majority-vote label
// aggregation, and Fleiss' kappa.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "divergescope/corpus.hpp"
#include "divergescope/scores.hpp"

namespace divergescope {

// How the two per-class F scores combine into the overall F.
enum class OverallF { kWeighted, kMacro };

std::string_view overall_f_name(OverallF mode);
OverallF parse_overall_f(std::string_view name);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  ClassMetrics equivalent;
  ClassMetrics divergent;
  double overall_f = 0.0;
  OverallF mode = OverallF::kWeighted;

  // confusion[predicted][gold], index 0 = equivalent, 1 = divergent.
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  // Set when any precision/recall/F had a zero denominator and was reported as 0.
  bool zero_denominator = false;
};

EvalReport prf_report(std::span<const Label> predictions, std::span<const Label> gold,
                      OverallF mode = OverallF::kWeighted);

struct ThresholdResult {
  double threshold = 0.0;  // may be +/-infinity
  double overall_f = 0.0;
};

// Predict Equivalent iff score >= threshold.
std::vector<Label> apply_threshold(std::span<const double> scores, double threshold);

// Tries the midpoints between consecutive distinct scores plus -inf/+inf and
// keeps the best overall F; ties go to the larger threshold.
ThresholdResult tune_threshold(std::span<const double> scores, std::span<const Label> labels,
                               OverallF mode = OverallF::kWeighted);

// Joins scores to labeled pairs by id (every labeled pair must be scored).
ThresholdResult tune_threshold(const std::vector<ScoredPair>& scores,
                               const std::vector<LabeledPair>& labeled,
                               OverallF mode = OverallF::kWeighted);
EvalReport evaluate_scores(const std::vector<ScoredPair>& scores,
                           const std::vector<LabeledPair>& labeled, double threshold,
                           OverallF mode = OverallF::kWeighted);

// Human-readable table and flat `metric<TAB>value` file.
std::string format_report_text(const EvalReport& report, std::string_view title);
std::string format_report_kv(const EvalReport& report, double threshold);

// Crowd annotation counts per item over {equivalent, divergent}.
struct AnnotationMatrix {
  std::vector<std::uint64_t> item_ids;
  std::vector<std::array<int, 2>> counts;  // [equivalent, divergent]
  int raters_per_item = 0;

  void validate() const;
};

// `item_id<TAB>count_equivalent<TAB>count_divergent`.
AnnotationMatrix read_annotations(const std::filesystem::path& path);

struct MajorityLabel {
  Label label = Label::kEquivalent;
  int agreement = 0;
};

std::vector<MajorityLabel> majority_vote(const AnnotationMatrix& matrix);

struct KappaResult {
  double kappa = 0.0;
  // Expected agreement was 1 (every rating in one category); kappa reported as 1.
  bool degenerate = false;
};

KappaResult fleiss_kappa(const AnnotationMatrix& matrix);

}  // namespace divergescope
