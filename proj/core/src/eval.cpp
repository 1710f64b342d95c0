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

#include "divergescope/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>

#include "divergescope/error.hpp"

namespace divergescope {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int index_of(Label l) { return l == Label::kEquivalent ? 0 : 1; }

double safe_ratio(std::size_t num, std::size_t den, bool& flagged) {
  if (den == 0) {
    flagged = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

EvalReport report_from_confusion(const std::array<std::array<std::size_t, 2>, 2>& confusion,
                                 OverallF mode) {
  EvalReport r;
  r.mode = mode;
  r.confusion = confusion;
  std::array<ClassMetrics*, 2> classes{&r.equivalent, &r.divergent};
  std::array<std::size_t, 2> support{};
  for (int c = 0; c < 2; ++c) {
    const std::size_t tp = confusion[c][c];
    const std::size_t predicted = confusion[c][0] + confusion[c][1];
    const std::size_t actual = confusion[0][c] + confusion[1][c];
    support[c] = actual;
    auto& m = *classes[c];
    m.precision = safe_ratio(tp, predicted, r.zero_denominator);
    m.recall = safe_ratio(tp, actual, r.zero_denominator);
    if (m.precision + m.recall > 0.0) {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    } else {
      m.f1 = 0.0;
      r.zero_denominator = true;
    }
  }
  if (mode == OverallF::kMacro) {
    r.overall_f = 0.5 * (r.equivalent.f1 + r.divergent.f1);
  } else {
    const double n = static_cast<double>(support[0] + support[1]);
    r.overall_f = (static_cast<double>(support[0]) * r.equivalent.f1 +
                   static_cast<double>(support[1]) * r.divergent.f1) / n;
  }
  return r;
}

}  // namespace

std::string_view overall_f_name(OverallF mode) {
  return mode == OverallF::kWeighted ? "weighted" : "macro";
}

OverallF parse_overall_f(std::string_view name) {
  if (name == "weighted") return OverallF::kWeighted;
  if (name == "macro") return OverallF::kMacro;
  throw UsageError(fmt::format("unknown overall-F mode '{}' (weighted|macro)", name));
}

EvalReport prf_report(std::span<const Label> predictions, std::span<const Label> gold,
                      OverallF mode) {
  if (predictions.size() != gold.size()) {
    throw UsageError(fmt::format("prf_report: {} predictions vs {} gold labels",
                                 predictions.size(), gold.size()));
  }
  if (gold.empty()) throw UsageError("prf_report: no gold examples");
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++confusion[index_of(predictions[i])][index_of(gold[i])];
  }
  return report_from_confusion(confusion, mode);
}

std::vector<Label> apply_threshold(std::span<const double> scores, double threshold) {
  std::vector<Label> out;
  out.reserve(scores.size());
  for (double s : scores) out.push_back(s >= threshold ? Label::kEquivalent : Label::kDivergent);
  return out;
}

ThresholdResult tune_threshold(std::span<const double> scores, std::span<const Label> labels,
                               OverallF mode) {
  if (scores.size() != labels.size()) {
    throw UsageError(fmt::format("tune_threshold: {} scores vs {} labels", scores.size(),
                                 labels.size()));
  }
  std::array<std::size_t, 2> support{};
  for (auto l : labels) ++support[index_of(l)];
  if (support[0] == 0 || support[1] == 0) {
    throw UsageError("tune_threshold needs at least one example of each class");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw DataError("tune_threshold: non-finite score");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });

  // Sweep from +inf downwards: everything starts predicted divergent and each
  // group of equal scores flips to equivalent together.
  std::array<std::array<std::size_t, 2>, 2> confusion{};
  confusion[1][0] = support[0];
  confusion[1][1] = support[1];

  ThresholdResult best{kInf, report_from_confusion(confusion, mode).overall_f};
  std::size_t k = 0;
  while (k < order.size()) {
    const double value = scores[order[k]];
    while (k < order.size() && scores[order[k]] == value) {
      const int g = index_of(labels[order[k]]);
      --confusion[1][g];
      ++confusion[0][g];
      ++k;
    }
    double threshold = -kInf;
    if (k < order.size()) {
      const double lower = scores[order[k]];
      threshold = lower + (value - lower) / 2.0;
      if (!(threshold > lower)) threshold = value;
    }
    const double f = report_from_confusion(confusion, mode).overall_f;
    // Candidates arrive in decreasing threshold order, so only a strict
    // improvement displaces the current (larger) threshold.
    if (f > best.overall_f + 1e-12) best = {threshold, f};
  }
  return best;
}

namespace {

struct Joined {
  std::vector<double> scores;
  std::vector<Label> labels;
};

Joined join(const std::vector<ScoredPair>& scores, const std::vector<LabeledPair>& labeled) {
  std::unordered_map<std::uint64_t, double> by_id;
  for (const auto& s : scores) by_id[s.pair_id] = s.score;
  Joined j;
  for (const auto& lp : labeled) {
    auto it = by_id.find(lp.pair.id);
    if (it == by_id.end()) throw DataError(fmt::format("no score for labeled pair {}", lp.pair.id));
    j.scores.push_back(it->second);
    j.labels.push_back(lp.label);
  }
  return j;
}

}  // namespace

ThresholdResult tune_threshold(const std::vector<ScoredPair>& scores,
                               const std::vector<LabeledPair>& labeled, OverallF mode) {
  const auto j = join(scores, labeled);
  return tune_threshold(j.scores, j.labels, mode);
}

EvalReport evaluate_scores(const std::vector<ScoredPair>& scores,
                           const std::vector<LabeledPair>& labeled, double threshold,
                           OverallF mode) {
  const auto j = join(scores, labeled);
  const auto predicted = apply_threshold(j.scores, threshold);
  return prf_report(predicted, j.labels, mode);
}

std::string format_report_text(const EvalReport& r, std::string_view title) {
  std::string out = fmt::format("{}\n", title);
  out += fmt::format("  {:<12} {:>8} {:>8} {:>8}\n", "class", "P", "R", "F");
  out += fmt::format("  {:<12} {:>8.4f} {:>8.4f} {:>8.4f}\n", "equivalent", r.equivalent.precision,
                     r.equivalent.recall, r.equivalent.f1);
  out += fmt::format("  {:<12} {:>8.4f} {:>8.4f} {:>8.4f}\n", "divergent", r.divergent.precision,
                     r.divergent.recall, r.divergent.f1);
  out += fmt::format("  overall F ({}): {:.4f}\n", overall_f_name(r.mode), r.overall_f);
  out += fmt::format("  confusion (pred\\gold)  eq: {} {}  div: {} {}\n", r.confusion[0][0],
                     r.confusion[0][1], r.confusion[1][0], r.confusion[1][1]);
  return out;
}

std::string format_report_kv(const EvalReport& r, double threshold) {
  std::string out;
  auto put = [&out](std::string_view key, double v) { out += fmt::format("{}\t{:.6f}\n", key, v); };
  put("threshold", threshold);
  put("equivalent_precision", r.equivalent.precision);
  put("equivalent_recall", r.equivalent.recall);
  put("equivalent_f1", r.equivalent.f1);
  put("divergent_precision", r.divergent.precision);
  put("divergent_recall", r.divergent.recall);
  put("divergent_f1", r.divergent.f1);
  put("overall_f", r.overall_f);
  out += fmt::format("overall_f_mode\t{}\n", overall_f_name(r.mode));
  out += fmt::format("pred_eq_gold_eq\t{}\npred_eq_gold_div\t{}\n", r.confusion[0][0],
                     r.confusion[0][1]);
  out += fmt::format("pred_div_gold_eq\t{}\npred_div_gold_div\t{}\n", r.confusion[1][0],
                     r.confusion[1][1]);
  out += fmt::format("zero_denominator\t{}\n", r.zero_denominator ? 1 : 0);
  return out;
}

void AnnotationMatrix::validate() const {
  if (raters_per_item < 2) {
    throw UsageError(fmt::format("need at least 2 raters per item, got {}", raters_per_item));
  }
  if (item_ids.size() != counts.size()) throw UsageError("annotation ids and rows differ in size");
  for (std::size_t r = 0; r < counts.size(); ++r) {
    if (counts[r][0] < 0 || counts[r][1] < 0 || counts[r][0] + counts[r][1] != raters_per_item) {
      throw DataError(fmt::format("item {}: counts {}+{} do not sum to {}", item_ids[r],
                                  counts[r][0], counts[r][1], raters_per_item));
    }
  }
}

AnnotationMatrix read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot read {}", path.string()));
  AnnotationMatrix m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    unsigned long long id = 0;
    int eq = 0, div = 0;
    char tail = 0;
    if (std::sscanf(line.c_str(), "%llu\t%d\t%d%c", &id, &eq, &div, &tail) != 3) {
      throw DataError(fmt::format("{}:{}: expected item_id<TAB>count_equivalent<TAB>count_divergent",
                                  path.string(), line_no));
    }
    const int n = eq + div;
    if (m.counts.empty()) {
      m.raters_per_item = n;
    } else if (n != m.raters_per_item) {
      throw DataError(fmt::format("{}:{}: {} ratings, expected {}", path.string(), line_no, n,
                                  m.raters_per_item));
    }
    m.item_ids.push_back(id);
    m.counts.push_back({eq, div});
  }
  m.validate();
  return m;
}

std::vector<MajorityLabel> majority_vote(const AnnotationMatrix& matrix) {
  matrix.validate();
  std::vector<MajorityLabel> out;
  out.reserve(matrix.counts.size());
  for (std::size_t r = 0; r < matrix.counts.size(); ++r) {
    const auto& c = matrix.counts[r];
    if (c[0] == c[1]) {
      throw DataError(fmt::format("item {}: tie with even raters ({} vs {})", matrix.item_ids[r],
                                  c[0], c[1]));
    }
    out.push_back(c[0] > c[1] ? MajorityLabel{Label::kEquivalent, c[0]}
                              : MajorityLabel{Label::kDivergent, c[1]});
  }
  return out;
}

KappaResult fleiss_kappa(const AnnotationMatrix& matrix) {
  matrix.validate();
  if (matrix.counts.size() < 2) throw UsageError("fleiss_kappa needs at least 2 items");
  const double n = matrix.raters_per_item;
  const double items = static_cast<double>(matrix.counts.size());

  double p_bar = 0.0;
  std::array<double, 2> category_total{};
  bool unanimous = true;
  for (const auto& c : matrix.counts) {
    double agree = 0.0;
    for (int j = 0; j < 2; ++j) {
      agree += static_cast<double>(c[j]) * static_cast<double>(c[j]);
      category_total[j] += c[j];
    }
    p_bar += (agree - n) / (n * (n - 1.0));
    if (c[0] != 0 && c[1] != 0) unanimous = false;
  }
  p_bar /= items;
  double p_e = 0.0;
  for (double total : category_total) {
    const double p = total / (items * n);
    p_e += p * p;
  }
  if (p_e >= 1.0) return {1.0, true};
  if (unanimous) return {1.0, false};
  return {(p_bar - p_e) / (1.0 - p_e), false};
}

}  // namespace divergescope
