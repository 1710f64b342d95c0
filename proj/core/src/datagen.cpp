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

#include "divergescope/datagen.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <thread>
#include <unordered_set>

#include <fmt/format.h>

#include "divergescope/error.hpp"

namespace divergescope {

double coverage(const Tokens& e_tokens, const Tokens& f_tokens, const BilingualDictionary& dictionary,
                Direction direction) {
  const bool e_side = direction == Direction::kEtoF;
  const Tokens& source = e_side ? e_tokens : f_tokens;
  const Tokens& other = e_side ? f_tokens : e_tokens;
  const auto& table = e_side ? dictionary.e_to_f : dictionary.f_to_e;
  if (source.empty()) return 0.0;
  const std::unordered_set<std::string> present(other.begin(), other.end());
  std::size_t covered = 0;
  for (const auto& word : source) {
    const auto it = table.find(word);
    if (it == table.end()) continue;
    for (const auto& [translation, prob] : it->second) {
      if (present.contains(translation)) {
        ++covered;
        break;
      }
    }
  }
  return static_cast<double>(covered) / static_cast<double>(source.size());
}

namespace {

bool passes_filters(const Tokens& e, const Tokens& f, const BilingualDictionary& dictionary,
                    const NegativeOptions& options) {
  if (e.empty() || f.empty()) return false;
  const double longer = static_cast<double>(std::max(e.size(), f.size()));
  const double shorter = static_cast<double>(std::min(e.size(), f.size()));
  if (longer / shorter > options.max_length_ratio) return false;
  if (coverage(e, f, dictionary, Direction::kEtoF) < options.min_coverage) return false;
  if (options.bidirectional_coverage && coverage(e, f, dictionary, Direction::kFtoE) < options.min_coverage) {
    return false;
  }
  return true;
}

}  // namespace

std::vector<SentencePair> generate_negatives(const std::vector<SentencePair>& positives,
                                             const BilingualDictionary& dictionary,
                                             const NegativeOptions& options) {
  if (positives.empty()) throw UsageError("generate_negatives: no positive pairs");
  if (dictionary.empty()) throw UsageError("generate_negatives: dictionary is empty");
  if (!(options.max_length_ratio >= 1.0)) throw UsageError("max_length_ratio must be at least 1");

  std::set<std::pair<Tokens, Tokens>> positive_set;
  for (const auto& p : positives) positive_set.emplace(p.e_tokens, p.f_tokens);

  const std::size_t n = positives.size();
  // Window of `w` nearest positions: w/2 on each side, widened on the
  // side away from a corpus edge.
  auto candidate_range = [&](std::size_t i) -> std::pair<std::size_t, std::size_t> {
    if (options.window == 0 || options.window + 1 >= n) return {0, n};
    const std::size_t w = options.window;
    std::size_t lo = i >= w / 2 ? i - w / 2 : 0;
    std::size_t hi = std::min(n, lo + w + 1);
    lo = hi - (w + 1);
    return {lo, hi};
  };

  const unsigned threads = std::max(1u, options.threads);
  std::vector<std::vector<SentencePair>> per_source(n);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto [lo, hi] = candidate_range(i);
      for (std::size_t j = lo; j < hi; ++j) {
        if (i == j) continue;
        const auto& e = positives[i].e_tokens;
        const auto& f = positives[j].f_tokens;
        if (!passes_filters(e, f, dictionary, options)) continue;
        if (positive_set.contains({e, f})) continue;
        per_source[i].push_back({0, e, f});
      }
    }
  };
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (std::size_t begin = 0; begin < n; begin += chunk) pool.emplace_back(work, begin, std::min(n, begin + chunk));
  }

  std::vector<SentencePair> out;
  for (auto& bucket : per_source) {
    std::move(bucket.begin(), bucket.end(), std::back_inserter(out));
  }
  return out;
}

SyntheticDataset assemble_dataset(const std::vector<SentencePair>& positives,
                                  const std::vector<SentencePair>& negative_pool, std::size_t ratio,
                                  std::uint64_t seed) {
  if (positives.empty()) throw DataError("assemble_dataset: no positive examples");
  if (ratio < 1) throw UsageError("assemble_dataset: ratio must be at least 1");

  std::mt19937_64 rng(seed);
  const std::size_t wanted = ratio * positives.size();
  std::vector<std::size_t> order(negative_pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t taken = std::min(wanted, order.size());
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(taken));

  SyntheticDataset dataset;
  dataset.generation_seed = seed;
  dataset.positive_count = positives.size();
  dataset.negative_count = taken;
  for (const auto& p : positives) dataset.examples.push_back({p, Label::kEquivalent});
  for (std::size_t k = 0; k < taken; ++k) dataset.examples.push_back({negative_pool[order[k]], Label::kDivergent});
  std::shuffle(dataset.examples.begin(), dataset.examples.end(), rng);
  for (std::size_t k = 0; k < dataset.examples.size(); ++k) dataset.examples[k].pair.id = k;

  if (taken < wanted) {
    const std::size_t g = std::gcd(positives.size(), taken);
    dataset.warning = g == 0 ? "achieved ratio 1:0"
                             : fmt::format("achieved ratio {}:{}", positives.size() / g, taken / g);
  }
  return dataset;
}

std::vector<SentencePair> sample_pairs(const std::vector<SentencePair>& pairs, std::size_t count,
                                       std::uint64_t seed) {
  if (count >= pairs.size()) return pairs;
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  order.resize(count);
  std::sort(order.begin(), order.end());
  std::vector<SentencePair> out;
  out.reserve(count);
  for (auto i : order) out.push_back(pairs[i]);
  return out;
}

}  // namespace divergescope
