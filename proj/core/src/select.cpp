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

#include "divergescope/select.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <random>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "divergescope/error.hpp"

namespace divergescope {

std::vector<ScoredPair> ingest_scores(std::istream& in, std::span<const SentencePair> corpus) {
  std::unordered_set<std::uint64_t> known;
  for (const auto& p : corpus) known.insert(p.id);
  std::unordered_set<std::uint64_t> seen;
  std::vector<ScoredPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError(fmt::format("scores line {}: expected pair_id<TAB>score", line_no));
    ScoredPair s;
    const char* id_end = line.data() + tab;
    const auto [id_ptr, id_ec] = std::from_chars(line.data(), id_end, s.pair_id);
    if (id_ec != std::errc() || id_ptr != id_end) {
      throw DataError(fmt::format("scores line {}: bad pair id '{}'", line_no, line.substr(0, tab)));
    }
    const std::string text = line.substr(tab + 1);
    const auto [sc_ptr, sc_ec] = std::from_chars(text.data(), text.data() + text.size(), s.score);
    if (sc_ec != std::errc() || sc_ptr != text.data() + text.size()) {
      throw DataError(fmt::format("scores line {}: non-numeric score '{}'", line_no, text));
    }
    if (!std::isfinite(s.score)) throw DataError(fmt::format("scores line {}: score is not finite", line_no));
    if (!seen.insert(s.pair_id).second) {
      throw DataError(fmt::format("scores line {}: duplicate pair id {}", line_no, s.pair_id));
    }
    if (!known.contains(s.pair_id)) {
      throw DataError(fmt::format("scores line {}: pair id {} is not in the corpus", line_no, s.pair_id));
    }
    out.push_back(s);
  }
  return out;
}

std::vector<ScoredPair> ingest_scores_file(const std::filesystem::path& path, std::span<const SentencePair> corpus) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open scores {}", path.string()));
  return ingest_scores(in, corpus);
}

std::size_t kept_count(std::size_t n, double keep_fraction) {
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0)) {
    throw UsageError(fmt::format("keep fraction {} is outside (0, 1]", keep_fraction));
  }
  const double exact = keep_fraction * static_cast<double>(n);
  const auto k = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::min(k, n);
}

std::vector<SentencePair> select_top(const std::vector<SentencePair>& pairs, const std::vector<ScoredPair>& scores,
                                     double keep_fraction) {
  const std::size_t k = kept_count(pairs.size(), keep_fraction);
  std::unordered_map<std::uint64_t, double> by_id;
  for (const auto& s : scores) by_id.emplace(s.pair_id, s.score);
  std::size_t missing = 0;
  for (const auto& p : pairs) missing += !by_id.contains(p.id);
  if (missing > 0) throw DataError(fmt::format("select: {} of {} pairs have no score", missing, pairs.size()));

  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto better = [&](std::size_t a, std::size_t b) {
    const double sa = by_id.at(pairs[a].id);
    const double sb = by_id.at(pairs[b].id);
    if (sa != sb) return sa > sb;
    return pairs[a].id < pairs[b].id;
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);
  order.resize(k);
  std::sort(order.begin(), order.end());
  std::vector<SentencePair> kept;
  kept.reserve(k);
  for (std::size_t i : order) kept.push_back(pairs[i]);
  return kept;
}

std::vector<ScoredPair> random_scores(const std::vector<SentencePair>& pairs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<ScoredPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back({p.id, uniform(rng)});
  return out;
}

void write_selection(const std::filesystem::path& source_path, const std::filesystem::path& target_path,
                     const std::filesystem::path& ids_path, const std::vector<SentencePair>& kept) {
  write_parallel(source_path, target_path, kept);
  std::ofstream ids(ids_path);
  if (!ids) throw DataError(fmt::format("cannot write {}", ids_path.string()));
  for (const auto& p : kept) ids << p.id << '\n';
}

}  // namespace divergescope
