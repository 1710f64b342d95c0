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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "divergescope/error.hpp"
#include "divergescope/select.hpp"

namespace divergescope {
namespace {

std::vector<SentencePair> corpus(std::size_t n) {
  std::vector<SentencePair> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({i, {"e" + std::to_string(i)}, {"f" + std::to_string(i)}});
  }
  return out;
}

std::vector<ScoredPair> ingest(const std::string& text, std::size_t n) {
  std::istringstream in(text);
  return ingest_scores(in, corpus(n));
}

TEST(IngestScores, ParsesRecords) {
  const auto s = ingest("0\t0.91\n1\t0.20\n", 2);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0], (ScoredPair{0, 0.91}));
  EXPECT_EQ(s[1], (ScoredPair{1, 0.20}));
}

TEST(IngestScores, Errors) {
  EXPECT_THROW(ingest("0\t0.5\n0\t0.4\n", 2), DataError);
  EXPECT_THROW(ingest("0\tNaN\n", 2), DataError);
  EXPECT_THROW(ingest("0\tinf\n", 2), DataError);
  EXPECT_THROW(ingest("7\t0.5\n", 2), DataError);
  EXPECT_THROW(ingest("0 0.5\n", 2), DataError);
  EXPECT_THROW(ingest("x\t0.5\n", 2), DataError);
}

TEST(IngestScores, NonNumericNamesTheLine) {
  try {
    ingest("0\t0.5\n1\thigh\n", 2);
    FAIL() << "expected an error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(IngestScores, UnknownIdIsNamed) {
  try {
    ingest("0\t0.5\n9\t0.1\n8\t0.3\n", 2);
    FAIL() << "expected an error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("pair id 9"), std::string::npos);
  }
}

TEST(KeptCount, Ceiling) {
  EXPECT_EQ(kept_count(10, 0.5), 5u);
  EXPECT_EQ(kept_count(10, 0.55), 6u);
  EXPECT_EQ(kept_count(3, 1.0), 3u);
  EXPECT_EQ(kept_count(120000, 0.9), 108000u);
  EXPECT_EQ(kept_count(1, 0.01), 1u);
  EXPECT_THROW(kept_count(10, 0.0), UsageError);
  EXPECT_THROW(kept_count(10, 1.5), UsageError);
}

TEST(SelectTop, KeepsHalfByScore) {
  const auto pairs = corpus(10);
  const auto scores = random_scores(pairs, 3);
  const auto kept = select_top(pairs, scores, 0.5);
  ASSERT_EQ(kept.size(), 5u);
  std::set<std::uint64_t> ids;
  for (const auto& p : kept) ids.insert(p.id);
  double min_kept = INFINITY;
  double max_dropped = -INFINITY;
  for (const auto& s : scores) {
    if (ids.contains(s.pair_id)) {
      min_kept = std::min(min_kept, s.score);
    } else {
      max_dropped = std::max(max_dropped, s.score);
    }
  }
  EXPECT_GE(min_kept, max_dropped);
}

TEST(SelectTop, KeepAllIsIdentity) {
  const auto pairs = corpus(17);
  EXPECT_EQ(select_top(pairs, random_scores(pairs, 1), 1.0), pairs);
}

TEST(SelectTop, TiesGoToSmallerId) {
  const auto pairs = corpus(6);
  const std::vector<ScoredPair> scores{{0, 0.1}, {1, 0.5}, {2, 0.5}, {3, 0.9}, {4, 0.5}, {5, 0.2}};
  const auto kept = select_top(pairs, scores, 0.5);
  ASSERT_EQ(kept.size(), 3u);
  EXPECT_EQ(kept[0].id, 1u);
  EXPECT_EQ(kept[1].id, 2u);
  EXPECT_EQ(kept[2].id, 3u);
}

TEST(SelectTop, MissingScoresAreCounted) {
  const auto pairs = corpus(4);
  try {
    select_top(pairs, {{0, 0.5}, {2, 0.1}}, 0.5);
    FAIL() << "expected an error";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("2 of 4"), std::string::npos);
  }
}

TEST(SelectTop, RandomPropertiesAndMonotoneInvariance) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    auto pairs = corpus(n);
    std::shuffle(pairs.begin(), pairs.end(), rng);
    std::vector<ScoredPair> scores;
    for (const auto& p : pairs) scores.push_back({p.id, static_cast<double>(rng() % 20) / 20.0});
    const double keep = 0.05 + static_cast<double>(rng() % 95) / 100.0;
    const auto kept = select_top(pairs, scores, keep);
    ASSERT_EQ(kept.size(), kept_count(n, keep));

    // Subset of the input in corpus order.
    std::size_t cursor = 0;
    for (const auto& k : kept) {
      while (cursor < pairs.size() && pairs[cursor].id != k.id) ++cursor;
      ASSERT_LT(cursor, pairs.size());
      ++cursor;
    }

    std::vector<ScoredPair> transformed = scores;
    for (auto& s : transformed) s.score = std::exp(3.0 * s.score) - 7.0;
    EXPECT_EQ(select_top(pairs, transformed, keep), kept);
  }
}

TEST(RandomScores, SeededAndUniform) {
  const auto pairs = corpus(1000);
  const auto a = random_scores(pairs, 5);
  EXPECT_EQ(a, random_scores(pairs, 5));
  EXPECT_NE(a, random_scores(pairs, 6));
  for (const auto& s : a) {
    EXPECT_GE(s.score, 0.0);
    EXPECT_LT(s.score, 1.0);
  }
}

TEST(WriteSelection, WritesThreeFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "divergescope_select_test";
  std::filesystem::create_directories(dir);
  auto pairs = corpus(3);
  pairs.erase(pairs.begin() + 1);
  write_selection(dir / "kept.e", dir / "kept.f", dir / "kept.ids", pairs);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  EXPECT_EQ(slurp(dir / "kept.e"), "e0\ne2\n");
  EXPECT_EQ(slurp(dir / "kept.f"), "f0\nf2\n");
  EXPECT_EQ(slurp(dir / "kept.ids"), "0\n2\n");
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace divergescope
