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

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "divergescope/align.hpp"
#include "divergescope/cipher.hpp"
#include "divergescope/error.hpp"
#include "oracles.hpp"

namespace divergescope {
namespace {

SentencePair sp(std::uint64_t id, Tokens e, Tokens f) { return {id, std::move(e), std::move(f)}; }

Alignment links(int e_len, int f_len, std::set<std::pair<int, int>> l) {
  return Alignment{std::move(l), e_len, f_len};
}

void expect_normalized(const TranslationTable& table) {
  for (std::size_t s = 0; s < table.rows.size(); ++s) {
    if (table.rows[s].empty()) continue;
    double sum = 0.0;
    for (const auto& [t, p] : table.rows[s]) {
      ASSERT_GE(p, 0.0);
      ASSERT_LE(p, 1.0);
      sum += p;
    }
    ASSERT_NEAR(sum, 1.0, 1e-6) << "row " << table.source.word(static_cast<int>(s));
  }
}

void expect_normalized(const Ibm2Model& model) {
  expect_normalized(model.table);
  for (const auto& [key, dist] : model.align_prob) {
    ASSERT_EQ(dist.size(), static_cast<std::size_t>(key.source_length) + 1);
    double sum = 0.0;
    for (double p : dist) sum += p;
    ASSERT_NEAR(sum, 1.0, 1e-6);
  }
}

void expect_non_decreasing(const std::vector<double>& ll) {
  for (std::size_t k = 1; k < ll.size(); ++k) {
    EXPECT_GE(ll[k], ll[k - 1] - 1e-9 * std::abs(ll[k - 1])) << "iteration " << k;
  }
}

oracle::Bitext to_bitext(const std::vector<SentencePair>& pairs) {
  oracle::Bitext b;
  for (const auto& p : pairs) b.emplace_back(p.e_tokens, p.f_tokens);
  return b;
}

const std::vector<SentencePair> kTwoPairCorpus = {sp(0, {"a", "b"}, {"x", "y"}), sp(1, {"a"}, {"x"})};

TEST(Ibm1, AmbiguityResolvesTowardSharedWord) {
  const auto r = train_ibm1(kTwoPairCorpus, Direction::kEtoF, 20);
  EXPECT_GT(r.table.prob("a", "x"), 0.9);
  // The enumeration oracle agrees on the same quantity.
  const auto o = oracle::brute_force_em(to_bitext(kTwoPairCorpus), 20, 0);
  EXPECT_GT(o.t.at({"a", "x"}), 0.9);
  EXPECT_NEAR(r.table.prob("a", "x"), o.t.at({"a", "x"}), 1e-12);
}

TEST(Ibm1, SinglePairOneIteration) {
  const auto r = train_ibm1({sp(0, {"a"}, {"x"})}, Direction::kEtoF, 1);
  EXPECT_DOUBLE_EQ(r.table.prob("a", "x"), 1.0);
  EXPECT_DOUBLE_EQ(r.table.prob(std::string(Vocabulary::kNullWord), "x"), 1.0);
}

TEST(Ibm1, ZeroIterationsIsUniformOverCooccurrence) {
  const auto r = train_ibm1(kTwoPairCorpus, Direction::kEtoF, 0);
  EXPECT_DOUBLE_EQ(r.table.prob("a", "x"), 0.5);
  EXPECT_DOUBLE_EQ(r.table.prob("a", "y"), 0.5);
  EXPECT_DOUBLE_EQ(r.table.prob("b", "x"), 0.5);
  EXPECT_EQ(r.log_likelihood.size(), 1u);
}

TEST(Ibm1, EmptyCorpusRejected) {
  EXPECT_THROW(train_ibm1({}, Direction::kEtoF, 1), UsageError);
}

TEST(Ibm1, MatchesEnumerationOracle) {
  std::mt19937 rng(3);
  const std::vector<std::string> ev = {"a", "b", "c", "d"}, fv = {"w", "x", "y", "z", "v"};
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<SentencePair> corpus;
    for (int n = 0; n < 5; ++n) {
      SentencePair p;
      p.id = static_cast<std::uint64_t>(n);
      for (std::size_t k = 0, len = 1 + rng() % 3; k < len; ++k) p.e_tokens.push_back(ev[rng() % ev.size()]);
      for (std::size_t k = 0, len = 1 + rng() % 4; k < len; ++k) p.f_tokens.push_back(fv[rng() % fv.size()]);
      corpus.push_back(p);
    }
    const auto impl = train_ibm1(corpus, Direction::kEtoF, 4);
    const auto ref = oracle::brute_force_em(to_bitext(corpus), 4, 0);
    for (const auto& [key, p] : ref.t) {
      ASSERT_NEAR(impl.table.prob(key.first, key.second), p, 1e-12);
    }
    ASSERT_EQ(impl.log_likelihood.size(), ref.log_likelihood.size());
    for (std::size_t k = 0; k < ref.log_likelihood.size(); ++k) {
      ASSERT_NEAR(impl.log_likelihood[k], ref.log_likelihood[k], 1e-9);
    }
  }
}

TEST(Ibm2, MatchesEnumerationOracle) {
  std::mt19937 rng(9);
  const std::vector<std::string> ev = {"a", "b", "c"}, fv = {"x", "y", "z", "w"};
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<SentencePair> corpus;
    for (int n = 0; n < 6; ++n) {
      SentencePair p;
      p.id = static_cast<std::uint64_t>(n);
      for (std::size_t k = 0, len = 1 + rng() % 3; k < len; ++k) p.e_tokens.push_back(ev[rng() % ev.size()]);
      for (std::size_t k = 0, len = 1 + rng() % 3; k < len; ++k) p.f_tokens.push_back(fv[rng() % fv.size()]);
      corpus.push_back(p);
    }
    const auto ibm1 = train_ibm1(corpus, Direction::kEtoF, 2);
    const auto impl = train_ibm2(corpus, Direction::kEtoF, 3, ibm1.table);
    const auto ref = oracle::brute_force_em(to_bitext(corpus), 2, 3);
    for (const auto& [key, p] : ref.t) {
      ASSERT_NEAR(impl.model.table.prob(key.first, key.second), p, 1e-12);
    }
    for (const auto& [key, p] : ref.a) {
      const auto [j, i, ls, lt] = key;
      ASSERT_NEAR(impl.model.alignment_prob(j, {i, ls, lt}), p, 1e-12);
    }
    // Oracle: ibm1 history followed by the per-iteration Model 2 values.
    std::vector<double> combined = ibm1.log_likelihood;
    combined.insert(combined.end(), impl.log_likelihood.begin() + 1, impl.log_likelihood.end());
    ASSERT_EQ(combined.size(), ref.log_likelihood.size());
    for (std::size_t k = 0; k < combined.size(); ++k) {
      ASSERT_NEAR(combined[k], ref.log_likelihood[k], 1e-9);
    }
  }
}

TEST(Ibm2, ZeroIterationsKeepsInitAndUniformPositions) {
  const auto ibm1 = train_ibm1(kTwoPairCorpus, Direction::kEtoF, 3);
  const auto r = train_ibm2(kTwoPairCorpus, Direction::kEtoF, 0, ibm1.table);
  EXPECT_EQ(r.model.table.rows, ibm1.table.rows);
  for (const auto& [key, dist] : r.model.align_prob) {
    for (double p : dist) EXPECT_DOUBLE_EQ(p, 1.0 / (key.source_length + 1));
  }
}

TEST(Ibm2, InitMustCoverVocabulary) {
  const auto ibm1 = train_ibm1({sp(0, {"a"}, {"x"})}, Direction::kEtoF, 1);
  EXPECT_THROW(train_ibm2(kTwoPairCorpus, Direction::kEtoF, 1, ibm1.table), UsageError);
}

TEST(Em, LogLikelihoodMonotoneAndNormalizedOnCipher) {
  const auto cipher = make_cipher_corpus({});
  for (auto dir : {Direction::kEtoF, Direction::kFtoE}) {
    auto ibm1 = train_ibm1(cipher.pairs, dir, 10);
    expect_non_decreasing(ibm1.log_likelihood);
    expect_normalized(ibm1.table);
    auto ibm2 = train_ibm2(cipher.pairs, dir, 10, ibm1.table);
    expect_non_decreasing(ibm2.log_likelihood);
    EXPECT_NEAR(ibm2.log_likelihood.front(), ibm1.log_likelihood.back(),
                1e-9 * std::abs(ibm1.log_likelihood.back()));
    expect_normalized(ibm2.model);
  }
}

TEST(Em, NormalizedAfterEveryIteration) {
  CipherOptions opt;
  opt.pairs = 200;
  const auto cipher = make_cipher_corpus(opt);
  const auto ibm1 = train_ibm1(cipher.pairs, Direction::kEtoF, 2);
  for (int k = 0; k <= 4; ++k) {
    expect_normalized(train_ibm1(cipher.pairs, Direction::kEtoF, k).table);
    expect_normalized(train_ibm2(cipher.pairs, Direction::kEtoF, k, ibm1.table).model);
  }
}

TEST(Em, ThreadCountDoesNotChangeResult) {
  CipherOptions opt;
  opt.pairs = 1500;  // several chunks
  const auto cipher = make_cipher_corpus(opt);
  const auto serial = train_aligner(cipher.pairs, Direction::kEtoF, 3, 3, {1});
  const auto parallel = train_aligner(cipher.pairs, Direction::kEtoF, 3, 3, {3});
  EXPECT_EQ(serial.table.rows, parallel.table.rows);
  EXPECT_EQ(serial.align_prob, parallel.align_prob);
}

TEST(Ibm2, RecoversCipher) {
  const auto cipher = make_cipher_corpus({});
  const auto model = train_aligner(cipher.pairs, Direction::kEtoF, 5, 5);
  int correct = 0;
  for (const auto& [src, tgt] : cipher.cipher) correct += model.table.best_translation(src) == tgt;
  EXPECT_GE(correct, 48);  // >= 95% of 50 types
}

double diagonal_spread(const Ibm2Model& model) {
  double total = 0.0;
  for (const auto& [key, dist] : model.align_prob) {
    double mass = 0.0, spread = 0.0;
    for (int j = 1; j <= key.source_length; ++j) {
      const double d = std::abs(static_cast<double>(j) / key.source_length -
                                static_cast<double>(key.target_position + 1) / key.target_length);
      spread += dist[static_cast<std::size_t>(j)] * d;
      mass += dist[static_cast<std::size_t>(j)];
    }
    total += spread / mass;
  }
  return total / static_cast<double>(model.align_prob.size());
}

TEST(Ibm2, MonotoneCorpusConcentratesOnDiagonal) {
  CipherOptions opt;
  opt.noise = 0.0;
  opt.swap_probability = 0.0;
  opt.pairs = 1000;
  const auto cipher = make_cipher_corpus(opt);
  const auto ibm1 = train_ibm1(cipher.pairs, Direction::kEtoF, 5);
  double previous = diagonal_spread(train_ibm2(cipher.pairs, Direction::kEtoF, 0, ibm1.table).model);
  for (int k : {1, 2, 5}) {
    const double spread = diagonal_spread(train_ibm2(cipher.pairs, Direction::kEtoF, k, ibm1.table).model);
    EXPECT_LT(spread, previous) << "after " << k << " iterations";
    previous = spread;
  }
}

// Hand-built model: t and uniform positions unless overridden.
Ibm2Model handmade(Direction d, const std::vector<std::tuple<std::string, std::string, double>>& t) {
  Ibm2Model m;
  m.direction = d;
  for (const auto& [s, w, p] : t) {
    const int sid = s == Vocabulary::kNullWord ? Vocabulary::kNull : m.table.source.add(s);
    const int tid = m.table.target.add(w);
    if (m.table.rows.size() <= static_cast<std::size_t>(sid)) m.table.rows.resize(sid + 1);
    m.table.rows[static_cast<std::size_t>(sid)][tid] = p;
  }
  return m;
}

TEST(Viterbi, ForcedArgmax) {
  auto m = handmade(Direction::kEtoF, {{"a", "x", 1.0}});
  const auto r = viterbi_align(m, sp(0, {"a"}, {"x"}));
  EXPECT_EQ(r.alignment.links, (std::set<std::pair<int, int>>{{0, 0}}));
  EXPECT_EQ(r.oov_tokens, 0u);
}

TEST(Viterbi, NullMassGivesNoLinks) {
  auto m = handmade(Direction::kEtoF, {{"<null>", "x", 1.0}, {"a", "y", 1.0}});
  EXPECT_TRUE(viterbi_align(m, sp(0, {"a"}, {"x"})).alignment.links.empty());
}

TEST(Viterbi, TiesGoToEarlierPosition) {
  auto m = handmade(Direction::kEtoF, {{"a", "x", 0.5}, {"b", "x", 0.5}});
  const auto r = viterbi_align(m, sp(0, {"b", "a"}, {"x"}));
  EXPECT_EQ(r.alignment.links, (std::set<std::pair<int, int>>{{0, 0}}));
}

TEST(Viterbi, OutOfVocabularyCountedAndUnlinked) {
  auto m = handmade(Direction::kEtoF, {{"a", "x", 1.0}});
  const auto r = viterbi_align(m, sp(0, {"a"}, {"x", "q"}));
  EXPECT_EQ(r.oov_tokens, 1u);
  EXPECT_EQ(r.alignment.links, (std::set<std::pair<int, int>>{{0, 0}}));
}

TEST(Viterbi, ReverseDirectionIsStoredInEfSpace) {
  auto m = handmade(Direction::kFtoE, {{"x", "b", 1.0}});
  const auto r = viterbi_align(m, sp(0, {"a", "b"}, {"x"}));
  EXPECT_EQ(r.alignment.links, (std::set<std::pair<int, int>>{{1, 0}}));
  EXPECT_EQ(r.alignment.e_len, 2);
  EXPECT_EQ(r.alignment.f_len, 1);
}

TEST(Viterbi, IndependentOfPairId) {
  const auto cipher = make_cipher_corpus({});
  const auto model = train_aligner(cipher.pairs, Direction::kEtoF, 3, 3);
  for (std::size_t n = 0; n < 50; ++n) {
    auto relabeled = cipher.pairs[n];
    relabeled.id = 99999 - n;
    EXPECT_EQ(viterbi_align(model, cipher.pairs[n]).alignment, viterbi_align(model, relabeled).alignment);
  }
}

TEST(Symmetrize, SetOperations) {
  const auto fwd = links(2, 2, {{0, 0}, {1, 1}});
  const auto rev = links(2, 2, {{0, 0}});
  EXPECT_EQ(symmetrize(fwd, rev, Heuristic::kIntersection).links,
            (std::set<std::pair<int, int>>{{0, 0}}));
  EXPECT_EQ(symmetrize(fwd, rev, Heuristic::kUnion).links,
            (std::set<std::pair<int, int>>{{0, 0}, {1, 1}}));
}

TEST(Symmetrize, GrowDiagFinalAndHandTrace) {
  const auto fwd = links(2, 3, {{0, 0}, {1, 2}});
  const auto rev = links(2, 3, {{0, 0}, {1, 1}});
  EXPECT_EQ(symmetrize(fwd, rev, Heuristic::kGrowDiagFinalAnd).links,
            (std::set<std::pair<int, int>>{{0, 0}, {1, 1}, {1, 2}}));
}

TEST(Symmetrize, FinalAndAddsLinksWithBothEndsUnaligned) {
  // (2,2) is isolated from the intersection, so only final-and can add it.
  const auto fwd = links(3, 3, {{0, 0}, {2, 2}});
  const auto rev = links(3, 3, {{0, 0}});
  EXPECT_EQ(symmetrize(fwd, rev, Heuristic::kGrowDiagFinalAnd).links,
            (std::set<std::pair<int, int>>{{0, 0}, {2, 2}}));
}

TEST(Symmetrize, LengthMismatchIsFatal) {
  EXPECT_THROW(symmetrize(links(2, 2, {}), links(2, 3, {}), Heuristic::kUnion), DataError);
}

TEST(Symmetrize, ContainmentOnRandomAlignments) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const int e_len = 1 + static_cast<int>(rng() % 8), f_len = 1 + static_cast<int>(rng() % 8);
    Alignment fwd{{}, e_len, f_len}, rev{{}, e_len, f_len};
    for (int f = 0; f < f_len; ++f) {
      if (rng() % 4) fwd.links.emplace(static_cast<int>(rng() % e_len), f);
    }
    for (int e = 0; e < e_len; ++e) {
      if (rng() % 4) rev.links.emplace(e, static_cast<int>(rng() % f_len));
    }
    const auto inter = symmetrize(fwd, rev, Heuristic::kIntersection).links;
    const auto gdfa = symmetrize(fwd, rev, Heuristic::kGrowDiagFinalAnd).links;
    const auto uni = symmetrize(fwd, rev, Heuristic::kUnion).links;
    ASSERT_TRUE(std::includes(gdfa.begin(), gdfa.end(), inter.begin(), inter.end()));
    ASSERT_TRUE(std::includes(uni.begin(), uni.end(), gdfa.begin(), gdfa.end()));
  }
}

TEST(Dictionary, ThresholdRule) {
  auto ef = handmade(Direction::kEtoF, {{"a", "x", 0.95}, {"a", "y", 0.05}});
  auto fe = handmade(Direction::kFtoE, {{"x", "a", 0.7}, {"y", "a", 0.3}});
  const auto d = extract_dictionary(ef, fe, 0.5);
  ASSERT_EQ(d.e_to_f.size(), 1u);
  EXPECT_EQ(d.e_to_f.at("a").size(), 1u);
  EXPECT_TRUE(d.e_to_f.at("a").count("x"));
  EXPECT_TRUE(d.f_to_e.at("x").count("a"));
  EXPECT_FALSE(d.f_to_e.count("y"));
}

TEST(Dictionary, ThresholdOneIsNearEmptyOnSmoothedTable) {
  const auto cipher = make_cipher_corpus({});
  const auto ef = train_aligner(cipher.pairs, Direction::kEtoF, 5, 5);
  const auto fe = train_aligner(cipher.pairs, Direction::kFtoE, 5, 5);
  EXPECT_LE(extract_dictionary(ef, fe, 1.0).entry_count(), 2u);
  EXPECT_THROW(extract_dictionary(ef, fe, 0.0), UsageError);
  EXPECT_THROW(extract_dictionary(fe, ef, 0.5), UsageError);
}

TEST(Dictionary, MatchesCipherAtHalf) {
  const auto cipher = make_cipher_corpus({});
  const auto ef = train_aligner(cipher.pairs, Direction::kEtoF, 5, 5);
  const auto fe = train_aligner(cipher.pairs, Direction::kFtoE, 5, 5);
  const auto d = extract_dictionary(ef, fe, 0.5);
  int exact = 0;
  for (const auto& [src, tgt] : cipher.cipher) {
    auto it = d.e_to_f.find(src);
    exact += it != d.e_to_f.end() && it->second.size() == 1 && it->second.count(tgt);
  }
  EXPECT_GE(exact, 48);
}

TEST(Formats, AlignmentRoundTrip) {
  const std::vector<SentencePair> pairs = {sp(0, {"a", "b"}, {"x", "y", "z"}), sp(1, {"a"}, {"x"})};
  const std::vector<Alignment> al = {links(2, 3, {{0, 0}, {1, 2}}), links(1, 1, {})};
  std::stringstream buf;
  write_alignments(buf, al);
  EXPECT_EQ(buf.str(), "0-0 1-2\n\n");
  EXPECT_EQ(read_alignments(buf, pairs), al);
  std::stringstream bad("0-5\n\n");
  EXPECT_THROW(read_alignments(bad, pairs), DataError);
}

TEST(Formats, AlignerModelRoundTrip) {
  CipherOptions opt;
  opt.pairs = 200;
  opt.vocab = 20;
  const auto cipher = make_cipher_corpus(opt);
  const auto model = train_aligner(cipher.pairs, Direction::kFtoE, 3, 2);
  std::stringstream buf;
  save_ibm2(buf, model);
  const auto back = load_ibm2(buf);
  EXPECT_EQ(back.direction, model.direction);
  EXPECT_EQ(back.align_prob, model.align_prob);
  ASSERT_EQ(back.table.rows.size(), model.table.rows.size());
  for (std::size_t s = 0; s < model.table.rows.size(); ++s) EXPECT_EQ(back.table.rows[s], model.table.rows[s]);
  for (const auto& p : cipher.pairs) EXPECT_EQ(viterbi_align(back, p).alignment, viterbi_align(model, p).alignment);
  std::stringstream again;
  save_ibm2(again, back);
  EXPECT_EQ(again.str(), [&] {
    std::stringstream first;
    save_ibm2(first, model);
    return first.str();
  }());

  std::stringstream bad("ibm2 e2f\nvocab 2\na\n");
  EXPECT_THROW(load_ibm2(bad), DataError);
}

}  // namespace
}  // namespace divergescope
