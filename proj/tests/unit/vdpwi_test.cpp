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
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "divergescope/cipher.hpp"
#include "divergescope/datagen.hpp"
#include "divergescope/error.hpp"
#include "divergescope/vdpwi.hpp"
#include "fixtures.hpp"

namespace divergescope {
namespace {

using ad::Tensor;
using fixtures::cipher_embeddings;
using fixtures::tiny_config;


Tensor random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  std::vector<double> v(rows * cols);
  for (auto& x : v) x = n(rng);
  return Tensor::from({rows, cols}, std::move(v));
}

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

void expect_near(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "index " << i;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

TEST(Contextualize, SingleStepMatchesLstmEquations) {
  const auto model = VdpwiModel::initialize(tiny_config());
  const Tensor x = random_matrix(1, 4, 3);
  const auto states = contextualize(model, x);
  ASSERT_EQ(states.forward.shape(), (ad::Shape{1, 3}));
  for (const char* dir : {"fwd", "bwd"}) {
    const auto w = model.parameter(fmt::format("lstm.{}.w_ih", dir)).data();
    const auto b = model.parameter(fmt::format("lstm.{}.b", dir)).data();
    std::vector<double> gates(12);
    for (std::size_t g = 0; g < 12; ++g) {
      gates[g] = b[g];
      for (std::size_t d = 0; d < 4; ++d) gates[g] += x.data()[d] * w[d * 12 + g];
    }
    const auto& out = std::string(dir) == "fwd" ? states.forward : states.backward;
    for (std::size_t k = 0; k < 3; ++k) {
      const double cell = sigmoid(gates[k]) * std::tanh(gates[6 + k]);
      EXPECT_NEAR(out.data()[k], sigmoid(gates[9 + k]) * std::tanh(cell), 1e-14);
    }
  }
}

TEST(Contextualize, ZeroParametersGiveZeroStates) {
  auto model = VdpwiModel::initialize(tiny_config());
  for (auto& [name, t] : model.parameters) std::fill(t.mutable_data().begin(), t.mutable_data().end(), 0.0);
  const auto states = contextualize(model, random_matrix(5, 4, 1));
  for (double v : states.forward.data()) EXPECT_EQ(v, 0.0);
  for (double v : states.backward.data()) EXPECT_EQ(v, 0.0);
}

TEST(Contextualize, ReversalSwapsDirections) {
  auto model = VdpwiModel::initialize(tiny_config());
  for (const char* p : {"w_ih", "w_hh", "b"}) {
    const auto src = model.parameter(fmt::format("lstm.fwd.{}", p)).data();
    auto dst = model.parameter(fmt::format("lstm.bwd.{}", p));
    std::copy(src.begin(), src.end(), dst.mutable_data().begin());
  }
  const Tensor x = random_matrix(6, 4, 2);
  const auto a = contextualize(model, x);
  const auto b = contextualize(model, ad::reverse(x, 0));
  expect_near(values(b.forward), values(ad::reverse(a.backward, 0)), 1e-14);
  expect_near(values(b.backward), values(ad::reverse(a.forward, 0)), 1e-14);
}

BiStates states_of(const Tensor& fwd, const Tensor& bwd) { return {fwd, bwd}; }

TEST(SimilarityCube, ShapeAndIdentityCell) {
  const Tensor ef = random_matrix(3, 5, 1);
  const Tensor eb = random_matrix(3, 5, 2);
  Tensor ff = random_matrix(4, 5, 3);
  Tensor fb = random_matrix(4, 5, 4);
  // Make f position 2 identical to e position 1.
  for (std::size_t d = 0; d < 5; ++d) {
    ff.mutable_data()[2 * 5 + d] = ef.data()[1 * 5 + d];
    fb.mutable_data()[2 * 5 + d] = eb.data()[1 * 5 + d];
  }
  const auto cube = build_similarity_cube(states_of(ef, eb), states_of(ff, fb));
  ASSERT_EQ(cube.shape(), (ad::Shape{13, 3, 4}));
  for (std::size_t variant = 0; variant < 4; ++variant) {
    EXPECT_NEAR(cube.at({variant * 3, 1, 2}), 1.0, 1e-12);
    EXPECT_NEAR(cube.at({variant * 3 + 1, 1, 2}), 0.0, 1e-12);
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(cube.at({12, i, j}), 1.0);
  }
}

TEST(SimilarityCube, ChannelRanges) {
  const auto cube = build_similarity_cube(states_of(random_matrix(4, 3, 5), random_matrix(4, 3, 6)),
                                          states_of(random_matrix(5, 3, 7), random_matrix(5, 3, 8)));
  for (std::size_t variant = 0; variant < 4; ++variant) {
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        const double c = cube.at({variant * 3, i, j});
        EXPECT_LE(std::abs(c), 1.0 + 1e-12);
        EXPECT_LE(cube.at({variant * 3 + 1, i, j}), 0.0);  // negative distance
      }
    }
  }
}

TEST(SimilarityCube, ScalingFStates) {
  const auto e = states_of(random_matrix(3, 4, 1), random_matrix(3, 4, 2));
  const auto f = states_of(random_matrix(2, 4, 3), random_matrix(2, 4, 4));
  const auto f2 = states_of(ad::scale(f.forward, 2.0), ad::scale(f.backward, 2.0));
  const auto a = build_similarity_cube(e, f);
  const auto b = build_similarity_cube(e, f2);
  for (std::size_t variant = 0; variant < 4; ++variant) {
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        EXPECT_NEAR(b.at({variant * 3, i, j}), a.at({variant * 3, i, j}), 1e-12);
        EXPECT_NEAR(b.at({variant * 3 + 2, i, j}), 2 * a.at({variant * 3 + 2, i, j}), 1e-12);
      }
    }
  }
}

TEST(SimilarityCube, SwappingSidesTransposes) {
  const auto e = states_of(random_matrix(3, 4, 9), random_matrix(3, 4, 10));
  const auto f = states_of(random_matrix(5, 4, 11), random_matrix(5, 4, 12));
  const auto ef = build_similarity_cube(e, f);
  const auto fe = build_similarity_cube(f, e);
  for (std::size_t c = 0; c < 13; ++c) {
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(ef.at({c, i, j}), fe.at({c, j, i}), 1e-12);
    }
  }
}

Tensor cube_with(std::size_t m, std::size_t n, const std::vector<double>& cosine, const std::vector<double>& dot) {
  std::vector<double> data(13 * m * n, 0.0);
  std::copy(cosine.begin(), cosine.end(), data.begin() + static_cast<std::ptrdiff_t>(kConcatCosineChannel * m * n));
  std::copy(dot.begin(), dot.end(), data.begin() + static_cast<std::ptrdiff_t>(kConcatDotChannel * m * n));
  return Tensor::from({13, m, n}, std::move(data));
}

TEST(Focus, SingleCellIsFocal) {
  EXPECT_EQ(focus_mask(cube_with(1, 1, {0.3}, {0.3})), (std::vector<double>{1.0}));
}

TEST(Focus, HandTracedTwoByTwo) {
  const auto mask = focus_mask(cube_with(2, 2, {0.9, 0.1, 0.2, 0.8}, {0.9, 0.1, 0.2, 0.8}));
  EXPECT_EQ(mask, (std::vector<double>{1.0, 0.1, 0.1, 1.0}));
}

TEST(Focus, SecondPassAddsCells) {
  // Cosine picks the diagonal, dot picks the anti-diagonal.
  const auto mask = focus_mask(cube_with(2, 2, {0.9, 0.1, 0.2, 0.8}, {0.0, 5.0, 4.0, 0.0}));
  EXPECT_EQ(mask, (std::vector<double>{1.0, 1.0, 1.0, 1.0}));
}

TEST(Focus, AllEqualGivesMinLengthCells) {
  const auto mask = focus_mask(cube_with(3, 5, std::vector<double>(15, 0.5), std::vector<double>(15, 0.5)));
  EXPECT_EQ(std::count(mask.begin(), mask.end(), 1.0), 3);
  EXPECT_EQ(mask[0], 1.0);
  EXPECT_EQ(mask[1 * 5 + 1], 1.0);
  EXPECT_EQ(mask[2 * 5 + 2], 1.0);
}

TEST(Focus, RandomCubesKeepMaskInvariants) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng() % 7;
    const std::size_t n = 1 + rng() % 7;
    std::vector<double> cosine(m * n);
    std::vector<double> dot(m * n);
    for (auto& v : cosine) v = u(rng);
    for (auto& v : dot) v = u(rng);
    const auto cube = cube_with(m, n, cosine, dot);
    const auto mask = focus_mask(cube);
    std::vector<int> rows(m, 0), cols(n, 0);
    std::size_t focal = 0;
    for (std::size_t c = 0; c < m * n; ++c) {
      ASSERT_TRUE(mask[c] == 1.0 || mask[c] == 0.1);
      if (mask[c] == 1.0) {
        ++focal;
        ++rows[c / n];
        ++cols[c % n];
      }
    }
    EXPECT_GE(focal, std::min(m, n));
    EXPECT_LE(focal, 2 * std::min(m, n));
    for (int r : rows) EXPECT_LE(r, 2);
    for (int c : cols) EXPECT_LE(c, 2);
    // The weights scale every channel of a cell alike.
    const auto focused = apply_focus(cube);
    for (std::size_t ch : {std::size_t{0}, kConcatCosineChannel, std::size_t{12}}) {
      for (std::size_t cell = 0; cell < m * n; ++cell) {
        EXPECT_DOUBLE_EQ(focused.data()[ch * m * n + cell], cube.data()[ch * m * n + cell] * mask[cell]);
      }
    }
  }
}

Tensor random_cube(std::size_t m, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(13 * m * n);
  for (auto& x : v) x = u(rng);
  return Tensor::from({13, m, n}, std::move(v));
}

TEST(CnnScore, OutputIsADistribution) {
  const auto model = VdpwiModel::initialize(VdpwiConfig::desk(8));
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto p = cnn_score(model, random_cube(3 + s, 10 - s, s));
    ASSERT_EQ(p.size(), 2u);
    EXPECT_NEAR(p.data()[0] + p.data()[1], 1.0, 1e-6);
  }
}

TEST(CnnScore, ZeroFinalLayerGivesHalf) {
  auto model = VdpwiModel::initialize(VdpwiConfig::desk(8));
  for (const char* name : {"out.w", "out.b"}) {
    auto t = model.parameter(name);
    std::fill(t.mutable_data().begin(), t.mutable_data().end(), 0.0);
  }
  const auto p = cnn_score(model, random_cube(4, 6, 3));
  EXPECT_DOUBLE_EQ(p.data()[0], 0.5);
  EXPECT_DOUBLE_EQ(p.data()[1], 0.5);
}

TEST(CnnScore, ChannelsAreNotExchangeable) {
  const auto model = VdpwiModel::initialize(VdpwiConfig::desk(8));
  const auto cube = random_cube(5, 5, 4);
  std::vector<double> swapped(cube.data().begin(), cube.data().end());
  std::swap_ranges(swapped.begin(), swapped.begin() + 25, swapped.begin() + 25);
  const auto a = cnn_score(model, cube);
  const auto b = cnn_score(model, Tensor::from({13, 5, 5}, swapped));
  EXPECT_NE(a.data()[1], b.data()[1]);
}

TEST(CnnScore, GridOverflowRejected) {
  const auto model = VdpwiModel::initialize(tiny_config());
  EXPECT_THROW(cnn_score(model, random_cube(9, 3, 1)), UsageError);
}

TEST(Config, Validation) {
  EXPECT_NO_THROW(VdpwiConfig{}.validate());
  EXPECT_NO_THROW(VdpwiConfig::desk(50).validate());
  auto c = tiny_config();
  c.cnn = {{2, 3, 2}};
  EXPECT_THROW(c.validate(), UsageError);  // 8 -> 4, not 1
  c = tiny_config();
  c.lstm_hidden_dim = 0;
  EXPECT_THROW(c.validate(), UsageError);
  EXPECT_EQ(VdpwiConfig{}.clamp_length(), 32u);
}

TEST(Config, CnnSpecRoundTrip) {
  const auto stages = parse_cnn_spec("128x3x2,64x5x4");
  EXPECT_EQ(stages, (std::vector<CnnStage>{{128, 3, 2}, {64, 5, 4}}));
  EXPECT_EQ(format_cnn_spec(stages), "128x3x2,64x5x4");
  EXPECT_THROW(parse_cnn_spec("128x3"), UsageError);
}


TEST(EndToEnd, TinyConfigGradientCheck) { EXPECT_LT(fixtures::tiny_vdpwi_worst_error(), 1e-3); }

struct CipherData {
  CipherCorpus corpus;
  EmbeddingTable embeddings;
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> validation;
};

const CipherData& cipher_data() {
  static const CipherData data = [] {
    CipherData d;
    CipherOptions co;
    co.pairs = 60;
    co.vocab = 20;
    co.min_length = 3;
    co.max_length = 8;
    co.seed = 5;
    d.corpus = make_cipher_corpus(co);
    d.embeddings = cipher_embeddings(d.corpus, 8, 6);
    BilingualDictionary dict;
    for (const auto& [e, f] : d.corpus.cipher) {
      dict.e_to_f[e][f] = 1.0;
      dict.f_to_e[f][e] = 1.0;
    }
    const std::vector<SentencePair> pos(d.corpus.pairs.begin(), d.corpus.pairs.begin() + 10);
    const std::vector<SentencePair> held(d.corpus.pairs.begin() + 10, d.corpus.pairs.end());
    NegativeOptions no;
    no.min_coverage = 0.0;
    d.train = assemble_dataset(pos, generate_negatives(pos, dict, no), 4, 1).examples;
    d.validation = assemble_dataset(held, generate_negatives(held, dict, no), 1, 2).examples;
    return d;
  }();
  return data;
}

VdpwiConfig small_train_config(std::size_t epochs) {
  auto c = VdpwiConfig::desk(8);
  c.lstm_hidden_dim = 8;
  c.cnn = {{8, 3, 4}, {8, 3, 4}};
  c.fc_dim = 16;
  c.epochs = epochs;
  c.learning_rate = 3e-3;
  return c;
}

TEST(Train, KlDropsBelowInitialOnFiftyExamples) {
  const auto& d = cipher_data();
  ASSERT_EQ(d.train.size(), 50u);
  const auto r = train_vdpwi(d.train, d.validation, small_train_config(6), d.embeddings);
  ASSERT_EQ(r.history.size(), 6u);
  EXPECT_LT(r.history.back().train_kl, r.initial_train_kl);
}

TEST(Train, UndefinedPearsonSelectsLastEpoch) {
  const auto& d = cipher_data();
  std::vector<LabeledPair> same;
  for (const auto& ex : d.validation) {
    if (ex.label == Label::kEquivalent) same.push_back(ex);
  }
  const auto r = train_vdpwi(d.train, same, small_train_config(3), d.embeddings);
  EXPECT_EQ(r.selected_epoch, 3u);
  for (const auto& rec : r.history) EXPECT_EQ(rec.validation_pearson, -1.0);
  EXPECT_TRUE(std::any_of(r.warnings.begin(), r.warnings.end(),
                          [](const std::string& w) { return w.find("Pearson undefined") != std::string::npos; }));
}

double offline_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

TEST(Train, SelectsArgmaxPearsonEpoch) {
  const auto& d = cipher_data();
  std::vector<double> gold;
  for (const auto& ex : d.validation) gold.push_back(ex.label == Label::kEquivalent ? 1.0 : 0.0);
  std::vector<double> recomputed;
  std::vector<std::vector<double>> epoch_scores;
  VdpwiTrainOptions opt;
  opt.on_epoch = [&](std::size_t, const VdpwiModel& model) {
    std::vector<double> scores;
    for (const auto& ex : d.validation) scores.push_back(score_pair(model, ex.pair, d.embeddings));
    recomputed.push_back(offline_pearson(scores, gold));
    epoch_scores.push_back(scores);
  };
  const auto r = train_vdpwi(d.train, d.validation, small_train_config(5), d.embeddings, opt);
  ASSERT_EQ(recomputed.size(), 5u);
  std::size_t best = 0;
  for (std::size_t k = 0; k < recomputed.size(); ++k) {
    EXPECT_NEAR(recomputed[k], r.history[k].validation_pearson, 1e-9);
    if (recomputed[k] >= recomputed[best]) best = k;
  }
  EXPECT_EQ(r.selected_epoch, best + 1);
  // The returned model is the snapshot of that epoch.
  for (std::size_t i = 0; i < d.validation.size(); ++i) {
    EXPECT_DOUBLE_EQ(score_pair(r.model, d.validation[i].pair, d.embeddings), epoch_scores[best][i]);
  }
}

TEST(Train, EmbeddingDimensionMismatchRejected) {
  const auto& d = cipher_data();
  EXPECT_THROW(train_vdpwi(d.train, d.validation, VdpwiConfig::desk(16), d.embeddings), UsageError);
}

TEST(Score, RangeDeterminismAndThreads) {
  const auto& d = cipher_data();
  const auto model = VdpwiModel::initialize(small_train_config(1));
  std::vector<SentencePair> pairs;
  for (const auto& ex : d.validation) pairs.push_back(ex.pair);
  const auto one = score_pairs(model, pairs, d.embeddings, 1);
  const auto four = score_pairs(model, pairs, d.embeddings, 4);
  EXPECT_EQ(one, four);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_GE(one[i].score, 0.0);
    EXPECT_LE(one[i].score, 1.0);
    EXPECT_EQ(one[i].pair_id, pairs[i].id);
    EXPECT_EQ(score_pair(model, pairs[i], d.embeddings), one[i].score);
  }
}

TEST(Score, LongSentencesAreTruncated) {
  const auto& d = cipher_data();
  const auto model = VdpwiModel::initialize(tiny_config());
  SentencePair longer{0, {}, {}};
  for (int i = 0; i < 20; ++i) {
    longer.e_tokens.push_back("e1");
    longer.f_tokens.push_back("f1");
  }
  EXPECT_EQ(count_truncated({longer}, model.config), 1u);
  const auto embeddings = cipher_embeddings(d.corpus, 4, 1);
  const double s = score_pair(model, longer, embeddings);
  EXPECT_GE(s, 0.0);
  EXPECT_LE(s, 1.0);
}

TEST(Checkpoint, RoundTripKeepsScores) {
  const auto& d = cipher_data();
  const auto model = VdpwiModel::initialize(small_train_config(1));
  std::stringstream buffer;
  save_vdpwi(buffer, model);
  const auto loaded = load_vdpwi(buffer);
  EXPECT_EQ(loaded.config, model.config);
  for (const auto& ex : d.validation) {
    EXPECT_EQ(score_pair(loaded, ex.pair, d.embeddings), score_pair(model, ex.pair, d.embeddings));
  }
}

TEST(Checkpoint, MissingHeaderRejected) {
  std::stringstream buffer("fc.w 1 1\n0\n");
  EXPECT_THROW(load_vdpwi(buffer), DataError);
}

TEST(Pearson, UndefinedOnConstantInput) {
  EXPECT_FALSE(pearson({1, 1, 1}, {0, 1, 0}).has_value());
  EXPECT_NEAR(*pearson({1, 2, 3}, {2, 4, 7}), offline_pearson({1, 2, 3}, {2, 4, 7}), 1e-12);
}

}  // namespace
}  // namespace divergescope
