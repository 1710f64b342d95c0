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

#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fixtures {

using namespace divergescope::ad;

Tensor project(const Tensor& out, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> w(out.size());
  for (auto& v : w) v = u(rng);
  return sum(mul(out, Tensor::from(out.shape(), std::move(w))));
}

namespace {

bool near_zero(std::span<const double> xs, double tol) {
  return std::any_of(xs.begin(), xs.end(), [tol](double x) { return std::abs(x) < tol; });
}

bool top_two_close(std::span<const double> xs, double tol) {
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.rbegin(), v.rend());
  return v.size() > 1 && v[0] - v[1] < tol;
}

}  // namespace

std::vector<OpCase> op_cases() {
  constexpr double kKink = 1e-3;
  std::vector<OpCase> cases;
  cases.push_back({"matmul", {{3, 4}, {4, 2}}, [](auto x) { return matmul(x[0], x[1]); }, {}});
  cases.push_back({"transpose", {{3, 2}}, [](auto x) { return transpose(x[0]); }, {}});
  cases.push_back({"add", {{3, 4}, {3, 4}}, [](auto x) { return add(x[0], x[1]); }, {}});
  cases.push_back({"add_broadcast", {{2, 3, 4}, {4}}, [](auto x) { return add(x[0], x[1]); }, {}});
  cases.push_back({"sub_broadcast", {{4}, {3, 4}}, [](auto x) { return sub(x[0], x[1]); }, {}});
  cases.push_back({"mul", {{3, 4}, {3, 4}}, [](auto x) { return mul(x[0], x[1]); }, {}});
  cases.push_back({"mul_broadcast", {{3, 4}, {4}}, [](auto x) { return mul(x[0], x[1]); }, {}});
  cases.push_back({"scale", {{5}}, [](auto x) { return scale(x[0], -2.5); }, {}});
  cases.push_back({"concat", {{2, 3}, {2, 1}, {2, 2}}, [](auto x) { return concat({x[0], x[1], x[2]}, 1); }, {}});
  cases.push_back({"concat_axis0", {{2, 3}, {1, 3}}, [](auto x) { return concat({x[0], x[1]}, 0); }, {}});
  cases.push_back({"slice", {{3, 5, 2}}, [](auto x) { return slice(x[0], 1, 1, 3); }, {}});
  cases.push_back({"reshape", {{2, 6}}, [](auto x) { return reshape(x[0], {3, 4}); }, {}});
  cases.push_back({"reverse", {{3, 4}}, [](auto x) { return reverse(x[0], 0); }, {}});
  cases.push_back({"reverse_axis1", {{3, 4}}, [](auto x) { return reverse(x[0], 1); }, {}});
  cases.push_back({"tanh", {{6}}, [](auto x) { return tanh(x[0]); }, {}, -2.0, 2.0});
  cases.push_back({"sigmoid", {{6}}, [](auto x) { return sigmoid(x[0]); }, {}, -4.0, 4.0});
  cases.push_back({"relu", {{8}}, [](auto x) { return relu(x[0]); },
                   [=](auto x) { return near_zero(x[0].data(), kKink); }});
  cases.push_back({"exp", {{6}}, [](auto x) { return exp(x[0]); }, {}});
  cases.push_back({"log", {{6}}, [](auto x) { return log(x[0]); }, {}, 0.2, 3.0});
  cases.push_back({"softmax", {{3, 4}}, [](auto x) { return softmax(x[0], 1); }, {}, -3.0, 3.0});
  cases.push_back({"softmax_axis0", {{3, 4}}, [](auto x) { return softmax(x[0], 0); }, {}, -3.0, 3.0});
  cases.push_back({"sum", {{2, 3}}, [](auto x) { return sum(x[0]); }, {}});
  cases.push_back({"mean", {{2, 3}}, [](auto x) { return mean(x[0]); }, {}});
  cases.push_back({"max", {{7}}, [](auto x) { return max(x[0]); },
                   [=](auto x) { return top_two_close(x[0].data(), kKink); }});
  cases.push_back({"conv2d", {{2, 2, 5, 5}, {3, 2, 3, 3}, {3}},
                   [](auto x) { return conv2d(x[0], x[1], x[2], 1, 1); }, {}});
  cases.push_back({"conv2d_stride2", {{1, 2, 6, 5}, {2, 2, 2, 3}},
                   [](auto x) { return conv2d(x[0], x[1], Tensor(), 2, 1); }, {}});
  cases.push_back({"maxpool2d", {{1, 2, 4, 4}}, [](auto x) { return maxpool2d(x[0], 2, 2); },
                   [=](auto x) {
                     const auto d = x[0].data();
                     for (std::size_t plane = 0; plane < 2; ++plane) {
                       for (std::size_t wr = 0; wr < 2; ++wr) {
                         for (std::size_t wc = 0; wc < 2; ++wc) {
                           std::vector<double> w;
                           for (std::size_t r = 0; r < 2; ++r) {
                             for (std::size_t c = 0; c < 2; ++c) {
                               w.push_back(d[plane * 16 + (wr * 2 + r) * 4 + wc * 2 + c]);
                             }
                           }
                           if (top_two_close(w, kKink)) return true;
                         }
                       }
                     }
                     return false;
                   }});
  cases.push_back({"pad2d", {{2, 3, 3}}, [](auto x) { return pad2d(x[0], 4, 5); }, {}});
  cases.push_back({"pairwise_dot", {{3, 4}, {2, 4}}, [](auto x) { return pairwise_dot(x[0], x[1]); }, {}});
  cases.push_back({"pairwise_cosine", {{3, 4}, {2, 4}}, [](auto x) { return pairwise_cosine(x[0], x[1]); }, {}});
  cases.push_back({"pairwise_l2", {{3, 4}, {2, 4}}, [](auto x) { return pairwise_l2(x[0], x[1]); }, {}});
  cases.push_back({"softmax_kl", {{2}},
                   [](auto x) { return kl_loss(softmax(x[0], 0), Tensor::from({2}, {0.3, 0.7})); },
                   {}, -3.0, 3.0});
  for (auto& c : cases) {
    c.scalar_output = c.name == "sum" || c.name == "mean" || c.name == "max" || c.name == "softmax_kl";
  }
  return cases;
}

double worst_op_error(const OpCase& c, std::size_t trials, std::uint64_t salt) {
  double worst = 0.0;
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    GradCheckOptions opt;
    opt.seed = trial * 7919 + salt;
    opt.low = c.low;
    opt.high = c.high;
    opt.near_kink = c.near_kink;
    auto fn = [&](std::span<const Tensor> x) {
      const auto out = c.op(x);
      return c.scalar_output ? out : project(out, trial);
    };
    worst = std::max(worst, grad_check(fn, c.shapes, opt).max_relative_error);
  }
  return worst;
}

divergescope::VdpwiConfig tiny_config() {
  divergescope::VdpwiConfig c;
  c.embedding_dim = 4;
  c.lstm_hidden_dim = 3;
  c.grid_size = 8;
  c.max_sentence_length = 8;
  c.cnn = {{2, 3, 8}};
  c.fc_dim = 4;
  c.seed = 11;
  return c;
}

divergescope::EmbeddingTable cipher_embeddings(const divergescope::CipherCorpus& corpus, std::size_t dim,
                                               std::uint64_t seed) {
  using divergescope::Language;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  divergescope::EmbeddingTable table(dim);
  for (const auto& [e, f] : corpus.cipher) {
    std::vector<double> v(dim);
    for (auto& x : v) x = n(rng);
    auto w = v;
    for (auto& x : w) x += 0.1 * n(rng);
    table.insert(divergescope::tagged(Language::kE, e), v);
    table.insert(divergescope::tagged(Language::kF, f), w);
  }
  return table;
}

double tiny_vdpwi_worst_error() {
  divergescope::CipherOptions co;
  co.pairs = 3;
  co.vocab = 6;
  co.max_length = 5;
  const auto corpus = divergescope::make_cipher_corpus(co);
  const auto embeddings = cipher_embeddings(corpus, 4, 2);
  const auto model = divergescope::VdpwiModel::initialize(tiny_config());
  const auto params = model.tensors();
  double worst = 0.0;
  for (const auto& pair : corpus.pairs) {
    for (const bool equivalent : {true, false}) {
      const Tensor gold = equivalent ? Tensor::from({2}, {0, 1}) : Tensor::from({2}, {1, 0});
      auto fn = [&](std::span<const Tensor>) { return kl_loss(divergescope::forward(model, pair, embeddings), gold); };
      worst = std::max(worst, grad_check_at(fn, params, 1e-5).max_relative_error);
    }
  }
  return worst;
}

}  // namespace fixtures
