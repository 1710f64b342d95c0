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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "divergescope/align.hpp"
#include "divergescope/autodiff.hpp"
#include "divergescope/cipher.hpp"
#include "divergescope/features.hpp"
#include "divergescope/select.hpp"

namespace {

using namespace divergescope;

CipherCorpus cipher_of(std::size_t pairs) {
  CipherOptions options;
  options.pairs = pairs;
  return make_cipher_corpus(options);
}

void BM_Ibm1Iteration(benchmark::State& state) {
  const auto cipher = cipher_of(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(train_ibm1(cipher.pairs, Direction::kEtoF, 1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Ibm1Iteration)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_Ibm2Iteration(benchmark::State& state) {
  const auto cipher = cipher_of(static_cast<std::size_t>(state.range(0)));
  const auto init = train_ibm1(cipher.pairs, Direction::kEtoF, 2).table;
  for (auto _ : state) benchmark::DoNotOptimize(train_ibm2(cipher.pairs, Direction::kEtoF, 1, init));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Ibm2Iteration)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

ad::Tensor random_tensor(ad::Shape shape, std::mt19937_64& rng, bool requires_grad) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::normal_distribution<double> dist;
  std::vector<double> values(n);
  for (auto& v : values) v = dist(rng);
  return ad::Tensor::from(std::move(shape), std::move(values), requires_grad);
}

// Desk-scale first VDPWI conv stage on a 13-channel 32x32 cube.
void BM_Conv2dForwardBackward(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto input = random_tensor({1, 13, 32, 32}, rng, true);
  const auto kernel = random_tensor({16, 13, 3, 3}, rng, true);
  const auto bias = random_tensor({16}, rng, true);
  for (auto _ : state) {
    const auto loss = ad::sum(ad::conv2d(input, kernel, bias, 1, 1));
    ad::backward(loss);
    benchmark::DoNotOptimize(loss);
  }
}
BENCHMARK(BM_Conv2dForwardBackward)->Unit(benchmark::kMicrosecond);

void BM_SelectTop(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<SentencePair> pairs(n);
  for (std::size_t i = 0; i < n; ++i) pairs[i] = {i, {"e"}, {"f"}};
  const auto scores = random_scores(pairs, 1);
  for (auto _ : state) benchmark::DoNotOptimize(select_top(pairs, scores, 0.9));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SelectTop)->Arg(10'000)->Arg(120'000)->Unit(benchmark::kMillisecond);

void BM_ExtractFeatures(benchmark::State& state) {
  const auto cipher = cipher_of(1000);
  const auto ef = train_aligner(cipher.pairs, Direction::kEtoF, 3, 3);
  const auto fe = train_aligner(cipher.pairs, Direction::kFtoE, 3, 3);
  const auto dict = extract_dictionary(ef, fe, 0.5);
  const auto aligned = align_corpus(ef, fe, cipher.pairs);
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(extract_all(cipher.pairs, aligned, dict, kAllHeuristics, threads));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cipher.pairs.size()));
}
BENCHMARK(BM_ExtractFeatures)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
