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

#include "divergescope/cipher.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "divergescope/error.hpp"

namespace divergescope {

CipherCorpus make_cipher_corpus(const CipherOptions& options) {
  if (options.vocab == 0 || options.min_length == 0 || options.min_length > options.max_length) {
    throw UsageError("cipher corpus needs vocab > 0 and 0 < min_length <= max_length");
  }
  if (options.noise < 0.0 || options.noise > 1.0) {
    throw UsageError(fmt::format("cipher noise must be in [0,1], got {}", options.noise));
  }
  std::mt19937_64 rng(options.seed);

  std::vector<std::size_t> perm(options.vocab);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  CipherCorpus corpus;
  std::vector<std::string> source_words(options.vocab), target_words(options.vocab);
  for (std::size_t k = 0; k < options.vocab; ++k) {
    source_words[k] = fmt::format("e{}", k);
    target_words[k] = fmt::format("f{}", k);
  }
  for (std::size_t k = 0; k < options.vocab; ++k) {
    corpus.cipher[source_words[k]] = target_words[perm[k]];
  }

  std::vector<double> weights(options.vocab);
  for (std::size_t k = 0; k < options.vocab; ++k) {
    weights[k] = 1.0 / std::pow(static_cast<double>(k + 1), options.zipf_exponent);
  }
  std::discrete_distribution<std::size_t> draw_source(weights.begin(), weights.end());
  std::uniform_int_distribution<std::size_t> draw_target(0, options.vocab - 1);
  std::uniform_int_distribution<std::size_t> draw_length(options.min_length, options.max_length);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> draw_kind(0, 2);

  corpus.pairs.reserve(options.pairs);
  for (std::size_t n = 0; n < options.pairs; ++n) {
    SentencePair pair;
    pair.id = n;
    const std::size_t length = draw_length(rng);
    std::vector<std::size_t> source(length);
    for (auto& w : source) w = draw_source(rng);
    for (auto w : source) pair.e_tokens.push_back(source_words[w]);

    Tokens target;
    for (auto w : source) {
      const std::string& clean = target_words[perm[w]];
      if (unit(rng) >= options.noise) {
        target.push_back(clean);
        continue;
      }
      switch (draw_kind(rng)) {
        case 0:
          target.push_back(target_words[draw_target(rng)]);
          break;
        case 1:
          break;
        default:
          target.push_back(clean);
          target.push_back(target_words[draw_target(rng)]);
          break;
      }
    }
    if (target.empty()) target.push_back(target_words[perm[source.front()]]);
    for (std::size_t i = 0; i + 1 < target.size(); ++i) {
      if (options.swap_probability > 0.0 && unit(rng) < options.swap_probability) {
        std::swap(target[i], target[i + 1]);
        ++i;
      }
    }
    pair.f_tokens = std::move(target);
    corpus.pairs.push_back(std::move(pair));
  }
  return corpus;
}

}  // namespace divergescope
